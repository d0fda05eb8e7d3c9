#include "weldplan/mesh_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace weldplan {

std::string format_double(double v)
{
    if (v == 0.0)
        return "0"; // also folds -0
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

struct PlyProperty {
    std::string name;
    bool is_list = false;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

struct PlyData {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<std::vector<std::uint32_t>> faces;
};

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path.string());
    return in;
}

double parse_number(const std::string& tok, std::size_t line)
{
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw ParseError("line " + std::to_string(line) + ": bad number '" + tok + "'");
    return v;
}

PlyData parse_ply(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line))
            return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        return true;
    };

    if (!next_line() || line != "ply")
        throw ParseError("missing 'ply' magic");
    std::vector<PlyElement> elements;
    bool have_format = false;
    for (;;) {
        if (!next_line())
            throw ParseError("unexpected end of PLY header");
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw.empty() || kw == "comment" || kw == "obj_info")
            continue;
        if (kw == "end_header")
            break;
        if (kw == "format") {
            std::string fmt, ver;
            ls >> fmt >> ver;
            if (fmt != "ascii")
                throw ParseError("only ASCII PLY is supported (got '" + fmt + "')");
            have_format = true;
        } else if (kw == "element") {
            PlyElement e;
            long long count = -1;
            ls >> e.name >> count;
            if (e.name.empty() || count < 0 || ls.fail())
                throw ParseError("line " + std::to_string(line_no) + ": malformed element");
            e.count = static_cast<std::size_t>(count);
            elements.push_back(std::move(e));
        } else if (kw == "property") {
            if (elements.empty())
                throw ParseError("line " + std::to_string(line_no) + ": property before element");
            PlyProperty p;
            std::string type;
            ls >> type;
            if (type == "list") {
                std::string ct, it;
                ls >> ct >> it >> p.name;
                p.is_list = true;
            } else {
                ls >> p.name;
            }
            if (p.name.empty())
                throw ParseError("line " + std::to_string(line_no) + ": malformed property");
            elements.back().properties.push_back(std::move(p));
        } else {
            throw ParseError("line " + std::to_string(line_no) + ": unknown header keyword '" + kw + "'");
        }
    }
    if (!have_format)
        throw ParseError("PLY header has no format line");

    PlyData data;
    for (const auto& e : elements) {
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < e.properties.size(); ++i)
            col[e.properties[i].name] = i;
        const bool is_vertex = e.name == "vertex";
        const bool is_face = e.name == "face";
        if (is_vertex && (!col.count("x") || !col.count("y") || !col.count("z")))
            throw ParseError("vertex element lacks x/y/z");
        const bool has_normals = is_vertex && col.count("nx") && col.count("ny") && col.count("nz");

        for (std::size_t r = 0; r < e.count; ++r) {
            if (!next_line())
                throw ParseError("unexpected end of PLY body in element '" + e.name + "'");
            std::istringstream ls(line);
            std::vector<double> scalars(e.properties.size(), 0.0);
            std::vector<std::uint32_t> list;
            for (std::size_t i = 0; i < e.properties.size(); ++i) {
                std::string tok;
                if (!(ls >> tok))
                    throw ParseError("line " + std::to_string(line_no) + ": too few values");
                if (!e.properties[i].is_list) {
                    scalars[i] = parse_number(tok, line_no);
                    continue;
                }
                const double n = parse_number(tok, line_no);
                if (n < 0 || n != std::floor(n))
                    throw ParseError("line " + std::to_string(line_no) + ": bad list length");
                std::vector<std::uint32_t> values;
                for (long k = 0; k < static_cast<long>(n); ++k) {
                    if (!(ls >> tok))
                        throw ParseError("line " + std::to_string(line_no) + ": truncated list");
                    const double v = parse_number(tok, line_no);
                    if (v < 0 || v != std::floor(v))
                        throw ParseError("line " + std::to_string(line_no) + ": bad index");
                    values.push_back(static_cast<std::uint32_t>(v));
                }
                if (e.properties[i].name == "vertex_indices" || e.properties[i].name == "vertex_index")
                    list = std::move(values);
            }
            std::string extra;
            if (ls >> extra)
                throw ParseError("line " + std::to_string(line_no) + ": trailing values");
            if (is_vertex) {
                data.points.emplace_back(scalars[col["x"]], scalars[col["y"]], scalars[col["z"]]);
                if (has_normals)
                    data.normals.emplace_back(scalars[col["nx"]], scalars[col["ny"]], scalars[col["nz"]]);
            } else if (is_face) {
                data.faces.push_back(std::move(list));
            }
        }
    }
    return data;
}

} // namespace

PointCloud read_ply_cloud(std::istream& in)
{
    PlyData data = parse_ply(in);
    PointCloud cloud{std::move(data.points), std::move(data.normals)};
    for (auto& n : cloud.normals) {
        // Tolerate normals written with limited precision.
        const double len = n.norm();
        if (len > 0.0 && std::abs(len - 1.0) < 1e-3)
            n /= len;
    }
    try {
        cloud.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    }
    return cloud;
}

PointCloud read_ply_cloud(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_ply_cloud(in);
}

TriangleMesh read_ply_mesh(std::istream& in)
{
    PlyData data = parse_ply(in);
    TriangleMesh mesh;
    mesh.vertices = std::move(data.points);
    for (const auto& f : data.faces) {
        if (f.size() < 3)
            throw ParseError("face with fewer than 3 vertices");
        for (std::size_t k = 1; k + 1 < f.size(); ++k)
            mesh.triangles.push_back({f[0], f[k], f[k + 1]});
    }
    try {
        mesh.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    }
    return mesh;
}

TriangleMesh read_ply_mesh(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_ply_mesh(in);
}

void write_ply_cloud(std::ostream& out, const PointCloud& cloud)
{
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
        << "property double x\nproperty double y\nproperty double z\n";
    if (cloud.has_normals())
        out << "property double nx\nproperty double ny\nproperty double nz\n";
    out << "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z());
        if (cloud.has_normals()) {
            const auto& n = cloud.normals[i];
            out << ' ' << format_double(n.x()) << ' ' << format_double(n.y()) << ' ' << format_double(n.z());
        }
        out << '\n';
    }
}

void write_ply_cloud(const std::filesystem::path& path, const PointCloud& cloud)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot write " + path.string());
    write_ply_cloud(out, cloud);
}

void write_ply_mesh(std::ostream& out, const TriangleMesh& mesh)
{
    out << "ply\nformat ascii 1.0\nelement vertex " << mesh.vertices.size() << "\n"
        << "property double x\nproperty double y\nproperty double z\n"
        << "element face " << mesh.triangles.size() << "\n"
        << "property list uchar uint vertex_indices\nend_header\n";
    for (const auto& v : mesh.vertices)
        out << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
    for (const auto& t : mesh.triangles)
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void write_ply_mesh(const std::filesystem::path& path, const TriangleMesh& mesh)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot write " + path.string());
    write_ply_mesh(out, mesh);
}

TriangleMesh read_stl_mesh(std::istream& in)
{
    TriangleMesh mesh;
    std::map<std::tuple<double, double, double>, std::uint32_t> welded;
    std::string tok;
    if (!(in >> tok) || tok != "solid")
        throw ParseError("missing 'solid' in ASCII STL");
    std::string rest;
    std::getline(in, rest);

    std::vector<std::uint32_t> facet;
    while (in >> tok) {
        if (tok == "vertex") {
            std::string sx, sy, sz;
            if (!(in >> sx >> sy >> sz))
                throw ParseError("truncated STL vertex");
            const double x = parse_number(sx, 0), y = parse_number(sy, 0), z = parse_number(sz, 0);
            const auto key = std::make_tuple(x, y, z);
            auto it = welded.find(key);
            if (it == welded.end()) {
                it = welded.emplace(key, static_cast<std::uint32_t>(mesh.vertices.size())).first;
                mesh.vertices.emplace_back(x, y, z);
            }
            facet.push_back(it->second);
        } else if (tok == "endloop") {
            if (facet.size() != 3)
                throw ParseError("STL facet is not a triangle");
            mesh.triangles.push_back({facet[0], facet[1], facet[2]});
            facet.clear();
        } else if (tok == "endsolid") {
            break;
        } else if (tok == "facet" || tok == "normal" || tok == "outer" || tok == "loop" || tok == "endfacet") {
            if (tok == "normal") {
                std::string a, b, c;
                in >> a >> b >> c;
            }
        } else {
            throw ParseError("unexpected STL token '" + tok + "'");
        }
    }
    if (tok != "endsolid")
        throw ParseError("missing 'endsolid' in ASCII STL");
    try {
        mesh.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    }
    return mesh;
}

TriangleMesh read_stl_mesh(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_stl_mesh(in);
}

TriangleMesh read_mesh(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    for (auto& c : ext)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".ply")
        return read_ply_mesh(path);
    if (ext == ".stl")
        return read_stl_mesh(path);
    throw ParseError("unsupported mesh format: " + path.string());
}

} // namespace weldplan
