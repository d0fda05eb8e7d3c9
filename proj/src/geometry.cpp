#include "weldplan/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace weldplan {

bool is_finite(const Vec3& v) { return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z()); }

RigidTransform::RigidTransform(const Quat& rotation, const Vec3& translation)
    : rotation_(rotation.normalized()), translation_(translation)
{
}

RigidTransform RigidTransform::from_translation(double x, double y, double z) { return {Quat::Identity(), Vec3(x, y, z)}; }

RigidTransform RigidTransform::from_translation(const Vec3& t) { return {Quat::Identity(), t}; }

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle)
{
    return {Quat(Eigen::AngleAxisd(angle, axis.normalized())), Vec3::Zero()};
}

RigidTransform RigidTransform::from_matrix(const Mat4& m)
{
    const Mat3 r = m.topLeftCorner<3, 3>();
    return {Quat(r), m.topRightCorner<3, 1>()};
}

Mat4 RigidTransform::matrix() const
{
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation_matrix();
    m.topRightCorner<3, 1>() = translation_;
    return m;
}

RigidTransform RigidTransform::inverse() const
{
    const Quat inv = rotation_.conjugate();
    return {inv, -(inv * translation_)};
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const
{
    return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }

double rotation_distance(const Quat& a, const Quat& b)
{
    const double d = std::min(1.0, std::abs(a.normalized().dot(b.normalized())));
    return 2.0 * std::acos(d);
}

EulerZyx euler_from_quaternion(const Quat& q_in)
{
    const Quat q = q_in.normalized();
    const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
    EulerZyx e;
    const double sinp = 2.0 * (w * y - z * x);
    if (std::abs(sinp) >= 1.0 - 1e-12) {
        // Yaw and roll share an axis; fold everything into yaw.
        e.gimbal_lock = true;
        e.pitch = std::copysign(kPi / 2.0, sinp);
        e.roll = 0.0;
        e.yaw = (sinp > 0 ? -2.0 : 2.0) * std::atan2(x, w);
        e.yaw = std::remainder(e.yaw, 2.0 * kPi);
        return e;
    }
    e.pitch = std::asin(sinp);
    e.yaw = std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
    e.roll = std::atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y));
    return e;
}

Quat quaternion_from_euler(double yaw, double pitch, double roll)
{
    const double cy = std::cos(yaw / 2), sy = std::sin(yaw / 2);
    const double cp = std::cos(pitch / 2), sp = std::sin(pitch / 2);
    const double cr = std::cos(roll / 2), sr = std::sin(roll / 2);
    return Quat(cr * cp * cy + sr * sp * sy, sr * cp * cy - cr * sp * sy, cr * sp * cy + sr * cp * sy,
                cr * cp * sy - sr * sp * cy);
}

void PointCloud::validate() const
{
    for (const auto& p : points) {
        if (!is_finite(p))
            throw InvalidArgument("point cloud contains a non-finite point");
    }
    if (normals.empty())
        return;
    if (normals.size() != points.size())
        throw InvalidArgument("normal count does not match point count");
    for (const auto& n : normals) {
        if (!is_finite(n) || std::abs(n.norm() - 1.0) > 1e-6)
            throw InvalidArgument("point cloud normal is not unit length");
    }
}

PointCloud apply(const RigidTransform& t, const PointCloud& cloud)
{
    PointCloud out;
    out.points.reserve(cloud.points.size());
    for (const auto& p : cloud.points)
        out.points.push_back(t.apply(p));
    out.normals.reserve(cloud.normals.size());
    for (const auto& n : cloud.normals)
        out.normals.push_back(t.apply_direction(n));
    return out;
}

Vec3 centroid(const PointCloud& cloud)
{
    if (cloud.empty())
        return Vec3::Zero();
    Vec3 sum = Vec3::Zero();
    for (const auto& p : cloud.points)
        sum += p;
    return sum / static_cast<double>(cloud.size());
}

Aabb bounds(const std::vector<Vec3>& points)
{
    Aabb box;
    if (points.empty())
        return box;
    box.min = box.max = points.front();
    for (const auto& p : points) {
        box.min = box.min.cwiseMin(p);
        box.max = box.max.cwiseMax(p);
    }
    return box;
}

void TriangleMesh::validate() const
{
    for (const auto& v : vertices) {
        if (!is_finite(v))
            throw InvalidArgument("mesh contains a non-finite vertex");
    }
    for (const auto& t : triangles) {
        for (auto i : t) {
            if (i >= vertices.size())
                throw InvalidArgument("mesh triangle index out of range");
        }
        const Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
        if (0.5 * n.norm() <= 1e-9)
            throw InvalidArgument("mesh contains a degenerate triangle");
    }
}

void TriangleMesh::append(const TriangleMesh& other)
{
    const auto offset = static_cast<std::uint32_t>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    for (const auto& t : other.triangles)
        triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
}

double TriangleMesh::bounding_radius(const Vec3& center) const
{
    double r = 0.0;
    for (const auto& v : vertices)
        r = std::max(r, (v - center).norm());
    return r;
}

TriangleMesh apply(const RigidTransform& t, const TriangleMesh& mesh)
{
    TriangleMesh out = mesh;
    for (auto& v : out.vertices)
        v = t.apply(v);
    return out;
}

std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& direction, const Vec3& v0, const Vec3& v1,
                                         const Vec3& v2)
{
    const Vec3 e1 = v1 - v0;
    const Vec3 e2 = v2 - v0;
    const Vec3 pvec = direction.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < 1e-14)
        return std::nullopt;
    const double inv_det = 1.0 / det;
    const Vec3 tvec = origin - v0;
    const double u = tvec.dot(pvec) * inv_det;
    if (u < 0.0 || u > 1.0)
        return std::nullopt;
    const Vec3 qvec = tvec.cross(e1);
    const double v = direction.dot(qvec) * inv_det;
    if (v < 0.0 || u + v > 1.0)
        return std::nullopt;
    const double t = e2.dot(qvec) * inv_det;
    if (t < 0.0)
        return std::nullopt;
    return t;
}

std::optional<RayHit> ray_cast(const TriangleMesh& mesh, const Vec3& origin, const Vec3& direction)
{
    std::optional<RayHit> best;
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const auto& tri = mesh.triangles[i];
        const auto t = intersect_triangle(origin, direction, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                          mesh.vertices[tri[2]]);
        if (t && (!best || *t < best->distance))
            best = RayHit{origin + *t * direction, *t, i};
    }
    return best;
}

namespace {

// Slab test; returns entry distance or nullopt when the box is missed or lies
// beyond max_t.
std::optional<double> ray_box(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, double max_t)
{
    double t0 = 0.0, t1 = max_t;
    for (int a = 0; a < 3; ++a) {
        double tn = (box.min[a] - origin[a]) * inv_dir[a];
        double tf = (box.max[a] - origin[a]) * inv_dir[a];
        if (std::isnan(tn) || std::isnan(tf)) {
            // Ray parallel to and on the slab boundary.
            if (origin[a] < box.min[a] || origin[a] > box.max[a])
                return std::nullopt;
            continue;
        }
        if (tn > tf)
            std::swap(tn, tf);
        t0 = std::max(t0, tn);
        t1 = std::min(t1, tf);
        if (t0 > t1)
            return std::nullopt;
    }
    return t0;
}

} // namespace

MeshRayCaster::MeshRayCaster(TriangleMesh mesh) : mesh_(std::move(mesh))
{
    const auto n = static_cast<std::uint32_t>(mesh_.triangles.size());
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0U);
    tri_centers_.reserve(n);
    for (const auto& t : mesh_.triangles)
        tri_centers_.push_back((mesh_.vertices[t[0]] + mesh_.vertices[t[1]] + mesh_.vertices[t[2]]) / 3.0);
    if (n > 0) {
        nodes_.reserve(2 * n);
        build(0, n);
    }
}

std::uint32_t MeshRayCaster::build(std::uint32_t begin, std::uint32_t end)
{
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Aabb box;
    box.min = Vec3::Constant(std::numeric_limits<double>::infinity());
    box.max = -box.min;
    for (auto i = begin; i < end; ++i) {
        for (auto v : mesh_.triangles[order_[i]]) {
            box.min = box.min.cwiseMin(mesh_.vertices[v]);
            box.max = box.max.cwiseMax(mesh_.vertices[v]);
        }
    }
    // Pad so that hits exactly on a face of the box are not lost to rounding.
    const Vec3 pad = Vec3::Constant(1e-9 * (1.0 + (box.max - box.min).norm()));
    box.min -= pad;
    box.max += pad;
    nodes_[index].box = box;

    if (end - begin <= 4) {
        nodes_[index].first = begin;
        nodes_[index].count = end - begin;
        return index;
    }
    int axis = 0;
    (box.max - box.min).maxCoeff(&axis);
    const auto mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         if (tri_centers_[a][axis] != tri_centers_[b][axis])
                             return tri_centers_[a][axis] < tri_centers_[b][axis];
                         return a < b;
                     });
    build(begin, mid);
    const auto right = build(mid, end);
    nodes_[index].first = right;
    nodes_[index].count = 0;
    return index;
}

std::optional<RayHit> MeshRayCaster::cast(const Vec3& origin, const Vec3& direction) const
{
    if (nodes_.empty())
        return std::nullopt;
    const Vec3 inv_dir = direction.cwiseInverse();
    std::optional<RayHit> best;
    double best_t = std::numeric_limits<double>::infinity();

    std::uint32_t stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (!ray_box(node.box, origin, inv_dir, best_t))
            continue;
        if (node.count == 0) {
            const auto left = static_cast<std::uint32_t>(&node - nodes_.data()) + 1;
            stack[top++] = node.first;
            stack[top++] = left;
            continue;
        }
        for (auto k = node.first; k < node.first + node.count; ++k) {
            const auto tri_index = order_[k];
            const auto& tri = mesh_.triangles[tri_index];
            const auto t = intersect_triangle(origin, direction, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]],
                                              mesh_.vertices[tri[2]]);
            if (!t)
                continue;
            if (!best || *t < best_t || (*t == best_t && tri_index < best->triangle)) {
                best = RayHit{origin + *t * direction, *t, tri_index};
                best_t = *t;
            }
        }
    }
    return best;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    // Ericson, Real-Time Collision Detection, 5.1.5
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0)
        return a;
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3)
        return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0)
        return a + (d1 / (d1 - d3)) * ab;
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6)
        return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0)
        return a + (d2 / (d2 - d6)) * ac;
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

TriangleMesh make_box_mesh(const Vec3& h)
{
    TriangleMesh m;
    for (int i = 0; i < 8; ++i)
        m.vertices.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
    // Outward winding.
    m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                   {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
    return m;
}

TriangleMesh make_cylinder_mesh(double radius, double half_length, int segments)
{
    TriangleMesh m;
    const auto n = static_cast<std::uint32_t>(segments);
    for (std::uint32_t i = 0; i < n; ++i) {
        const double a = 2.0 * kPi * i / n;
        m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), -half_length);
        m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), half_length);
    }
    const std::uint32_t bottom = 2 * n, top = 2 * n + 1;
    m.vertices.emplace_back(0, 0, -half_length);
    m.vertices.emplace_back(0, 0, half_length);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t j = (i + 1) % n;
        const std::uint32_t b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
        m.triangles.push_back({b0, b1, t1});
        m.triangles.push_back({b0, t1, t0});
        m.triangles.push_back({bottom, b1, b0});
        m.triangles.push_back({top, t0, t1});
    }
    return m;
}

TriangleMesh make_uv_sphere_mesh(double radius, int stacks, int slices)
{
    TriangleMesh m;
    m.vertices.emplace_back(0, 0, radius);
    for (int i = 1; i < stacks; ++i) {
        const double phi = kPi * i / stacks;
        for (int j = 0; j < slices; ++j) {
            const double theta = 2.0 * kPi * j / slices;
            m.vertices.emplace_back(radius * std::sin(phi) * std::cos(theta), radius * std::sin(phi) * std::sin(theta),
                                    radius * std::cos(phi));
        }
    }
    m.vertices.emplace_back(0, 0, -radius);
    const auto s = static_cast<std::uint32_t>(slices);
    const auto ring = [&](int i, int j) { return 1 + static_cast<std::uint32_t>(i - 1) * s + (static_cast<std::uint32_t>(j) % s); };
    const auto south = static_cast<std::uint32_t>(m.vertices.size() - 1);
    for (int j = 0; j < slices; ++j)
        m.triangles.push_back({0, ring(1, j), ring(1, j + 1)});
    for (int i = 1; i < stacks - 1; ++i) {
        for (int j = 0; j < slices; ++j) {
            m.triangles.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
            m.triangles.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
        }
    }
    for (int j = 0; j < slices; ++j)
        m.triangles.push_back({south, ring(stacks - 1, j + 1), ring(stacks - 1, j)});
    return m;
}

} // namespace weldplan
