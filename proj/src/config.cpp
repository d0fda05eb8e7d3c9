#include "weldplan/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace weldplan {

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& what)
{
    const auto m = node.Mark();
    if (m.line >= 0)
        throw ConfigError("line " + std::to_string(m.line + 1) + ": " + what);
    throw ConfigError(what);
}

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!node.IsMap())
        fail(node, where + " must be a mapping");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!ok.count(key))
            fail(kv.first, "unknown key '" + key + "' in " + where);
    }
}

double as_double(const YAML::Node& n, const std::string& what)
{
    if (!n.IsScalar())
        fail(n, what + " must be a number");
    const auto s = n.Scalar();
    if (s == "inf" || s == ".inf" || s == "infinity")
        return std::numeric_limits<double>::infinity();
    try {
        return n.as<double>();
    } catch (const YAML::Exception&) {
        fail(n, what + " must be a number, got '" + s + "'");
    }
}

int as_int(const YAML::Node& n, const std::string& what)
{
    try {
        return n.as<int>();
    } catch (const YAML::Exception&) {
        fail(n, what + " must be an integer");
    }
}

bool as_bool(const YAML::Node& n, const std::string& what)
{
    try {
        return n.as<bool>();
    } catch (const YAML::Exception&) {
        fail(n, what + " must be true or false");
    }
}

std::string as_string(const YAML::Node& n, const std::string& what)
{
    if (!n.IsScalar())
        fail(n, what + " must be a string");
    return n.Scalar();
}

template <std::size_t N>
std::array<double, N> as_array(const YAML::Node& n, const std::string& what)
{
    if (!n.IsSequence() || n.size() != N)
        fail(n, what + " must be a list of " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i)
        out[i] = as_double(n[i], what);
    return out;
}

Vec3 as_vec3(const YAML::Node& n, const std::string& what)
{
    const auto a = as_array<3>(n, what);
    return {a[0], a[1], a[2]};
}

// {translation: [x, y, z], rotation: [yaw, pitch, roll]} in mm and degrees, or a
// list of such maps composed left to right.
RigidTransform as_pose(const YAML::Node& n, const std::string& what)
{
    if (n.IsSequence()) {
        RigidTransform t;
        for (const auto& item : n)
            t = t * as_pose(item, what);
        return t;
    }
    check_keys(n, what, {"translation", "rotation"});
    Vec3 p = Vec3::Zero();
    Quat q = Quat::Identity();
    if (n["translation"])
        p = as_vec3(n["translation"], what + ".translation");
    if (n["rotation"]) {
        const Vec3 r = as_vec3(n["rotation"], what + ".rotation");
        q = quaternion_from_euler(deg2rad(r.x()), deg2rad(r.y()), deg2rad(r.z()));
    }
    return RigidTransform(q, p);
}

template <typename T, typename F>
void opt(const YAML::Node& parent, const char* key, T& out, F convert)
{
    if (const auto n = parent[key])
        out = convert(n, key);
}

Primitive as_primitive(const YAML::Node& n, const std::string& what, std::string& kind)
{
    for (const char* k : {"sphere", "capsule", "box", "cylinder"}) {
        if (!n[k])
            continue;
        kind = k;
        const YAML::Node s = n[k];
        const std::string w = what + "." + k;
        Primitive p;
        if (kind == "sphere") {
            check_keys(s, w, {"center", "radius"});
            p = Sphere{as_vec3(s["center"], w + ".center"), as_double(s["radius"], w + ".radius")};
        } else if (kind == "capsule") {
            check_keys(s, w, {"a", "b", "radius"});
            p = Capsule{as_vec3(s["a"], w + ".a"), as_vec3(s["b"], w + ".b"), as_double(s["radius"], w + ".radius")};
        } else if (kind == "box") {
            check_keys(s, w, {"pose", "half_extents"});
            RigidTransform pose;
            if (s["pose"])
                pose = as_pose(s["pose"], w + ".pose");
            p = Box{pose, as_vec3(s["half_extents"], w + ".half_extents")};
        } else {
            check_keys(s, w, {"pose", "radius", "half_length"});
            RigidTransform pose;
            if (s["pose"])
                pose = as_pose(s["pose"], w + ".pose");
            p = Cylinder{pose, as_double(s["radius"], w + ".radius"), as_double(s["half_length"], w + ".half_length")};
        }
        try {
            validate(p);
        } catch (const InvalidArgument& e) {
            fail(s, w + ": " + e.what());
        }
        return p;
    }
    fail(n, what + " needs one of sphere, capsule, box, cylinder");
}

void parse_robot(const YAML::Node& r, WorkcellConfig& c)
{
    check_keys(r, "robot", {"name", "base", "joints", "tool", "proxy_radii", "exempt_frames", "safety_margin", "home"});
    opt(r, "name", c.chain.name, as_string);
    if (r["base"])
        c.chain.base = as_pose(r["base"], "robot.base");
    if (r["tool"])
        c.chain.tool = as_pose(r["tool"], "robot.tool");
    if (const auto j = r["joints"]) {
        if (!j.IsSequence() || j.size() != kDof)
            fail(j, "robot.joints must list 6 joints");
        for (std::size_t i = 0; i < kDof; ++i) {
            const std::string w = "robot.joints[" + std::to_string(i) + "]";
            check_keys(j[i], w, {"a", "alpha", "d", "theta_offset", "limits"});
            DhJoint dh;
            opt(j[i], "a", dh.a, as_double);
            opt(j[i], "d", dh.d, as_double);
            double alpha = 0.0, offset = 0.0;
            opt(j[i], "alpha", alpha, as_double);
            opt(j[i], "theta_offset", offset, as_double);
            dh.alpha = deg2rad(alpha);
            dh.theta_offset = deg2rad(offset);
            const auto lim = as_array<2>(j[i]["limits"], w + ".limits");
            dh.lower = deg2rad(lim[0]);
            dh.upper = deg2rad(lim[1]);
            c.chain.joints[i] = dh;
        }
    }
    if (r["proxy_radii"])
        c.proxy_radii = as_array<8>(r["proxy_radii"], "robot.proxy_radii");
    if (const auto e = r["exempt_frames"]) {
        if (!e.IsSequence())
            fail(e, "robot.exempt_frames must be a list of pairs");
        c.exempt_frames.clear();
        for (const auto& pair : e) {
            const auto a = as_array<2>(pair, "robot.exempt_frames");
            c.exempt_frames.emplace_back(static_cast<std::size_t>(a[0]), static_cast<std::size_t>(a[1]));
        }
    }
    opt(r, "safety_margin", c.safety_margin, as_double);
    if (r["home"]) {
        const auto h = as_array<6>(r["home"], "robot.home");
        for (std::size_t i = 0; i < kDof; ++i)
            c.home[i] = deg2rad(h[i]);
    }
}

void parse_icp(const YAML::Node& n, const std::string& what, IcpParams& p, bool* centroid)
{
    if (centroid)
        check_keys(n, what, {"max_iterations", "correspondence_cutoff", "epsilon", "centroid_init"});
    else
        check_keys(n, what, {"max_iterations", "correspondence_cutoff", "epsilon"});
    opt(n, "max_iterations", p.max_iterations, as_int);
    opt(n, "correspondence_cutoff", p.correspondence_cutoff, as_double);
    opt(n, "epsilon", p.epsilon, as_double);
    if (centroid)
        opt(n, "centroid_init", *centroid, as_bool);
}

void parse_perception(const YAML::Node& n, WorkcellConfig& c)
{
    check_keys(n, "perception", {"rig", "sensor", "don", "icp", "sweep_icp"});
    if (const auto r = n["rig"]) {
        check_keys(r, "perception.rig", {"radius_factor", "width", "height", "fov"});
        opt(r, "radius_factor", c.rig.radius_factor, as_double);
        opt(r, "width", c.rig.width, as_int);
        opt(r, "height", c.rig.height, as_int);
        if (r["fov"])
            c.rig.fov = deg2rad(as_double(r["fov"], "fov"));
    }
    if (const auto s = n["sensor"]) {
        check_keys(s, "perception.sensor",
                   {"cad_leaf", "sensor_leaf", "noise_sigma", "outlier_fraction", "registration_leaf", "segment_box"});
        opt(s, "cad_leaf", c.sensor.cad_leaf, as_double);
        opt(s, "sensor_leaf", c.sensor.sensor_leaf, as_double);
        opt(s, "noise_sigma", c.sensor.noise_sigma, as_double);
        opt(s, "outlier_fraction", c.sensor.outlier_fraction, as_double);
        opt(s, "registration_leaf", c.sensor.registration_leaf, as_double);
        if (const auto b = s["segment_box"]) {
            check_keys(b, "perception.sensor.segment_box", {"min", "max"});
            c.sensor.segment_box = {as_vec3(b["min"], "segment_box.min"), as_vec3(b["max"], "segment_box.max")};
        }
    }
    if (const auto d = n["don"]) {
        check_keys(d, "perception.don", {"small_radius", "large_radius", "threshold"});
        opt(d, "small_radius", c.don.small_radius, as_double);
        opt(d, "large_radius", c.don.large_radius, as_double);
        opt(d, "threshold", c.don.threshold, as_double);
    }
    if (const auto i = n["icp"])
        parse_icp(i, "perception.icp", c.icp, &c.icp_centroid_init);
    if (const auto i = n["sweep_icp"])
        parse_icp(i, "perception.sweep_icp", c.sweep_icp, nullptr);
}

void parse_planner(const YAML::Node& n, WorkcellConfig& c)
{
    check_keys(n, "planner", {"extension_step", "goal_bias", "motion_resolution", "clearance_padding", "weights",
                              "orientation_weight", "cost_driven", "bitrrt", "rrtstar", "prmstar", "lbtrrt"});
    auto& s = c.planner;
    opt(n, "extension_step", c.extension_step, as_double);
    opt(n, "goal_bias", c.goal_bias, as_double);
    opt(n, "motion_resolution", s.motion.resolution, as_double);
    opt(n, "clearance_padding", s.clearance_padding, as_double);
    if (n["weights"]) {
        const auto w = as_array<6>(n["weights"], "planner.weights");
        for (std::size_t i = 0; i < kDof; ++i)
            s.weights[static_cast<Eigen::Index>(i)] = w[i];
    }
    opt(n, "orientation_weight", c.orientation_weight, as_double);
    opt(n, "cost_driven", c.cost_driven, as_bool);
    if (const auto b = n["bitrrt"]) {
        check_keys(b, "planner.bitrrt", {"max_iterations", "temperature_rate", "max_fails", "initial_temperature"});
        opt(b, "max_iterations", s.max_iterations, as_int);
        opt(b, "temperature_rate", s.transition.temperature_rate, as_double);
        opt(b, "max_fails", s.transition.max_fails, as_int);
        opt(b, "initial_temperature", s.transition.initial_temperature, as_double);
    }
    if (const auto b = n["rrtstar"]) {
        check_keys(b, "planner.rrtstar", {"iterations", "max_radius"});
        opt(b, "iterations", s.rrt_star_iterations, as_int);
        opt(b, "max_radius", s.rrt_star_max_radius, as_double);
    }
    if (const auto b = n["prmstar"]) {
        check_keys(b, "planner.prmstar", {"samples"});
        opt(b, "samples", s.prm_samples, as_int);
    }
    if (const auto b = n["lbtrrt"]) {
        check_keys(b, "planner.lbtrrt", {"iterations", "epsilon"});
        opt(b, "iterations", s.lbt_iterations, as_int);
        opt(b, "epsilon", s.lbt_epsilon, as_double);
    }
}

} // namespace

void WorkcellConfig::validate() const
{
    try {
        chain.validate();
        planner.validate();
        don.validate();
        icp.validate();
        sweep_icp.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (!workpiece_mesh.empty() && !std::filesystem::exists(workpiece_mesh))
        throw ConfigError("workpiece mesh '" + workpiece_mesh.string() + "' does not exist");
    if (goals.empty())
        throw ConfigError("at least one goal is required");
    for (std::size_t i = 0; i < goals.size(); ++i) {
        for (std::size_t j = i + 1; j < goals.size(); ++j) {
            if (goals[i].name == goals[j].name)
                throw ConfigError("duplicate goal '" + goals[i].name + "'");
        }
    }
    for (const auto& o : obstacles) {
        if (std::count_if(obstacles.begin(), obstacles.end(), [&](const auto& x) { return x.name == o.name; }) > 1)
            throw ConfigError("duplicate obstacle '" + o.name + "'");
    }
    if (!(safety_margin >= 0.0))
        throw ConfigError("safety margin must be non-negative");
    if (!chain.within_limits(home))
        throw ConfigError("home configuration is outside the joint limits");
    for (std::size_t i = 0; i < exempt_frames.size(); ++i) {
        if (exempt_frames[i].first > kDof + 1 || exempt_frames[i].second > kDof + 1)
            throw ConfigError("exempt frame index out of range");
    }
    if (!(rig.radius_factor > 1.0) || rig.width < 1 || rig.height < 1 || !(rig.fov > 0.0 && rig.fov < kPi))
        throw ConfigError("camera rig parameters out of range");
    if (!(sensor.cad_leaf > 0.0) || !(sensor.sensor_leaf > 0.0) || !(sensor.registration_leaf > 0.0))
        throw ConfigError("voxel leaf sizes must be positive");
    if (!(sensor.noise_sigma >= 0.0) || !(sensor.outlier_fraction >= 0.0 && sensor.outlier_fraction < 1.0))
        throw ConfigError("sensor noise parameters out of range");
    if (!sensor.segment_box.valid())
        throw ConfigError("segment box must have min <= max");
    if (!(extension_step > 0.0) || !(goal_bias >= 0.0 && goal_bias <= 1.0))
        throw ConfigError("extension step or goal bias out of range");
    if (!(orientation_weight >= 0.0))
        throw ConfigError("orientation weight must be non-negative");
    if (bench.trials < 1 || !(bench.time_budget > 0.0) || bench.cost_subdivisions < 1 ||
        !(bench.consistency_bound > 0.0))
        throw ConfigError("bench parameters out of range");
}

const GoalConfig& WorkcellConfig::goal(const std::string& name) const
{
    for (const auto& g : goals) {
        if (g.name == name)
            return g;
    }
    throw ConfigError("unknown goal '" + name + "'");
}

WorkcellConfig parse_config(const std::string& text, const std::filesystem::path& base_dir)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    WorkcellConfig c;
    c.chain = make_reference_chain();
    c.sensor.segment_box = {Vec3(-800, -800, -160), Vec3(800, 800, 900)};
    c.sweep_icp.max_iterations = 60;
    c.sweep_icp.correspondence_cutoff = 300.0;
    if (!root || root.IsNull())
        throw ConfigError("config is empty");
    check_keys(root, "config", {"seed", "robot", "workpiece", "obstacles", "perception", "planner", "goals", "bench"});
    if (const auto s = root["seed"]) {
        try {
            c.seed = s.as<std::uint64_t>();
        } catch (const YAML::Exception&) {
            fail(s, "seed must be an unsigned 64-bit integer");
        }
    }
    if (const auto r = root["robot"])
        parse_robot(r, c);
    if (const auto w = root["workpiece"]) {
        check_keys(w, "workpiece", {"mesh", "pose"});
        if (w["mesh"]) {
            std::filesystem::path p = as_string(w["mesh"], "workpiece.mesh");
            c.workpiece_mesh = p.is_absolute() ? p : base_dir / p;
        }
        if (w["pose"])
            c.workpiece_pose = as_pose(w["pose"], "workpiece.pose");
    }
    if (const auto obs = root["obstacles"]) {
        if (!obs.IsSequence())
            fail(obs, "obstacles must be a list");
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const auto& o = obs[i];
            const std::string w = "obstacles[" + std::to_string(i) + "]";
            check_keys(o, w, {"name", "sphere", "capsule", "box", "cylinder", "attached", "fixture"});
            ObstacleConfig oc;
            oc.name = o["name"] ? as_string(o["name"], w + ".name") : w;
            std::string kind;
            oc.shape = as_primitive(o, w, kind);
            opt(o, "attached", oc.attached, as_bool);
            opt(o, "fixture", oc.fixture, as_bool);
            c.obstacles.push_back(std::move(oc));
        }
    }
    if (const auto p = root["perception"])
        parse_perception(p, c);
    if (const auto p = root["planner"])
        parse_planner(p, c);
    if (const auto g = root["goals"]) {
        if (!g.IsSequence())
            fail(g, "goals must be a list");
        for (std::size_t i = 0; i < g.size(); ++i) {
            const std::string w = "goals[" + std::to_string(i) + "]";
            check_keys(g[i], w, {"name", "frame", "pose"});
            GoalConfig gc;
            gc.name = as_string(g[i]["name"], w + ".name");
            if (g[i]["frame"]) {
                const auto f = as_string(g[i]["frame"], w + ".frame");
                if (f != "workpiece" && f != "world")
                    fail(g[i]["frame"], w + ".frame must be workpiece or world");
                gc.in_workpiece_frame = f == "workpiece";
            }
            gc.pose = as_pose(g[i]["pose"], w + ".pose");
            c.goals.push_back(gc);
        }
    }
    if (const auto b = root["bench"]) {
        check_keys(b, "bench", {"trials", "time_budget", "cost_subdivisions", "consistency_bound", "workers"});
        opt(b, "trials", c.bench.trials, as_int);
        opt(b, "time_budget", c.bench.time_budget, as_double);
        opt(b, "cost_subdivisions", c.bench.cost_subdivisions, as_int);
        opt(b, "consistency_bound", c.bench.consistency_bound, as_double);
        int workers = 0;
        opt(b, "workers", workers, as_int);
        if (workers < 0)
            fail(b["workers"], "bench.workers must be >= 0");
        c.bench.workers = static_cast<unsigned>(workers);
    }
    c.validate();
    return c;
}

WorkcellConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    WorkcellConfig c = parse_config(ss.str(), path.parent_path());
    c.source = path;
    return c;
}

} // namespace weldplan
