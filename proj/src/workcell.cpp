#include "weldplan/workcell.hpp"

#include <algorithm>
#include <cmath>

#include "weldplan/mesh_io.hpp"

namespace weldplan {

std::vector<std::pair<std::string, Primitive>> tubular_joint_primitives(const TubularJointSpec& s)
{
    std::vector<std::pair<std::string, Primitive>> out;
    // Chord along y: rotate the local z axis onto y.
    out.emplace_back("chord", Cylinder{RigidTransform::rot_x(-kPi / 2), s.chord_radius, s.chord_half_length});
    const double top = s.chord_radius + s.brace_height;
    out.emplace_back("brace", Cylinder{RigidTransform::from_translation(0, 0, top / 2), s.brace_radius, top / 2});
    const double len = s.chord_radius / std::cos(s.inclined_angle) + s.inclined_length;
    for (int side : {-1, 1}) {
        const Vec3 foot(0, side * s.inclined_offset, 0);
        const Vec3 axis(0, side * std::sin(s.inclined_angle), std::cos(s.inclined_angle));
        const RigidTransform pose(Quat::FromTwoVectors(Vec3::UnitZ(), axis), foot + axis * (len / 2));
        out.emplace_back(side < 0 ? "brace_left" : "brace_right", Cylinder{pose, s.inclined_radius, len / 2});
    }
    return out;
}

TriangleMesh primitive_mesh(const Primitive& p, int segments)
{
    return std::visit(
        [segments](const auto& s) -> TriangleMesh {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Sphere>) {
                return apply(RigidTransform::from_translation(s.center),
                             make_uv_sphere_mesh(s.radius, segments / 2, segments));
            } else if constexpr (std::is_same_v<T, Capsule>) {
                const Vec3 d = s.b - s.a;
                TriangleMesh m = apply(RigidTransform::from_translation(s.a),
                                       make_uv_sphere_mesh(s.radius, segments / 2, segments));
                m.append(apply(RigidTransform::from_translation(s.b),
                               make_uv_sphere_mesh(s.radius, segments / 2, segments)));
                if (d.norm() > 1e-9) {
                    const RigidTransform pose(Quat::FromTwoVectors(Vec3::UnitZ(), d.normalized()), (s.a + s.b) / 2);
                    m.append(apply(pose, make_cylinder_mesh(s.radius, d.norm() / 2, segments)));
                }
                return m;
            } else if constexpr (std::is_same_v<T, Box>) {
                return apply(s.pose, make_box_mesh(s.half_extents));
            } else {
                return apply(s.pose, make_cylinder_mesh(s.radius, s.half_length, segments));
            }
        },
        p);
}

TriangleMesh make_tubular_joint_mesh(const TubularJointSpec& spec)
{
    TriangleMesh mesh;
    for (const auto& [name, prim] : tubular_joint_primitives(spec))
        mesh.append(primitive_mesh(prim, spec.segments));
    return mesh;
}

const WorkcellGoal& Workcell::goal(const std::string& name) const { return goals[goal_index(name)]; }

std::size_t Workcell::goal_index(const std::string& name) const
{
    for (std::size_t i = 0; i < goals.size(); ++i) {
        if (goals[i].name == name)
            return i;
    }
    throw ConfigError("unknown goal '" + name + "'");
}

Workcell build_workcell(const WorkcellConfig& config)
{
    config.validate();
    Workcell cell;
    cell.config = config;
    cell.workpiece = config.workpiece_mesh.empty() ? make_tubular_joint_mesh() : read_mesh(config.workpiece_mesh);
    cell.workpiece.validate();

    Scene& scene = cell.scene;
    scene.set_safety_margin(config.safety_margin);
    const RigidTransform& nominal = config.workpiece_pose;
    const RigidTransform to_workpiece = nominal.inverse();
    for (const auto& o : config.obstacles) {
        const Primitive world = o.attached ? transformed(o.shape, nominal) : o.shape;
        scene.add_obstacle(o.name, world, o.attached);
        if (o.fixture)
            cell.fixtures.append(primitive_mesh(transformed(world, to_workpiece)));
    }
    add_default_link_proxies(scene, config.chain, config.proxy_radii);
    for (const auto& [a, b] : config.exempt_frames)
        scene.exempt_frames(a, b);

    if (scene.in_collision(config.chain, config.home))
        throw ConfigError("home configuration collides");

    for (const auto& g : config.goals) {
        WorkcellGoal wg;
        wg.name = g.name;
        wg.pose = g.in_workpiece_frame ? nominal * g.pose : g.pose;
        wg.ik = ik(config.chain, wg.pose, config.home);
        if (!wg.ik.ok())
            throw ConfigError("goal '" + g.name + "' is unreachable (" + to_string(wg.ik.status) + ")");
        wg.q = wg.ik.q;
        const auto report = scene.collisions(config.chain, wg.q);
        if (report.colliding) {
            std::string what;
            for (const auto& p : report.pairs)
                what += " " + p.first + "/" + p.second;
            throw ConfigError("goal '" + g.name + "' configuration collides:" + what);
        }
        cell.goals.push_back(std::move(wg));
    }
    return cell;
}

VirtualCameraRig make_rig(const Workcell& cell)
{
    const auto& r = cell.config.rig;
    return make_truncated_icosahedron_rig(r.radius_factor * cell.workpiece.bounding_radius(), r.width, r.height, r.fov);
}

PointCloud cad_cloud(const Workcell& cell)
{
    return voxel_downsample(raytrace_cloud(cell.workpiece, make_rig(cell)), cell.config.sensor.cad_leaf);
}

PointCloud sensor_cloud(const Workcell& cell, const RigidTransform& offset, std::uint64_t seed)
{
    const auto& s = cell.config.sensor;
    TriangleMesh scene = apply(offset, cell.workpiece);
    scene.append(cell.fixtures);
    PointCloud cloud = voxel_downsample(raytrace_cloud(scene, make_rig(cell)), s.sensor_leaf);
    Rng rng(seed);
    cloud = add_gaussian_noise(cloud, s.noise_sigma, rng);
    const auto count = static_cast<std::size_t>(std::llround(s.outlier_fraction * static_cast<double>(cloud.size())));
    if (count > 0) {
        Aabb box = bounds(cloud.points);
        box.min -= Vec3::Constant(50.0);
        box.max += Vec3::Constant(50.0);
        cloud = add_uniform_outliers(cloud, box, count, rng);
    }
    return cloud;
}

RigidTransform centroid_alignment(const PointCloud& source, const PointCloud& target)
{
    return RigidTransform::from_translation(centroid(target) - centroid(source));
}

PointCloud registration_source(const WorkcellConfig& config, const PointCloud& sensor, RegistrationReport* report)
{
    RegistrationReport local;
    RegistrationReport& r = report ? *report : local;
    r.input_points = sensor.size();
    const PointCloud segmented = segment_box(sensor, config.sensor.segment_box);
    r.segmented_points = segmented.size();
    if (segmented.empty())
        throw EmptyCloud("segmentation removed every point");
    // Sign of the normals does not matter for DoN; any viewpoint works.
    const DonResult don = don_filter(segmented, config.don, Vec3(0, 0, 1e4));
    r.filtered_points = don.filtered.size();
    if (don.filtered.empty())
        throw EmptyCloud("DoN filter removed every point");
    PointCloud source = voxel_downsample(don.filtered, config.sensor.registration_leaf);
    r.icp_points = source.size();
    return source;
}

RegistrationReport register_workpiece(const WorkcellConfig& config, const PointCloud& sensor, const PointCloud& cad)
{
    RegistrationReport r;
    const PointCloud source = registration_source(config, sensor, &r);
    IcpParams params = config.icp;
    if (config.icp_centroid_init)
        params.initial_guess = centroid_alignment(source, cad);
    r.icp = icp(source, cad, params);
    r.workpiece_offset = r.icp.transform.inverse();
    return r;
}

RigidTransform world_correction(const Workcell& cell, const RigidTransform& workpiece_offset)
{
    const RigidTransform& n = cell.config.workpiece_pose;
    return n * workpiece_offset * n.inverse();
}

PlanningQuery planning_query(const Workcell& cell, const std::string& goal)
{
    const std::size_t i = cell.goal_index(goal);
    PlanningQuery q;
    q.goal = goal;
    q.start = i == 0 ? cell.config.home : cell.goals[i - 1].q;
    q.target = cell.goals[i].q;
    q.goal_spec = GoalSpec::from_pose(cell.goals[i].pose);
    return q;
}

PlanRequest make_request(const Workcell& cell, const PlanningQuery& query, const std::string& planner,
                         std::uint64_t seed)
{
    const auto& c = cell.config;
    PlanRequest r;
    r.start = query.start;
    r.goal = query.target;
    if (planner == "bitrrt" && c.cost_driven)
        r.cost = planning_cost(c.chain, query.goal_spec, c.orientation_weight);
    r.time_budget = c.bench.time_budget;
    r.seed = seed;
    r.extension_step = c.extension_step;
    r.goal_bias = c.goal_bias;
    return r;
}

PlanningProblem planning_problem(const Workcell& cell)
{
    return {cell.scene, cell.config.chain, cell.config.planner};
}

std::uint64_t trial_seed(std::uint64_t master, const std::string& planner, const std::string& goal, int trial)
{
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ fnv1a(planner));
    h = splitmix64(h ^ fnv1a(goal));
    return splitmix64(h ^ static_cast<std::uint64_t>(trial));
}

} // namespace weldplan
