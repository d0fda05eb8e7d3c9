#include <optional>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "weldplan/config.hpp"
#include "weldplan/cost.hpp"
#include "weldplan/mesh_io.hpp"
#include "weldplan/planners.hpp"
#include "weldplan/workcell.hpp"

namespace py = pybind11;
using namespace weldplan;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Configs = Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor>;

Points to_array(const std::vector<Vec3>& v)
{
    Points m(static_cast<Eigen::Index>(v.size()), 3);
    for (std::size_t i = 0; i < v.size(); ++i)
        m.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
    return m;
}

PointCloud to_cloud(const Points& m)
{
    PointCloud c;
    c.points.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        c.points.emplace_back(m.row(i).transpose());
    return c;
}

Configs to_array(const Path& p)
{
    Configs m(static_cast<Eigen::Index>(p.size()), 6);
    for (std::size_t i = 0; i < p.size(); ++i)
        m.row(static_cast<Eigen::Index>(i)) = p.waypoints[i].q.transpose();
    return m;
}

Path to_path(const Configs& m)
{
    Path p;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        p.waypoints.emplace_back(JointVector(m.row(i).transpose()));
    return p;
}

Quat wxyz(const Eigen::Vector4d& q) { return Quat(q[0], q[1], q[2], q[3]).normalized(); }

py::dict icp_dict(const IcpResult& r)
{
    py::dict d;
    d["transform"] = r.transform;
    d["score"] = r.convergence_score;
    d["iterations"] = r.iterations_run;
    d["converged"] = r.converged;
    d["correspondences"] = r.correspondences;
    d["score_history"] = r.score_history;
    return d;
}

} // namespace

PYBIND11_MODULE(_weldplan, m)
{
    m.doc() = "Point cloud registration and cost-aware motion planning for a robotic welding cell";

    static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", error.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<EmptyCloud>(m, "EmptyCloud", error.ptr());
    py::register_exception<NoCorrespondences>(m, "NoCorrespondences", error.ptr());

    py::class_<RigidTransform>(m, "Transform")
        .def(py::init([](const Vec3& t, const Eigen::Vector4d& q) { return RigidTransform(wxyz(q), t); }),
             py::arg("translation") = Vec3::Zero(), py::arg("quaternion") = Eigen::Vector4d(1, 0, 0, 0),
             "Translation in mm, quaternion as (w, x, y, z).")
        .def_static(
            "from_euler",
            [](double yaw, double pitch, double roll, const Vec3& t) {
                return RigidTransform(quaternion_from_euler(yaw, pitch, roll), t);
            },
            py::arg("yaw"), py::arg("pitch") = 0.0, py::arg("roll") = 0.0, py::arg("translation") = Vec3::Zero(),
            "Intrinsic ZYX angles in radians.")
        .def_static("from_matrix", &RigidTransform::from_matrix)
        .def_property_readonly("translation", [](const RigidTransform& t) { return Vec3(t.translation()); })
        .def_property_readonly("quaternion",
                               [](const RigidTransform& t) {
                                   const Quat& q = t.rotation();
                                   return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
                               })
        .def("euler",
             [](const RigidTransform& t) {
                 const EulerZyx e = euler_from_quaternion(t.rotation());
                 return py::make_tuple(e.yaw, e.pitch, e.roll);
             })
        .def("matrix", &RigidTransform::matrix)
        .def("inverse", &RigidTransform::inverse)
        .def("apply", [](const RigidTransform& t, const Points& p) { return to_array(apply(t, to_cloud(p)).points); })
        .def(py::self * py::self)
        .def("__repr__", [](const RigidTransform& t) {
            const Vec3 p = t.translation();
            const Quat& q = t.rotation();
            return "Transform(translation=[" + format_double(p.x()) + ", " + format_double(p.y()) + ", " +
                   format_double(p.z()) + "], quaternion=[" + format_double(q.w()) + ", " + format_double(q.x()) +
                   ", " + format_double(q.y()) + ", " + format_double(q.z()) + "])";
        });

    m.def("rotation_distance", [](const RigidTransform& a, const RigidTransform& b) {
        return rotation_distance(a.rotation(), b.rotation());
    });

    // Kinematics

    py::class_<KinematicChain>(m, "KinematicChain")
        .def_readonly("name", &KinematicChain::name)
        .def_readonly("base", &KinematicChain::base)
        .def_readonly("tool", &KinematicChain::tool)
        .def_property_readonly("lower", &KinematicChain::lower)
        .def_property_readonly("upper", &KinematicChain::upper)
        .def("within_limits",
             [](const KinematicChain& c, const JointVector& q) { return c.within_limits(JointConfig(q)); });

    m.def("reference_chain", &make_reference_chain);
    m.def("fk", [](const KinematicChain& c, const JointVector& q) { return fk(c, JointConfig(q)); });
    m.def("jacobian", [](const KinematicChain& c, const JointVector& q) { return jacobian(c, JointConfig(q)); });
    m.def(
        "ik",
        [](const KinematicChain& c, const RigidTransform& target, const JointVector& seed, const std::string& method,
           double damping, int max_iterations) {
            IkParams p;
            if (method == "dls")
                p.method = IkMethod::damped_least_squares;
            else if (method == "pinv")
                p.method = IkMethod::pseudo_inverse;
            else
                throw InvalidArgument("unknown ik method '" + method + "' (dls or pinv)");
            p.damping = damping;
            p.max_iterations = max_iterations;
            const IkResult r = ik(c, target, JointConfig(seed), p);
            py::dict d;
            d["success"] = r.ok();
            d["status"] = to_string(r.status);
            d["q"] = r.q.q;
            d["position_error"] = r.position_error;
            d["orientation_error"] = r.orientation_error;
            d["iterations"] = r.iterations;
            std::vector<std::array<double, 3>> log;
            for (const auto& it : r.log)
                log.push_back({it.error_norm, it.raw_step_norm, it.applied_step_norm});
            d["log"] = log;
            return d;
        },
        py::arg("chain"), py::arg("target"), py::arg("seed"), py::arg("method") = "dls", py::arg("damping") = 0.05,
        py::arg("max_iterations") = 200,
        "Returns a dict; log rows are (error norm, raw step norm, applied step norm).");

    // Workcell

    py::class_<Workcell>(m, "Workcell")
        .def_property_readonly("chain", [](const Workcell& w) { return w.chain(); })
        .def_property_readonly("home", [](const Workcell& w) { return w.config.home.q; })
        .def_property_readonly("seed", [](const Workcell& w) { return w.config.seed; })
        .def_property_readonly("goals",
                               [](const Workcell& w) {
                                   std::vector<std::string> names;
                                   for (const auto& g : w.goals)
                                       names.push_back(g.name);
                                   return names;
                               })
        .def("goal_pose", [](const Workcell& w, const std::string& g) { return w.goal(g).pose; })
        .def("goal_q", [](const Workcell& w, const std::string& g) { return w.goal(g).q.q; })
        .def("in_collision",
             [](const Workcell& w, const JointVector& q) { return w.scene.in_collision(w.chain(), JointConfig(q)); })
        .def("path_valid", [](const Workcell& w, const Configs& path) {
            return path_valid(w.scene, w.chain(), to_path(path), w.config.planner.motion);
        });

    m.def(
        "load_workcell", [](const std::string& path) { return build_workcell(load_config(path)); }, py::arg("config"));

    // Perception

    m.def("cad_cloud", [](const Workcell& w) { return to_array(cad_cloud(w).points); });
    m.def(
        "sensor_cloud",
        [](const Workcell& w, const RigidTransform& offset, std::uint64_t seed) {
            return to_array(sensor_cloud(w, offset, seed).points);
        },
        py::arg("workcell"), py::arg("offset") = RigidTransform::identity(), py::arg("seed") = 1);
    m.def(
        "icp",
        [](const Points& source, const Points& target, int max_iterations, double cutoff, double epsilon,
           const RigidTransform& initial_guess) {
            IcpParams p;
            p.max_iterations = max_iterations;
            p.correspondence_cutoff = cutoff;
            p.epsilon = epsilon;
            p.initial_guess = initial_guess;
            return icp_dict(icp(to_cloud(source), to_cloud(target), p));
        },
        py::arg("source"), py::arg("target"), py::arg("max_iterations") = 50, py::arg("cutoff") = 100.0,
        py::arg("epsilon") = 1e-6, py::arg("initial_guess") = RigidTransform::identity());
    m.def("register_workpiece", [](const Workcell& w, const Points& sensor, const Points& cad) {
        const RegistrationReport r = register_workpiece(w.config, to_cloud(sensor), to_cloud(cad));
        py::dict d = icp_dict(r.icp);
        d["workpiece_offset"] = r.workpiece_offset;
        d["input_points"] = r.input_points;
        d["filtered_points"] = r.filtered_points;
        d["icp_points"] = r.icp_points;
        return d;
    });
    m.def(
        "don_filter",
        [](const Points& points, double small_radius, double large_radius, double threshold, const Vec3& viewpoint) {
            const DonResult r =
                don_filter(to_cloud(points), DonParams{small_radius, large_radius, threshold}, viewpoint);
            return py::make_tuple(r.kept, r.magnitude);
        },
        py::arg("points"), py::arg("small_radius") = 5.0, py::arg("large_radius") = 50.0, py::arg("threshold") = 0.1,
        py::arg("viewpoint") = Vec3(0, 0, 1e4), "Returns (kept mask, |dn| with NaN for degenerate points).");

    // Planning and cost

    m.def("planner_names", &planner_names);
    m.def(
        "plan",
        [](const Workcell& w, const std::string& planner, const std::string& goal, std::optional<std::uint64_t> seed) {
            const PlanningQuery q = planning_query(w, goal);
            const std::uint64_t s = seed.value_or(trial_seed(w.config.seed, planner, goal, 0));
            const PlanResult r = plan(planner, planning_problem(w), make_request(w, q, planner, s));
            py::dict d;
            d["status"] = to_string(r.status);
            d["success"] = r.ok();
            d["path"] = to_array(r.path);
            d["length"] = path_length(r.path);
            d["iterations"] = r.stats.iterations;
            d["wall_time"] = r.stats.wall_time;
            if (r.ok()) {
                const CostReport c = evaluate_path(w.chain(), r.path, q.goal_spec, w.config.bench.cost_subdivisions);
                d["ic_pos"] = c.ic_pos;
                d["ic_orient"] = c.ic_orient;
            }
            return d;
        },
        py::arg("workcell"), py::arg("planner"), py::arg("goal"), py::arg("seed") = py::none());
    m.def(
        "integral_cost",
        [](const Configs& path, const std::function<double(const JointVector&)>& cost, int n) {
            return integral_cost(to_path(path), [&](const JointConfig& q) { return cost(q.q); }, n);
        },
        py::arg("path"), py::arg("cost"), py::arg("n") = 100);
    m.def("path_length", [](const Configs& path) { return path_length(to_path(path)); });
    m.def("quaternion_distance", [](const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
        return quaternion_distance(Quat(a[0], a[1], a[2], a[3]), Quat(b[0], b[1], b[2], b[3]));
    });
    m.def("c_pos", [](const KinematicChain& c, const JointVector& q, const RigidTransform& goal) {
        return c_pos(c, JointConfig(q), GoalSpec::from_pose(goal));
    });
    m.def("c_orient", [](const KinematicChain& c, const JointVector& q, const RigidTransform& goal) {
        return c_orient(c, JointConfig(q), GoalSpec::from_pose(goal));
    });
    m.def(
        "acceptance_probability",
        [](double c_parent, double c_new, double temperature, double reference_cost) {
            TransitionState s;
            s.temperature = s.min_temperature = temperature;
            s.reference_cost = reference_cost;
            s.max_cost_seen = std::max(reference_cost, c_new); // as transition_test records it
            return acceptance_probability(s, c_parent, c_new);
        },
        py::arg("c_parent"), py::arg("c_new"), py::arg("temperature"), py::arg("reference_cost") = 1.0);
}
