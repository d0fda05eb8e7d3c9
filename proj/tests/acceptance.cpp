// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "support.hpp"
#include "weldplan/cost.hpp"
#include "weldplan/parallel.hpp"
#include "weldplan/report.hpp"
#include "weldplan/workcell.hpp"

using namespace weldplan;
using namespace weldplan::testing;
namespace fs = std::filesystem;

namespace {

const fs::path kConfig = WELDPLAN_TEST_CONFIG;
const fs::path kOut = WELDPLAN_TEST_SCRATCH;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

const Workcell& workcell()
{
    static const Workcell cell = build_workcell(load_config(kConfig));
    return cell;
}

JointConfig random_config(const KinematicChain& chain, Rng& rng, double inset = 0.0)
{
    JointConfig q;
    for (std::size_t i = 0; i < kDof; ++i)
        q[i] = rng.uniform(chain.joints[i].lower + inset, chain.joints[i].upper - inset);
    return q;
}

// Registration recovery on the noise-free CAD cloud.
void registration_recovery(Outcome& o)
{
    const WorkcellConfig& cfg = workcell().config;
    const PointCloud cad = cad_cloud(workcell());
    const KdTree tree(cad.points);
    Rng rng(99);
    double worst_t = 0.0, worst_r = 0.0, worst_time = 0.0;
    int ok = 0;
    for (int i = 0; i < 20; ++i) {
        const Vec3 t(rng.uniform(-600, 600), rng.uniform(-600, 600), rng.uniform(-600, 600));
        const double yaw = deg2rad(rng.uniform(-18, 18));
        const RigidTransform offset(quaternion_from_euler(yaw, 0.0, 0.0), t);
        const PointCloud source = apply(offset, cad);
        IcpParams p = cfg.icp;
        if (cfg.icp_centroid_init)
            p.initial_guess = centroid_alignment(source, cad);
        const auto t0 = Clock::now();
        const IcpResult r = icp(source, tree, p);
        const double dt = seconds_since(t0);
        const RigidTransform err = r.transform * offset;
        const double te = err.translation().norm();
        const double re = rad2deg(rotation_distance(err.rotation(), Quat::Identity()));
        worst_t = std::max(worst_t, te);
        worst_r = std::max(worst_r, re);
        worst_time = std::max(worst_time, dt);
        ok += te < 5.0 && re < 1.0 && dt < 10.0 ? 1 : 0;
    }
    o.detail << ok << "/20 recovered, cloud " << cad.size() << " points, worst " << worst_t << " mm / " << worst_r
             << " deg / " << worst_time << " s";
    o.require(ok == 20, "every offset within 5 mm, 1 deg, 10 s");
}

// Score curve from the sweep command on the noisy scene with fixtures.
void robustness_curve(Outcome& o)
{
    const fs::path dir = kOut / "sweep";
    fs::remove_all(dir);
    cli::GlobalOptions global;
    global.config = kConfig;
    global.out = dir;
    cli::SweepOptions sweep;
    sweep.axis = "y";
    std::ostringstream log;
    const auto t0 = Clock::now();
    const int rc = cli::cmd_sweep(global, sweep, log);
    const double dt = seconds_since(t0);
    o.require(rc == cli::kExitOk, "sweep exit code");

    std::ifstream in(dir / "sweep_y.csv");
    std::string line;
    std::vector<double> offset, score;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("axis", 0) == 0)
            continue;
        std::istringstream row(line);
        std::string axis, off, sc;
        std::getline(row, axis, ',');
        std::getline(row, off, ',');
        std::getline(row, sc, ',');
        offset.push_back(std::stod(off));
        score.push_back(std::stod(sc));
    }
    if (score.size() < 3) {
        o.require(false, "sweep produced too few rows");
        return;
    }
    const double max_offset = offset.back();
    double plateau = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < offset.size(); ++i) {
        if (offset[i] >= max_offset / 4 && offset[i] <= 3 * max_offset / 4) {
            plateau += score[i];
            ++count;
        }
    }
    plateau /= count;
    const double at_zero = score.front(), extreme = score.back();
    o.detail << "y axis, scores";
    for (double s : score)
        o.detail << " " << std::setprecision(4) << s;
    o.detail << std::setprecision(6) << "; plateau mean " << plateau << ", zero/plateau " << at_zero / plateau
             << ", extreme/plateau " << extreme / plateau << ", " << dt << " s";
    o.require(at_zero <= 2.0 * plateau && plateau <= 2.0 * at_zero, "offset 0 within 2x of the plateau");
    o.require(extreme >= 3.0 * plateau, "extreme offset at least 3x the plateau");
    o.require(dt < 120.0, "under 2 minutes");
}

// DoN on a labelled plane with 5% outliers.
void don_correctness(Outcome& o)
{
    Rng rng(7);
    PointCloud c;
    for (int i = 0; i < 95; ++i)
        for (int j = 0; j < 100; ++j)
            c.points.emplace_back(2.0 * i, 2.0 * j, 0.0);
    const std::size_t surface = c.size();
    c = add_uniform_outliers(c, Aabb{Vec3(-20, -20, -50), Vec3(210, 220, 50)}, 500, rng);
    const DonParams params{5.0, 50.0, 0.1};
    const DonResult r = don_filter(c, params, Vec3(100, 100, 1000));
    std::size_t kept_surface = 0, kept_outliers = 0;
    bool in_range = true;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (r.kept[i])
            (i < surface ? kept_surface : kept_outliers)++;
        if (!std::isnan(r.magnitude[i]) && (r.magnitude[i] < 0.0 || r.magnitude[i] > 1.0))
            in_range = false;
    }
    const std::size_t outliers = c.size() - surface;
    const double removed = 1.0 - static_cast<double>(kept_outliers) / outliers;
    const double retained = static_cast<double>(kept_surface) / surface;
    o.detail << c.size() << " points, outliers removed " << 100 * removed << "%, surface retained " << 100 * retained
             << "%";
    o.require(removed >= 0.9, "90% of outliers removed");
    o.require(retained >= 0.95, "95% of surface retained");
    o.require(in_range, "every |dn| in [0, 1]");
}

Jacobian numeric_jacobian(const KinematicChain& chain, const JointConfig& q, double h)
{
    Jacobian j;
    for (std::size_t i = 0; i < kDof; ++i) {
        JointConfig a = q, b = q;
        a[i] += h;
        b[i] -= h;
        const Eigen::Matrix4d ta = dh_product(chain, a), tb = dh_product(chain, b);
        const auto col = static_cast<Eigen::Index>(i);
        j.block<3, 1>(0, col) = (ta.block<3, 1>(0, 3) - tb.block<3, 1>(0, 3)) / (2 * h);
        const Eigen::AngleAxisd d(Eigen::Matrix3d(ta.block<3, 3>(0, 0) * tb.block<3, 3>(0, 0).transpose()));
        j.block<3, 1>(3, col) = d.axis() * d.angle() / (2 * h);
    }
    return j;
}

void kinematics(Outcome& o)
{
    const KinematicChain& c = workcell().chain();
    Rng rng(31);
    double worst_jac = 0.0;
    for (int i = 0; i < 100; ++i) {
        const JointConfig q = random_config(c, rng);
        const Jacobian j = jacobian(c, q);
        worst_jac = std::max(worst_jac, (j - numeric_jacobian(c, q, 1e-6)).norm() / j.norm());
    }

    const IkParams params;
    int solved = 0, attempts = 0, logged = 0;
    double worst_pos = 0.0, worst_rot = 0.0;
    bool bound = true;
    for (int i = 0; i < 100; ++i) {
        const JointConfig q = random_config(c, rng, 0.2);
        JointConfig seed = q;
        for (std::size_t k = 0; k < kDof; ++k)
            seed[k] += rng.uniform(-0.3, 0.3);
        const RigidTransform target = fk(c, q);
        const IkResult r = ik(c, target, seed, params);
        ++attempts;
        for (const auto& it : r.log) {
            ++logged;
            if (it.raw_step_norm > it.error_norm / (2.0 * params.damping) + 1e-12)
                bound = false;
        }
        if (!r.ok())
            continue;
        ++solved;
        const Eigen::Matrix4d got = dh_product(c, r.q);
        worst_pos = std::max(worst_pos, (got.block<3, 1>(0, 3) - target.translation()).norm());
        const Quat rq(Eigen::Matrix3d(got.block<3, 3>(0, 0)));
        worst_rot = std::max(worst_rot, rotation_distance(rq, target.rotation()));
    }
    o.detail << "jacobian worst relative error " << worst_jac << "; ik " << solved << "/" << attempts
             << " solved, worst residual " << worst_pos << " mm / " << worst_rot << " rad; dls bound on " << logged
             << " steps";
    o.require(worst_jac <= 1e-3, "jacobian within 1e-3");
    o.require(solved > 0, "some ik success");
    o.require(worst_pos <= 0.5 && worst_rot <= 1e-3, "ik residual");
    o.require(bound, "dls step bound");
}

std::vector<BenchRecord> bench_records;

void planner_validity(Outcome& o)
{
    const Workcell& cell = workcell();
    BenchOptions opt;
    opt.trials = cell.config.bench.trials;
    opt.workers = default_worker_count();
    const auto t0 = Clock::now();
    const auto first = run_bench(cell, opt);
    const double dt = seconds_since(t0);
    const auto second = run_bench(cell, opt);
    std::ostringstream a, b;
    write_bench_csv(a, first);
    write_bench_csv(b, second);

    MotionCheckParams half = cell.config.planner.motion;
    half.resolution /= 2.0;
    std::size_t returned = 0, valid = 0;
    for (const auto& r : first) {
        if (!r.success)
            continue;
        ++returned;
        const PlanningQuery q = planning_query(cell, r.goal);
        const bool ends = (r.path.waypoints.front().q - q.start.q).norm() < 1e-9 &&
                          (r.path.waypoints.back().q - q.target.q).norm() < 1e-9;
        valid += ends && path_valid(cell.scene, cell.chain(), r.path, half) ? 1 : 0;
    }
    bench_records = first;
    o.detail << first.size() << " runs, " << returned << " paths returned, " << valid
             << " re-validated at half resolution; csv identical: " << (a.str() == b.str() ? "yes" : "no") << "; "
             << dt << " s per bench";
    o.require(first.size() == 5 * cell.goals.size() * static_cast<std::size_t>(opt.trials), "full bench");
    o.require(returned > 0 && valid == returned, "every returned path valid");
    o.require(a.str() == b.str(), "byte-identical csv");
    o.require(dt < 900.0, "under 15 minutes");
}

void comparative_ordering(Outcome& o)
{
    if (bench_records.empty()) {
        o.require(false, "bench records missing");
        return;
    }
    const auto summary = summarize(bench_records);
    auto find = [&](const std::string& planner, const std::string& goal) -> const BenchSummary* {
        for (const auto& s : summary)
            if (s.planner == planner && s.goal == goal)
                return &s;
        return nullptr;
    };
    const double bound = workcell().config.bench.consistency_bound;
    for (const auto& g : workcell().goals) {
        const BenchSummary* bi = find("bitrrt", g.name);
        const BenchSummary* lbt = find("lbtrrt", g.name);
        if (!bi || !lbt || bi->successes == 0 || lbt->successes == 0) {
            o.require(false, g.name + " has no successful runs to compare");
            continue;
        }
        o.detail << g.name << ": bitrrt IC pos " << bi->mean_ic_pos << " orient " << bi->mean_ic_orient << " cv "
                 << bi->cv_ic_pos << " vs lbtrrt " << lbt->mean_ic_pos << " / " << lbt->mean_ic_orient << "; ";
        o.require(bi->mean_ic_pos <= lbt->mean_ic_pos, g.name + " IC(c_pos) ordering");
        o.require(bi->mean_ic_orient <= lbt->mean_ic_orient, g.name + " IC(c_orient) ordering");
        o.require(bi->cv_ic_pos <= bound, g.name + " coefficient of variation");
        o.require(bi->successes == bi->runs, g.name + " bitrrt solved every trial");
    }
}

// All DH parameters zero: the tool frame is the base frame.
KinematicChain point_chain_identity()
{
    KinematicChain c;
    for (auto& j : c.joints)
        j = DhJoint{};
    c.tool = RigidTransform::identity();
    return c;
}

void cost_analytics(Outcome& o)
{
    const KinematicChain c = point_chain_identity();
    Rng rng(41);
    int exact = 0;
    for (int i = 0; i < 10000; ++i) {
        Quat a(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        Quat b(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        a.normalize();
        b.normalize();
        const Quat nb(-b.w(), -b.x(), -b.y(), -b.z());
        GoalSpec g{Vec3::Zero(), b}, ng{Vec3::Zero(), nb};
        KinematicChain turned = c;
        turned.base = RigidTransform(a, Vec3::Zero());
        exact += c_orient(turned, JointConfig{}, g) == c_orient(turned, JointConfig{}, ng) ? 1 : 0;
    }

    // constant cost on a random multi-segment path
    Path p;
    for (int i = 0; i < 5; ++i)
        p.waypoints.push_back(random_config(workcell().chain(), rng));
    double worst_const = 0.0;
    for (double c0 : {0.5, 3.0, 250.0}) {
        const double ic = integral_cost(p, [c0](const JointConfig&) { return c0; }, 100);
        const double expect = path_length(p) * c0;
        worst_const = std::max(worst_const, std::abs(ic - expect) / expect);
    }

    // trapezoid oracle of c_pos along the same path, independent sampling
    const KinematicChain& chain = workcell().chain();
    const GoalSpec goal = GoalSpec::from_pose(workcell().goals.front().pose);
    auto cost_at = [&](const JointVector& q) {
        JointConfig jc;
        jc.q = q;
        return (dh_product(chain, jc).block<3, 1>(0, 3) - goal.position).norm();
    };
    const int fine = 200000;
    std::vector<double> cum{0.0};
    for (std::size_t i = 1; i < p.size(); ++i)
        cum.push_back(cum.back() + (p.waypoints[i].q - p.waypoints[i - 1].q).norm());
    const double length = cum.back();
    auto point_at = [&](double s) {
        std::size_t seg = 1;
        while (seg + 1 < p.size() && cum[seg] < s)
            ++seg;
        const double t = (s - cum[seg - 1]) / (cum[seg] - cum[seg - 1]);
        return JointVector(p.waypoints[seg - 1].q + t * (p.waypoints[seg].q - p.waypoints[seg - 1].q));
    };
    double trap = 0.0;
    double prev = cost_at(p.waypoints.front().q);
    for (int k = 1; k <= fine; ++k) {
        const double cur = cost_at(point_at(length * k / fine));
        trap += 0.5 * (prev + cur) * length / fine;
        prev = cur;
    }
    const double ic = integral_cost(p, position_cost(chain, goal), 1000);
    const double trap_err = std::abs(ic - trap) / trap;

    o.detail << "double cover exact on " << exact << "/10000 pairs; constant-cost worst relative error "
             << worst_const << "; IC(n=1000) vs trapezoid " << 100 * trap_err << "%";
    o.require(exact == 10000, "double cover");
    o.require(worst_const <= 1e-9, "constant cost");
    o.require(trap_err <= 2e-3, "trapezoid agreement");
}

void transition_law(Outcome& o)
{
    struct Point {
        double parent, child, temperature;
    };
    double worst = 0.0;
    for (const Point pt : {Point{2.0, 3.0, 1.0}, Point{1.0, 1.5, 0.25}, Point{0.0, 12.0, 5.0}}) {
        TransitionState base;
        base.temperature = base.min_temperature = pt.temperature;
        base.reference_cost = base.max_cost_seen = 10.0;
        const double k = std::max(10.0, pt.child) / 10.0;
        const double expect = std::exp(-(pt.child - pt.parent) / (k * pt.temperature));
        Rng rng(fnv1a("transition") + static_cast<std::uint64_t>(pt.child * 100));
        const int n = 100000;
        int accepted = 0;
        for (int i = 0; i < n; ++i) {
            TransitionState s = base;
            accepted += transition_test(s, pt.parent, pt.child, 0.1, rng) ? 1 : 0;
        }
        const double freq = static_cast<double>(accepted) / n;
        worst = std::max(worst, std::abs(freq - expect));
        o.detail << "p=" << expect << " observed " << freq << "; ";
    }
    Rng rng(5);
    bool hot = true, cold = true;
    for (int i = 0; i < 10000; ++i) {
        TransitionState h;
        h.temperature = h.min_temperature = 1e12;
        h.reference_cost = h.max_cost_seen = 10.0;
        hot = hot && transition_test(h, 0.0, 9.0, 0.1, rng);
        TransitionState c = h;
        c.temperature = c.min_temperature = 1e-12;
        cold = cold && !transition_test(c, 0.0, 1e-3, 0.1, rng) && transition_test(c, 1.0, 0.5, 0.1, rng);
    }
    o.detail << "worst deviation " << worst << "; hot accepts all: " << (hot ? "yes" : "no")
             << "; cold downhill only: " << (cold ? "yes" : "no");
    o.require(worst <= 0.02, "law within 2%");
    o.require(hot && cold, "temperature limits");
}

void planar_oracle(Outcome& o)
{
    Rng rng(2024);
    const KinematicChain chain = planar_arm();
    const double margin = 10.0;
    PlannerSettings settings = planar_settings();
    int agree = 0, total = 0, feasible = 0;
    for (int i = 0; i < 10; ++i) {
        const PlanarInstance inst = make_planar_instance(rng, i % 2 == 0, margin + settings.clearance_padding);
        const Scene scene = planar_scene({inst.obstacle}, margin);
        feasible += inst.feasible ? 1 : 0;
        for (const auto& name : planner_names()) {
            PlanRequest req;
            req.start = inst.start;
            req.goal = inst.goal;
            req.seed = trial_seed(7, name, "planar", i);
            req.time_budget = 30.0;
            const PlanResult r = plan(name, {scene, chain, settings}, req);
            ++total;
            const bool ok = r.ok() == inst.feasible;
            agree += ok ? 1 : 0;
            if (!ok)
                o.detail << "[scene " << i << " " << name << " says " << to_string(r.status) << "] ";
        }
    }
    o.detail << agree << "/" << total << " verdicts agree with the grid oracle (" << feasible << " feasible scenes)";
    o.require(agree == total, "every verdict agrees");
}

} // namespace

int main()
{
    fs::create_directories(kOut);
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
        {"registration recovery", registration_recovery},
        {"robustness curve shape", robustness_curve},
        {"difference of normals", don_correctness},
        {"kinematics", kinematics},
        {"planner validity and determinism", planner_validity},
        {"comparative ordering", comparative_ordering},
        {"cost analytics", cost_analytics},
        {"transition law", transition_law},
        {"planar planner oracle", planar_oracle},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        failed += o.pass ? 0 : 1;
        std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
                  << o.detail.str() << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
