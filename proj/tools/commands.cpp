#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "weldplan/common.hpp"
#include "weldplan/mesh_io.hpp"
#include "weldplan/parallel.hpp"
#include "weldplan/report.hpp"
#include "weldplan/workcell.hpp"

namespace weldplan::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

WorkcellConfig load(const GlobalOptions& global)
{
    WorkcellConfig c = load_config(global.config);
    if (global.seed)
        c.seed = *global.seed;
    return c;
}

fs::path output_dir(const GlobalOptions& global)
{
    std::error_code ec;
    fs::create_directories(global.out, ec);
    if (ec)
        throw Error("cannot create output directory '" + global.out.string() + "': " + ec.message());
    return global.out;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    return out;
}

void write_text(const fs::path& path, const std::string& text)
{
    auto out = open_out(path);
    out << text;
}

json transform_json(const RigidTransform& t)
{
    const Vec3 p = t.translation();
    const Quat q = t.rotation();
    const EulerZyx e = euler_from_quaternion(q);
    return {{"translation_mm", {p.x(), p.y(), p.z()}},
            {"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}},
            {"euler_zyx_deg", {rad2deg(e.yaw), rad2deg(e.pitch), rad2deg(e.roll)}},
            {"gimbal_lock", e.gimbal_lock}};
}

void print_transform(std::ostream& log, const std::string& label, const RigidTransform& t)
{
    const Vec3 p = t.translation();
    const Quat q = t.rotation();
    const EulerZyx e = euler_from_quaternion(q);
    log << std::fixed << std::setprecision(4);
    log << label << "\n"
        << "  translation [mm]    " << p.x() << " " << p.y() << " " << p.z() << "\n"
        << "  quaternion (wxyz)   " << q.w() << " " << q.x() << " " << q.y() << " " << q.z() << "\n"
        << "  euler zyx [deg]     " << rad2deg(e.yaw) << " " << rad2deg(e.pitch) << " " << rad2deg(e.roll)
        << (e.gimbal_lock ? "  (gimbal lock)" : "") << "\n";
    log << std::defaultfloat;
}

void check_goal(const Workcell& cell, const std::string& goal)
{
    for (const auto& g : cell.goals) {
        if (g.name == goal)
            return;
    }
    throw UsageError("unknown goal '" + goal + "'");
}

void check_planner(const std::string& planner)
{
    if (!is_planner_name(planner))
        throw UsageError("unknown planner '" + planner + "'");
}

} // namespace

int cmd_perceive(const GlobalOptions& global, const PerceiveOptions& options, std::ostream& log)
{
    const Workcell cell = build_workcell(load(global));
    const fs::path dir = output_dir(global);
    const RigidTransform offset{quaternion_from_euler(deg2rad(options.offset_yaw), 0.0, 0.0),
                                Vec3(options.offset_x, options.offset_y, options.offset_z)};
    const PointCloud cad = cad_cloud(cell);
    const PointCloud sensor = sensor_cloud(cell, offset, splitmix64(cell.config.seed ^ fnv1a("sensor")));
    write_ply_cloud(dir / "cad_cloud.ply", cad);
    write_ply_cloud(dir / "sensor_cloud.ply", sensor);
    log << "cad cloud     " << cad.size() << " points -> " << (dir / "cad_cloud.ply").string() << "\n"
        << "sensor cloud  " << sensor.size() << " points -> " << (dir / "sensor_cloud.ply").string() << "\n";
    return kExitOk;
}

int cmd_register(const GlobalOptions& global, const RegisterOptions& options, std::ostream& log)
{
    const WorkcellConfig config = load(global);
    const PointCloud sensor = read_ply_cloud(options.source);
    const PointCloud cad = read_ply_cloud(options.target);
    RegistrationReport rep;
    try {
        rep = register_workpiece(config, sensor, cad);
    } catch (const EmptyCloud& e) {
        throw RegistrationFailure(e.what());
    } catch (const NoCorrespondences& e) {
        throw RegistrationFailure(e.what());
    }

    log << "points: input " << rep.input_points << ", segmented " << rep.segmented_points << ", filtered "
        << rep.filtered_points << ", icp " << rep.icp_points << "\n";
    print_transform(log, "workpiece offset (CAD -> real)", rep.workpiece_offset);
    print_transform(log, "icp transform (sensor -> CAD)", rep.icp.transform);
    log << "score " << rep.icp.convergence_score << " mm^2, iterations " << rep.icp.iterations_run
        << ", converged " << (rep.icp.converged ? "yes" : "no") << "\n";

    const json report = {{"schema", "weldplan.registration/1"},
                         {"source", options.source.string()},
                         {"target", options.target.string()},
                         {"points",
                          {{"input", rep.input_points},
                           {"segmented", rep.segmented_points},
                           {"filtered", rep.filtered_points},
                           {"icp", rep.icp_points}}},
                         {"workpiece_offset", transform_json(rep.workpiece_offset)},
                         {"icp",
                          {{"transform", transform_json(rep.icp.transform)},
                           {"score_mm2", rep.icp.convergence_score},
                           {"iterations", rep.icp.iterations_run},
                           {"converged", rep.icp.converged},
                           {"correspondences", rep.icp.correspondences},
                           {"score_history", rep.icp.score_history}}}};
    const fs::path path = options.report.empty() ? output_dir(global) / "registration.json" : options.report;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    write_text(path, report.dump(2) + "\n");
    log << "report -> " << path.string() << "\n";
    return kExitOk;
}

int cmd_sweep(const GlobalOptions& global, const SweepOptions& options, std::ostream& log)
{
    SweepAxis axis;
    try {
        axis = parse_sweep_axis(options.axis);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    if (options.steps < 2)
        throw UsageError("--steps must be at least 2");
    const bool angular = axis == SweepAxis::yaw;
    const double max_offset = options.max_offset.value_or(angular ? 18.0 : 600.0);
    if (!(max_offset > 0.0))
        throw UsageError("--max-offset must be positive");

    const Workcell cell = build_workcell(load(global));
    const fs::path dir = output_dir(global);
    const PointCloud cad = cad_cloud(cell);
    const PointCloud sensor =
        sensor_cloud(cell, RigidTransform::identity(), splitmix64(cell.config.seed ^ fnv1a("sensor")));
    PointCloud source;
    try {
        source = registration_source(cell.config, sensor);
    } catch (const EmptyCloud& e) {
        throw RegistrationFailure(e.what());
    }

    std::vector<double> offsets;
    for (int i = 0; i < options.steps; ++i) {
        const double v = max_offset * i / (options.steps - 1);
        offsets.push_back(angular ? deg2rad(v) : v);
    }
    const unsigned workers = options.workers == 0 ? default_worker_count() : options.workers;
    const auto entries = robustness_sweep(source, cad, axis, offsets, cell.config.sweep_icp, workers);

    const std::string name = "sweep_" + to_string(axis);
    {
        auto out = open_out(dir / (name + ".csv"));
        write_sweep_csv(out, axis, entries);
    }
    PlotSeries s{"ICP score", {}, {}, false};
    for (const auto& e : entries) {
        if (e.failed)
            continue;
        s.x.push_back(angular ? rad2deg(e.offset) : e.offset);
        s.y.push_back(e.score);
    }
    write_text(dir / (name + ".svg"),
               svg_plot({"ICP robustness, offset along " + to_string(axis),
                         angular ? "offset [deg]" : "offset [mm]", "convergence score [mm^2]"},
                        {s}));

    log << "source " << source.size() << " points, target " << cad.size() << " points\n";
    for (const auto& e : entries) {
        log << "  " << std::setw(8) << (angular ? rad2deg(e.offset) : e.offset) << "  ";
        if (e.failed)
            log << "failed: " << e.error << "\n";
        else
            log << "score " << e.score << "  iterations " << e.iterations << (e.converged ? "" : "  (not converged)")
                << "\n";
    }
    log << "-> " << (dir / (name + ".csv")).string() << "\n";
    return kExitOk;
}

int cmd_plan(const GlobalOptions& global, const PlanOptions& options, std::ostream& log)
{
    check_planner(options.planner);
    WorkcellConfig config = load(global);
    if (options.time_budget) {
        if (!(*options.time_budget > 0.0))
            throw UsageError("--time-budget must be positive");
        config.bench.time_budget = *options.time_budget;
    }
    const Workcell cell = build_workcell(config);
    check_goal(cell, options.goal);

    const PlanningQuery query = planning_query(cell, options.goal);
    const std::uint64_t seed = trial_seed(cell.config.seed, options.planner, options.goal, 0);
    const PlanResult res = plan(options.planner, planning_problem(cell), make_request(cell, query, options.planner, seed));
    const PlanStats& st = res.stats;
    log << options.planner << " -> " << options.goal << ": " << to_string(res.status) << "\n"
        << "  seed " << st.seed << ", iterations " << st.iterations << ", nodes " << st.start_tree_nodes << "/"
        << st.goal_tree_nodes << ", motion checks " << st.motion_checks << ", " << st.wall_time << " s\n";
    if (!res.ok())
        return kExitTimeout;
    if (!path_valid(cell.scene, cell.chain(), res.path, cell.config.planner.motion))
        throw Error("planner returned a path that fails validation");

    const CostReport cost = evaluate_path(cell.chain(), res.path, query.goal_spec, cell.config.bench.cost_subdivisions);
    log << "  waypoints " << res.path.size() << ", length " << path_length(res.path) << " rad\n"
        << "  IC(c_pos) " << cost.ic_pos << ", IC(c_orient) " << cost.ic_orient << "\n";

    const fs::path dir = output_dir(global);
    const std::string stem = options.planner + "_" + options.goal;
    {
        auto out = open_out(dir / ("path_" + stem + ".txt"));
        write_path(out, res.path);
    }
    {
        auto out = open_out(dir / ("cost_" + stem + ".csv"));
        CsvWriter csv(out, "weldplan.cost_trace/1", {"s", "c_pos", "c_orient"});
        for (std::size_t i = 0; i < cost.sample_param.size(); ++i)
            csv.row({csv_number(cost.sample_param[i]), csv_number(cost.sample_pos[i]), csv_number(cost.sample_orient[i])});
    }
    log << "-> " << (dir / ("path_" + stem + ".txt")).string() << "\n";
    return kExitOk;
}

int cmd_bench(const GlobalOptions& global, const BenchCliOptions& options, std::ostream& log)
{
    for (const auto& p : options.planners)
        check_planner(p);
    const Workcell cell = build_workcell(load(global));
    for (const auto& g : options.goals)
        check_goal(cell, g);

    BenchOptions bo;
    bo.planners = options.planners;
    bo.goals = options.goals;
    bo.trials = options.trials.value_or(cell.config.bench.trials);
    if (bo.trials < 1)
        throw UsageError("--trials must be at least 1");
    const unsigned workers = options.workers.value_or(cell.config.bench.workers);
    bo.workers = workers == 0 ? default_worker_count() : workers;

    log << "bench: " << bo.trials << " trials, " << bo.workers << " workers\n";
    const auto records = run_bench(cell, bo);
    const auto summary = summarize(records);

    const fs::path dir = output_dir(global);
    {
        auto out = open_out(dir / "bench.csv");
        write_bench_csv(out, records);
    }
    {
        auto out = open_out(dir / "bench_timing.csv");
        write_bench_timing_csv(out, records);
    }
    {
        auto out = open_out(dir / "bench_summary.csv");
        write_summary_csv(out, summary);
    }
    std::vector<std::string> goals;
    for (const auto& r : records) {
        if (std::find(goals.begin(), goals.end(), r.goal) == goals.end())
            goals.push_back(r.goal);
    }
    for (const auto& g : goals) {
        write_text(dir / ("ic_pos_" + g + ".svg"), ic_scatter_svg(records, g, false));
        write_text(dir / ("ic_orient_" + g + ".svg"), ic_scatter_svg(records, g, true));
        write_text(dir / ("cost_pos_" + g + ".svg"), cost_curve_svg(records, g, false));
        write_text(dir / ("cost_orient_" + g + ".svg"), cost_curve_svg(records, g, true));
    }

    log << std::left << std::setw(12) << "planner" << std::setw(8) << "goal" << std::right << std::setw(8) << "ok"
        << std::setw(12) << "IC(c_pos)" << std::setw(8) << "CV" << std::setw(12) << "IC(c_ori)" << "\n";
    for (const auto& s : summary) {
        std::ostringstream ok;
        ok << s.successes << "/" << s.runs;
        log << std::left << std::setw(12) << s.planner << std::setw(8) << s.goal << std::right << std::setw(8)
            << ok.str() << std::fixed << std::setprecision(1) << std::setw(12) << s.mean_ic_pos
            << std::setprecision(3) << std::setw(8) << s.cv_ic_pos << std::setw(12) << s.mean_ic_orient
            << std::defaultfloat << "\n";
    }
    log << "-> " << (dir / "bench.csv").string() << "\n";
    return kExitOk;
}

} // namespace weldplan::cli
