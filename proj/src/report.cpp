#include "weldplan/report.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "weldplan/mesh_io.hpp"
#include "weldplan/parallel.hpp"

namespace weldplan {

CsvWriter::CsvWriter(std::ostream& out, const std::string& schema, const std::vector<std::string>& header)
    : out_(out), columns_(header.size())
{
    out_ << "# schema: " << schema << '\n';
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells)
{
    if (cells.size() != columns_)
        throw InvalidArgument("CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(columns_));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].find_first_of(",\n\"") != std::string::npos)
            throw InvalidArgument("CSV cell needs quoting: " + cells[i]);
        out_ << (i ? "," : "") << cells[i];
    }
    out_ << '\n';
}

std::string csv_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return format_double(v);
}

// ---------------------------------------------------------------------------

namespace {

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

std::string fmt(double v)
{
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

// Tick step of 1, 2 or 5 times a power of ten giving about five ticks.
double nice_step(double span)
{
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

} // namespace

std::string svg_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series)
{
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!std::isfinite(x0)) {
        x0 = y0 = 0.0;
        x1 = y1 = 1.0;
    }
    if (x1 - x0 < 1e-12) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if (y1 - y0 < 1e-12) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    y0 = std::min(y0, 0.0);

    const double left = 80, right = 170, top = 40, bottom = 60;
    const double pw = spec.width - left - right;
    const double ph = spec.height - top - bottom;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << spec.width << "\" height=\""
      << spec.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << spec.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(spec.title) << "</text>\n";

    const double xs = nice_step(x1 - x0);
    for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-9 * xs; t += xs) {
        o << "<line x1=\"" << fmt(px(t)) << "\" y1=\"" << top << "\" x2=\"" << fmt(px(t)) << "\" y2=\"" << top + ph
          << "\" stroke=\"#e0e0e0\"/>\n";
        o << "<text x=\"" << fmt(px(t)) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
          << fmt(std::abs(t) < 1e-12 * xs ? 0.0 : t) << "</text>\n";
    }
    const double ys = nice_step(y1 - y0);
    for (double t = std::ceil(y0 / ys) * ys; t <= y1 + 1e-9 * ys; t += ys) {
        o << "<line x1=\"" << left << "\" y1=\"" << fmt(py(t)) << "\" x2=\"" << left + pw << "\" y2=\"" << fmt(py(t))
          << "\" stroke=\"#e0e0e0\"/>\n";
        o << "<text x=\"" << left - 6 << "\" y=\"" << fmt(py(t) + 4) << "\" text-anchor=\"end\">"
          << fmt(std::abs(t) < 1e-12 * ys ? 0.0 : t) << "</text>\n";
    }
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << spec.height - 18 << "\" text-anchor=\"middle\">"
      << escape(spec.x_label) << "</text>\n";
    o << "<text transform=\"translate(20," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(spec.y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kColors[k % std::size(kColors)];
        if (s.markers_only) {
            for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
                if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                    o << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i])) << "\" r=\"3.5\" fill=\""
                      << color << "\"/>\n";
            }
        } else {
            o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
            bool first = true;
            for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                    continue;
                o << (first ? "" : " ") << fmt(px(s.x[i])) << "," << fmt(py(s.y[i]));
                first = false;
            }
            o << "\"/>\n";
        }
        const double ly = top + 14 + 18.0 * static_cast<double>(k);
        o << "<rect x=\"" << left + pw + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" fill=\"" << color
          << "\"/>\n";
        o << "<text x=\"" << left + pw + 30 << "\" y=\"" << ly + 1 << "\">" << escape(s.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

// ---------------------------------------------------------------------------

void write_path(std::ostream& out, const Path& path)
{
    for (const auto& q : path.waypoints) {
        for (std::size_t i = 0; i < kDof; ++i)
            out << (i ? "," : "") << format_double(rad2deg(q[i]));
        out << '\n';
    }
}

Path read_path(std::istream& in)
{
    Path p;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        std::stringstream ss(line);
        std::string cell;
        JointConfig q;
        std::size_t i = 0;
        while (std::getline(ss, cell, ',')) {
            if (i >= kDof)
                throw ParseError("path line " + std::to_string(lineno) + " has more than 6 values");
            try {
                std::size_t used = 0;
                q[i] = deg2rad(std::stod(cell, &used));
                if (used != cell.size())
                    throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ParseError("path line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
            ++i;
        }
        if (i != kDof)
            throw ParseError("path line " + std::to_string(lineno) + " needs 6 values");
        p.waypoints.push_back(q);
    }
    if (p.empty())
        throw ParseError("path file is empty");
    return p;
}

namespace {

// Free text in a CSV cell: separators and quotes become spaces.
std::string csv_text(std::string s)
{
    std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '"'; }, ' ');
    return s;
}

} // namespace

void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepEntry>& entries)
{
    const bool yaw = axis == SweepAxis::yaw;
    CsvWriter csv(out, "weldplan.sweep/1",
                  {"axis", yaw ? "offset_deg" : "offset_mm", "score_mm2", "converged", "iterations", "failed", "error"});
    for (const auto& e : entries) {
        csv.row({to_string(axis), csv_number(yaw ? rad2deg(e.offset) : e.offset), csv_number(e.score),
                 e.converged ? "1" : "0", std::to_string(e.iterations), e.failed ? "1" : "0", csv_text(e.error)});
    }
}

// ---------------------------------------------------------------------------

std::vector<BenchRecord> run_bench(const Workcell& cell, const BenchOptions& options)
{
    std::vector<std::string> planners = options.planners.empty() ? planner_names() : options.planners;
    std::vector<std::string> goals = options.goals;
    if (goals.empty()) {
        for (const auto& g : cell.goals)
            goals.push_back(g.name);
    }
    for (const auto& p : planners) {
        if (!is_planner_name(p))
            throw InvalidArgument("unknown planner '" + p + "'");
    }
    std::vector<BenchRecord> records;
    for (const auto& p : planners) {
        for (const auto& g : goals) {
            for (int t = 0; t < options.trials; ++t) {
                BenchRecord r;
                r.planner = p;
                r.goal = g;
                r.trial = t;
                r.seed = trial_seed(cell.config.seed, p, g, t);
                records.push_back(std::move(r));
            }
        }
    }
    const PlanningProblem problem = planning_problem(cell);
    const int n = cell.config.bench.cost_subdivisions;
    parallel_for(
        records.size(),
        [&](std::size_t i) {
            BenchRecord& r = records[i];
            const PlanningQuery query = planning_query(cell, r.goal);
            const PlanResult res = plan(r.planner, problem, make_request(cell, query, r.planner, r.seed));
            r.success = res.ok();
            r.status = res.status;
            r.wall_time = res.stats.wall_time;
            r.waypoints = res.path.size();
            r.nodes = res.stats.start_tree_nodes + (r.planner == "prmstar" || r.planner == "lbtrrt"
                                                         ? 0
                                                         : res.stats.goal_tree_nodes);
            if (r.success) {
                r.path = res.path;
                r.path_length = path_length(res.path);
                r.cost = evaluate_path(cell.chain(), res.path, query.goal_spec, n);
                r.ic_pos = r.cost.ic_pos;
                r.ic_orient = r.cost.ic_orient;
            }
        },
        std::max(1U, options.workers));
    std::sort(records.begin(), records.end(), [](const BenchRecord& a, const BenchRecord& b) {
        return std::tie(a.planner, a.goal, a.trial) < std::tie(b.planner, b.goal, b.trial);
    });
    return records;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records)
{
    CsvWriter csv(out, "weldplan.bench/1",
                  {"planner", "goal", "trial", "seed", "success", "status", "path_length_rad", "ic_pos",
                   "ic_orient", "waypoints", "nodes"});
    for (const auto& r : records) {
        csv.row({r.planner, r.goal, std::to_string(r.trial), std::to_string(r.seed), r.success ? "1" : "0",
                 to_string(r.status), csv_number(r.path_length), csv_number(r.ic_pos), csv_number(r.ic_orient),
                 std::to_string(r.waypoints), std::to_string(r.nodes)});
    }
}

void write_bench_timing_csv(std::ostream& out, const std::vector<BenchRecord>& records)
{
    CsvWriter csv(out, "weldplan.bench_timing/1", {"planner", "goal", "trial", "seed", "wall_time_s"});
    for (const auto& r : records)
        csv.row({r.planner, r.goal, std::to_string(r.trial), std::to_string(r.seed), csv_number(r.wall_time)});
}

std::vector<BenchSummary> summarize(const std::vector<BenchRecord>& records)
{
    std::vector<BenchSummary> out;
    std::map<std::pair<std::string, std::string>, std::vector<const BenchRecord*>> groups;
    for (const auto& r : records) {
        auto key = std::make_pair(r.planner, r.goal);
        if (!groups.count(key)) {
            BenchSummary s;
            s.planner = r.planner;
            s.goal = r.goal;
            out.push_back(s);
        }
        groups[key].push_back(&r);
    }
    for (auto& s : out) {
        const auto& g = groups[{s.planner, s.goal}];
        s.runs = static_cast<int>(g.size());
        std::vector<double> pos;
        double orient = 0.0, length = 0.0;
        for (const auto* r : g) {
            if (!r->success)
                continue;
            pos.push_back(r->ic_pos);
            orient += r->ic_orient;
            length += r->path_length;
        }
        s.successes = static_cast<int>(pos.size());
        if (pos.empty()) {
            s.mean_ic_pos = s.mean_ic_orient = s.cv_ic_pos = s.mean_length = std::nan("");
            continue;
        }
        const double k = static_cast<double>(pos.size());
        double mean = 0.0;
        for (double v : pos)
            mean += v;
        mean /= k;
        double var = 0.0;
        for (double v : pos)
            var += (v - mean) * (v - mean);
        var = pos.size() > 1 ? var / (k - 1.0) : 0.0;
        s.mean_ic_pos = mean;
        s.mean_ic_orient = orient / k;
        s.mean_length = length / k;
        s.cv_ic_pos = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
    }
    return out;
}

void write_summary_csv(std::ostream& out, const std::vector<BenchSummary>& summary)
{
    CsvWriter csv(out, "weldplan.bench_summary/1",
                  {"planner", "goal", "runs", "successes", "mean_ic_pos", "mean_ic_orient", "cv_ic_pos",
                   "mean_path_length_rad"});
    for (const auto& s : summary) {
        csv.row({s.planner, s.goal, std::to_string(s.runs), std::to_string(s.successes), csv_number(s.mean_ic_pos),
                 csv_number(s.mean_ic_orient), csv_number(s.cv_ic_pos), csv_number(s.mean_length)});
    }
}

namespace {

std::vector<std::string> planners_in(const std::vector<BenchRecord>& records)
{
    std::vector<std::string> out;
    for (const auto& r : records) {
        if (std::find(out.begin(), out.end(), r.planner) == out.end())
            out.push_back(r.planner);
    }
    return out;
}

} // namespace

std::string ic_scatter_svg(const std::vector<BenchRecord>& records, const std::string& goal, bool orientation)
{
    std::vector<PlotSeries> series;
    for (const auto& p : planners_in(records)) {
        PlotSeries s;
        s.label = p;
        s.markers_only = true;
        for (const auto& r : records) {
            if (r.planner == p && r.goal == goal && r.success) {
                s.x.push_back(r.trial + 1);
                s.y.push_back(orientation ? r.ic_orient : r.ic_pos);
            }
        }
        series.push_back(std::move(s));
    }
    PlotSpec spec;
    spec.title = std::string("Integral cost per trial, ") + goal + (orientation ? " (orientation)" : " (position)");
    spec.x_label = "trial";
    spec.y_label = orientation ? "IC(c_orient) [rad]" : "IC(c_pos) [mm rad]";
    return svg_plot(spec, series);
}

std::string cost_curve_svg(const std::vector<BenchRecord>& records, const std::string& goal, bool orientation)
{
    std::vector<PlotSeries> series;
    for (const auto& p : planners_in(records)) {
        for (const auto& r : records) {
            if (r.planner != p || r.goal != goal || !r.success)
                continue;
            PlotSeries s;
            s.label = p;
            s.x = r.cost.sample_param;
            s.y = orientation ? r.cost.sample_orient : r.cost.sample_pos;
            series.push_back(std::move(s));
            break;
        }
    }
    PlotSpec spec;
    spec.title = std::string("Cost along the path, ") + goal;
    spec.x_label = "normalised path parameter (joint-space arc length)";
    spec.y_label = orientation ? "c_orient" : "c_pos [mm]";
    return svg_plot(spec, series);
}

} // namespace weldplan
