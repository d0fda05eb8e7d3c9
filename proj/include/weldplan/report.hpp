#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "weldplan/cost.hpp"
#include "weldplan/perception.hpp"
#include "weldplan/planners.hpp"
#include "weldplan/workcell.hpp"

namespace weldplan {

// ---------------------------------------------------------------------------
// CSV: "# schema: <name>/<version>" first, then the header row. Comma
// separated, '.' decimals, LF endings.

class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::string& schema, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);

private:
    std::ostream& out_;
    std::size_t columns_;
};

std::string csv_number(double v);

// ---------------------------------------------------------------------------
// SVG line and scatter plots

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool markers_only = false;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    int width = 720;
    int height = 440;
};

std::string svg_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series);

// ---------------------------------------------------------------------------
// Path files: one configuration per line, six comma-separated degrees.

void write_path(std::ostream& out, const Path& path);
Path read_path(std::istream& in);

// ---------------------------------------------------------------------------
// Sweep output

void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepEntry>& entries);

// ---------------------------------------------------------------------------
// Benchmark

struct BenchRecord {
    std::string planner;
    std::string goal;
    int trial = 0;
    std::uint64_t seed = 0;
    bool success = false;
    PlanStatus status = PlanStatus::timeout;
    double wall_time = 0.0;
    double path_length = 0.0;
    double ic_pos = 0.0;
    double ic_orient = 0.0;
    std::size_t waypoints = 0;
    std::size_t nodes = 0;
    Path path;
    CostReport cost;
};

struct BenchOptions {
    std::vector<std::string> planners; // empty = all
    std::vector<std::string> goals;    // empty = all configured goals
    int trials = 15;
    unsigned workers = 1;
};

// Records come back sorted by (planner, goal, trial) whatever the scheduling.
std::vector<BenchRecord> run_bench(const Workcell& cell, const BenchOptions& options);

// Deterministic columns only; wall time goes to the timing file.
void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records);
void write_bench_timing_csv(std::ostream& out, const std::vector<BenchRecord>& records);

struct BenchSummary {
    std::string planner;
    std::string goal;
    int runs = 0;
    int successes = 0;
    double mean_ic_pos = 0.0;
    double mean_ic_orient = 0.0;
    double cv_ic_pos = 0.0; // sample standard deviation over mean
    double mean_length = 0.0;
};

// Statistics over successful runs, in record order of first appearance.
std::vector<BenchSummary> summarize(const std::vector<BenchRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<BenchSummary>& summary);

// IC per trial for every planner on one goal.
std::string ic_scatter_svg(const std::vector<BenchRecord>& records, const std::string& goal, bool orientation);
// Cost along the normalised path parameter for the first successful trial of
// every planner on one goal.
std::string cost_curve_svg(const std::vector<BenchRecord>& records, const std::string& goal, bool orientation);

} // namespace weldplan
