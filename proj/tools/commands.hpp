#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace weldplan::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitTimeout = 3; // also no path found
constexpr int kExitRegistration = 4;

// Bad command-line input detected after parsing (unknown planner, goal, ...).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Registration could not produce a transform.
class RegistrationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GlobalOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out = "out";
};

struct PerceiveOptions {
    double offset_x = 0.0; // mm
    double offset_y = 0.0;
    double offset_z = 0.0;
    double offset_yaw = 0.0; // deg
};

struct RegisterOptions {
    std::filesystem::path source;
    std::filesystem::path target;
    std::filesystem::path report; // empty = <out>/registration.json
};

struct SweepOptions {
    std::string axis = "x";
    std::optional<double> max_offset; // mm, or deg for yaw
    int steps = 7;
    unsigned workers = 0; // 0 = one per hardware thread
};

struct PlanOptions {
    std::string planner = "bitrrt";
    std::string goal = "goal1";
    std::optional<double> time_budget;
};

struct BenchCliOptions {
    std::optional<int> trials;
    std::vector<std::string> planners;
    std::vector<std::string> goals;
    std::optional<unsigned> workers;
};

// Each command returns its exit code and reports progress on `log`.
int cmd_perceive(const GlobalOptions& global, const PerceiveOptions& options, std::ostream& log);
int cmd_register(const GlobalOptions& global, const RegisterOptions& options, std::ostream& log);
int cmd_sweep(const GlobalOptions& global, const SweepOptions& options, std::ostream& log);
int cmd_plan(const GlobalOptions& global, const PlanOptions& options, std::ostream& log);
int cmd_bench(const GlobalOptions& global, const BenchCliOptions& options, std::ostream& log);

} // namespace weldplan::cli
