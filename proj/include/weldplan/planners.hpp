#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "weldplan/kinematics.hpp"
#include "weldplan/scene.hpp"

namespace weldplan {

using CostFunction = std::function<double(const JointConfig&)>;

struct Path {
    std::vector<JointConfig> waypoints; // start first, goal last

    std::size_t size() const { return waypoints.size(); }
    bool empty() const { return waypoints.empty(); }
};

// Sum of unweighted Euclidean segment lengths (rad).
double path_length(const Path& path);

// Re-checks every segment with motion_valid.
bool path_valid(const Scene& scene, const KinematicChain& chain, const Path& path, const MotionCheckParams& params);

// ---------------------------------------------------------------------------
// Metropolis transition test

struct TransitionParams {
    double temperature_rate = 2.0;   // > 1
    int max_fails = 10;              // consecutive rejections before heating
    double initial_temperature = 1e-4; // times the initial cost range

    void validate() const;
};

// Temperature is in cost units. The normalisation K is the largest cost seen
// so far relative to the largest cost at construction, so it starts at 1 and
// grows when the search climbs into costlier regions.
struct TransitionState {
    double temperature = 1.0;
    double min_temperature = 0.0; // cooling stops here
    double temperature_rate = 2.0;
    int fails = 0;
    int max_fails = 10;
    double reference_cost = 1.0;
    double max_cost_seen = 1.0;

    // c_start and c_goal seed the cost range.
    static TransitionState initial(const TransitionParams& params, double c_start, double c_goal);

    double normalization() const { return max_cost_seen / reference_cost; }
};

// Probability that the test accepts a move from c_parent to c_new in `state`.
double acceptance_probability(const TransitionState& state, double c_parent, double c_new);

// Accepts every non-increasing move. An uphill move is accepted with
// probability exp(-(c_new - c_parent) / (K T)); an accepted uphill move cools
// T by the rate, and max_fails consecutive rejections heat it by the rate.
// `distance` is the length of the move; it is validated but the law uses the
// raw cost difference.
bool transition_test(TransitionState& state, double c_parent, double c_new, double distance, Rng& rng);

// ---------------------------------------------------------------------------
// Requests and results

struct PlanRequest {
    JointConfig start;
    JointConfig goal;
    CostFunction cost; // empty means constant cost
    double time_budget = 5.0; // s, hard wall-clock cap
    std::uint64_t seed = 0;
    double extension_step = 0.1; // rad
    double goal_bias = 0.05;

    void validate() const;
};

// Planner-specific knobs. Iteration budgets make runs reproducible; the time
// budget only caps pathological cases.
struct PlannerSettings {
    MotionCheckParams motion;
    // Planning treats obstacles as this much closer than the scene margin, so
    // paths keep passing when re-checked at a finer resolution.
    double clearance_padding = 2.0; // mm
    JointVector weights = JointVector::Ones();  // distance metric
    std::array<bool, kDof> locked{};           // locked joints keep their start value
    int max_iterations = 20000;                 // BiTRRT / RRT-Connect sampling rounds
    int rrt_star_iterations = 5000;
    double rrt_star_max_radius = 0.5;           // rad, caps the shrinking rewiring ball
    int prm_samples = 300;
    int lbt_iterations = 5000;
    double lbt_epsilon = 0.4;
    TransitionParams transition;

    void validate() const;
};

enum class PlanStatus { success, timeout, invalid_endpoint, disconnected };

std::string to_string(PlanStatus s);

struct PlanStats {
    std::string planner;
    std::uint64_t seed = 0;
    bool success = false;
    double wall_time = 0.0; // s
    long iterations = 0;
    std::size_t start_tree_nodes = 0;
    std::size_t goal_tree_nodes = 0; // roadmap edges for PRM*
    std::size_t motion_checks = 0;
    std::size_t path_waypoints = 0;
    double path_length = 0.0;
    std::vector<double> best_cost_trace; // per iteration, anytime planners
    double goal_lower_bound = 0.0;       // LBT-RRT lower-bound graph cost to the goal
    double final_temperature_start = 0.0;
    double final_temperature_goal = 0.0;
};

struct PlanResult {
    PlanStatus status = PlanStatus::timeout;
    Path path;
    PlanStats stats;

    bool ok() const { return status == PlanStatus::success; }
};

struct PlanningProblem {
    const Scene& scene;
    const KinematicChain& chain;
    PlannerSettings settings;
};

PlanResult plan_bitrrt(const PlanningProblem& problem, const PlanRequest& request);
PlanResult plan_rrt_connect(const PlanningProblem& problem, const PlanRequest& request);
PlanResult plan_rrt_star(const PlanningProblem& problem, const PlanRequest& request);
PlanResult plan_prm_star(const PlanningProblem& problem, const PlanRequest& request);
PlanResult plan_lbt_rrt(const PlanningProblem& problem, const PlanRequest& request);

// Names accepted by plan(): bitrrt, rrtconnect, rrtstar, prmstar, lbtrrt.
const std::vector<std::string>& planner_names();
bool is_planner_name(const std::string& name);
PlanResult plan(const std::string& planner, const PlanningProblem& problem, const PlanRequest& request);

} // namespace weldplan
