#pragma once

#include <vector>

#include "weldplan/kinematics.hpp"
#include "weldplan/planners.hpp"

namespace weldplan {

// Torch-tip goal: position (mm) and orientation.
struct GoalSpec {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();

    static GoalSpec from_pose(const RigidTransform& pose);
    void validate() const;
};

// min(|a - b|, |a + b|) over the coefficient 4-vectors.
double quaternion_distance(const Quat& a, const Quat& b);

double c_pos(const KinematicChain& chain, const JointConfig& q, const GoalSpec& goal);
double c_orient(const KinematicChain& chain, const JointConfig& q, const GoalSpec& goal);
// Comparison variant: norm of the wrapped ZYX Euler angle differences (rad).
double c_orient_euler(const KinematicChain& chain, const JointConfig& q, const GoalSpec& goal);

CostFunction position_cost(const KinematicChain& chain, const GoalSpec& goal);
CostFunction orientation_cost(const KinematicChain& chain, const GoalSpec& goal);
// c_pos + weight * c_orient, used to drive the BiTRRT transition test.
CostFunction planning_cost(const KinematicChain& chain, const GoalSpec& goal, double orientation_weight = 100.0);

// Configuration at joint-space arc length s along the path (clamped to [0, L]).
JointConfig interpolate(const Path& path, double s);

// (L / n) * sum_{k=1..n} c(pi(k / n)) with pi parameterised by joint-space arc
// length. A zero-length path costs 0.
double integral_cost(const Path& path, const CostFunction& c, int n);

struct CostReport {
    std::vector<double> waypoint_pos;    // mm, one per waypoint
    std::vector<double> waypoint_orient; // quaternion distance
    std::vector<double> sample_param;    // k / n
    std::vector<double> sample_pos;
    std::vector<double> sample_orient;
    double length = 0.0; // rad
    int subdivisions = 0;
    double ic_pos = 0.0;
    double ic_orient = 0.0;
};

CostReport evaluate_path(const KinematicChain& chain, const Path& path, const GoalSpec& goal, int n = 100);

} // namespace weldplan
