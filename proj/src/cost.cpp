#include "weldplan/cost.hpp"

#include <cmath>

namespace weldplan {

GoalSpec GoalSpec::from_pose(const RigidTransform& pose)
{
    return {pose.translation(), pose.rotation()};
}

void GoalSpec::validate() const
{
    if (!position.allFinite())
        throw InvalidArgument("goal position must be finite");
    if (!orientation.coeffs().allFinite() || std::abs(orientation.norm() - 1.0) > 1e-6)
        throw InvalidArgument("goal orientation must be a unit quaternion");
}

double quaternion_distance(const Quat& a, const Quat& b)
{
    return std::min((a.coeffs() - b.coeffs()).norm(), (a.coeffs() + b.coeffs()).norm());
}

double c_pos(const KinematicChain& chain, const JointConfig& q, const GoalSpec& goal)
{
    return (fk(chain, q).translation() - goal.position).norm();
}

double c_orient(const KinematicChain& chain, const JointConfig& q, const GoalSpec& goal)
{
    return quaternion_distance(fk(chain, q).rotation(), goal.orientation);
}

namespace {

double wrap(double a)
{
    a = std::remainder(a, 2.0 * kPi);
    return a <= -kPi ? a + 2.0 * kPi : a;
}

} // namespace

double c_orient_euler(const KinematicChain& chain, const JointConfig& q, const GoalSpec& goal)
{
    const EulerZyx a = euler_from_quaternion(fk(chain, q).rotation());
    const EulerZyx b = euler_from_quaternion(goal.orientation);
    return Vec3(wrap(a.yaw - b.yaw), wrap(a.pitch - b.pitch), wrap(a.roll - b.roll)).norm();
}

CostFunction position_cost(const KinematicChain& chain, const GoalSpec& goal)
{
    return [chain, goal](const JointConfig& q) { return c_pos(chain, q, goal); };
}

CostFunction orientation_cost(const KinematicChain& chain, const GoalSpec& goal)
{
    return [chain, goal](const JointConfig& q) { return c_orient(chain, q, goal); };
}

CostFunction planning_cost(const KinematicChain& chain, const GoalSpec& goal, double orientation_weight)
{
    if (!(orientation_weight >= 0.0))
        throw InvalidArgument("orientation weight must be non-negative");
    return [chain, goal, orientation_weight](const JointConfig& q) {
        const RigidTransform t = fk(chain, q);
        return (t.translation() - goal.position).norm() +
               orientation_weight * quaternion_distance(t.rotation(), goal.orientation);
    };
}

JointConfig interpolate(const Path& path, double s)
{
    if (path.empty())
        throw InvalidArgument("cannot interpolate an empty path");
    if (s <= 0.0)
        return path.waypoints.front();
    double acc = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        const JointVector delta = path.waypoints[i].q - path.waypoints[i - 1].q;
        const double len = delta.norm();
        if (len == 0.0)
            continue;
        if (s <= acc + len)
            return JointConfig(path.waypoints[i - 1].q + delta * ((s - acc) / len));
        acc += len;
    }
    return path.waypoints.back();
}

double integral_cost(const Path& path, const CostFunction& c, int n)
{
    if (n < 1)
        throw InvalidArgument("integral cost needs n >= 1");
    if (path.empty())
        throw InvalidArgument("integral cost needs a non-empty path");
    if (!c)
        throw InvalidArgument("integral cost needs a cost function");
    const double length = path_length(path);
    if (length == 0.0)
        return 0.0;
    double sum = 0.0;
    for (int k = 1; k <= n; ++k) {
        // The last sample is the goal exactly, not a rounded interpolation.
        const JointConfig q = k == n ? path.waypoints.back() : interpolate(path, length * k / n);
        sum += c(q);
    }
    return length / n * sum;
}

CostReport evaluate_path(const KinematicChain& chain, const Path& path, const GoalSpec& goal, int n)
{
    goal.validate();
    CostReport r;
    r.subdivisions = n;
    r.length = path_length(path);
    const CostFunction pos = position_cost(chain, goal);
    const CostFunction orient = orientation_cost(chain, goal);
    r.ic_pos = integral_cost(path, pos, n);
    r.ic_orient = integral_cost(path, orient, n);
    for (const auto& q : path.waypoints) {
        r.waypoint_pos.push_back(pos(q));
        r.waypoint_orient.push_back(orient(q));
    }
    for (int k = 0; k <= n; ++k) {
        const JointConfig q = k == n ? path.waypoints.back() : interpolate(path, r.length * k / n);
        r.sample_param.push_back(static_cast<double>(k) / n);
        r.sample_pos.push_back(pos(q));
        r.sample_orient.push_back(orient(q));
    }
    return r;
}

} // namespace weldplan
