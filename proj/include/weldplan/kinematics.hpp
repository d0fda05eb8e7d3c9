#pragma once

#include <array>
#include <string>
#include <vector>

#include "weldplan/geometry.hpp"

namespace weldplan {

constexpr std::size_t kDof = 6;

using JointVector = Eigen::Matrix<double, 6, 1>;
using Jacobian = Eigen::Matrix<double, 6, 6>;

// Joint angles in radians.
struct JointConfig {
    JointVector q = JointVector::Zero();

    JointConfig() = default;
    explicit JointConfig(const JointVector& v) : q(v) {}
    JointConfig(std::initializer_list<double> values);

    double operator[](std::size_t i) const { return q[static_cast<Eigen::Index>(i)]; }
    double& operator[](std::size_t i) { return q[static_cast<Eigen::Index>(i)]; }
    bool finite() const { return q.allFinite(); }
    bool operator==(const JointConfig& o) const { return q == o.q; }
};

// Standard Denavit-Hartenberg row: Rz(theta + theta_offset) Tz(d) Tx(a) Rx(alpha).
struct DhJoint {
    double a = 0.0;            // mm
    double alpha = 0.0;        // rad
    double d = 0.0;            // mm
    double theta_offset = 0.0; // rad
    double lower = -kPi;       // rad
    double upper = kPi;        // rad
};

struct KinematicChain {
    std::string name = "chain";
    RigidTransform base; // world -> joint 1 frame
    std::array<DhJoint, kDof> joints{};
    RigidTransform tool; // flange -> torch tip

    // lo < hi per joint; throws InvalidArgument.
    void validate() const;
    bool within_limits(const JointConfig& q, double tol = 0.0) const;
    JointConfig clamp(const JointConfig& q) const;
    JointVector lower() const;
    JointVector upper() const;
};

// Six-axis industrial arm with realistic proportions (about 1.65 m reach plus a
// bent-neck welding torch). Used as the default fixture when no chain is
// configured.
KinematicChain make_reference_chain();

RigidTransform dh_transform(const DhJoint& joint, double theta);

// world -> frame i for i = 0..6 (frame 0 is the base, frame 6 the flange),
// followed by the tool frame at index 7.
std::array<RigidTransform, kDof + 2> link_frames(const KinematicChain& chain, const JointConfig& q);

// Base (world) -> torch tip.
RigidTransform fk(const KinematicChain& chain, const JointConfig& q);

// Geometric Jacobian at the torch tip: rows 0-2 linear (mm/rad), rows 3-5 angular.
Jacobian jacobian(const KinematicChain& chain, const JointConfig& q);

// 6-vector pose error: translation (mm) then axis-angle of R_target * R_current^T (rad).
Eigen::Matrix<double, 6, 1> pose_error(const RigidTransform& current, const RigidTransform& target);

enum class IkMethod { pseudo_inverse, damped_least_squares };

struct IkParams {
    IkMethod method = IkMethod::damped_least_squares;
    double damping = 0.05;               // lambda
    int max_iterations = 200;
    double position_tolerance = 0.5;     // mm
    double orientation_tolerance = 1e-3; // rad
    double step_clamp = 0.2;             // rad, per joint

    void validate() const;
};

enum class IkStatus { success, no_convergence, joint_limit_stuck };

std::string to_string(IkStatus s);

struct IkIteration {
    double error_norm = 0.0;    // |e| before the step
    double raw_step_norm = 0.0; // |dq| from the solver, before clamping
    double applied_step_norm = 0.0;
};

struct IkResult {
    IkStatus status = IkStatus::no_convergence;
    JointConfig q; // best configuration found
    double position_error = 0.0;
    double orientation_error = 0.0;
    int iterations = 0;
    std::vector<IkIteration> log;

    bool ok() const { return status == IkStatus::success; }
};

// One solver step without clamping: J^+ e or J^T (J J^T + lambda^2 I)^-1 e.
JointVector ik_step(const Jacobian& j, const Eigen::Matrix<double, 6, 1>& e, const IkParams& params);

// Iterative IK from a seed. Steps are scaled so no joint moves more than
// step_clamp, and joints are clamped into their limits.
IkResult ik(const KinematicChain& chain, const RigidTransform& target, const JointConfig& seed,
            const IkParams& params = {});

} // namespace weldplan
