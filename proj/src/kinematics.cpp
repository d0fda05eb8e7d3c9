#include "weldplan/kinematics.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>

namespace weldplan {

JointConfig::JointConfig(std::initializer_list<double> values)
{
    if (values.size() != kDof)
        throw InvalidArgument("JointConfig needs exactly 6 values");
    Eigen::Index i = 0;
    for (double v : values)
        q[i++] = v;
}

void KinematicChain::validate() const
{
    for (std::size_t i = 0; i < kDof; ++i) {
        const auto& j = joints[i];
        if (!(j.lower < j.upper))
            throw InvalidArgument("joint " + std::to_string(i + 1) + " has lower limit >= upper limit");
        if (!std::isfinite(j.a) || !std::isfinite(j.d) || !std::isfinite(j.alpha) || !std::isfinite(j.theta_offset))
            throw InvalidArgument("joint " + std::to_string(i + 1) + " has a non-finite DH parameter");
    }
}

bool KinematicChain::within_limits(const JointConfig& q, double tol) const
{
    for (std::size_t i = 0; i < kDof; ++i) {
        if (q[i] < joints[i].lower - tol || q[i] > joints[i].upper + tol)
            return false;
    }
    return true;
}

JointConfig KinematicChain::clamp(const JointConfig& q) const
{
    JointConfig out = q;
    for (std::size_t i = 0; i < kDof; ++i)
        out[i] = std::clamp(q[i], joints[i].lower, joints[i].upper);
    return out;
}

JointVector KinematicChain::lower() const
{
    JointVector v;
    for (std::size_t i = 0; i < kDof; ++i)
        v[static_cast<Eigen::Index>(i)] = joints[i].lower;
    return v;
}

JointVector KinematicChain::upper() const
{
    JointVector v;
    for (std::size_t i = 0; i < kDof; ++i)
        v[static_cast<Eigen::Index>(i)] = joints[i].upper;
    return v;
}

KinematicChain make_reference_chain()
{
    KinematicChain c;
    c.name = "reference-6r";
    //            a      alpha          d      theta_offset       lower            upper
    c.joints[0] = {150.0, -kPi / 2, 445.0, 0.0, deg2rad(-180), deg2rad(180)};
    c.joints[1] = {700.0, 0.0, 0.0, -kPi / 2, deg2rad(-95), deg2rad(155)};
    c.joints[2] = {115.0, -kPi / 2, 0.0, 0.0, deg2rad(-180), deg2rad(75)};
    c.joints[3] = {0.0, kPi / 2, 795.0, 0.0, deg2rad(-180), deg2rad(180)};
    c.joints[4] = {0.0, -kPi / 2, 0.0, 0.0, deg2rad(-120), deg2rad(120)};
    c.joints[5] = {0.0, 0.0, 85.0, 0.0, deg2rad(-180), deg2rad(180)};
    // Bent-neck torch: 22 degree neck, tip 380 mm out from the flange.
    c.tool = RigidTransform::from_translation(0.0, 0.0, 240.0) * RigidTransform::rot_y(deg2rad(22.0)) *
             RigidTransform::from_translation(0.0, 0.0, 140.0);
    return c;
}

RigidTransform dh_transform(const DhJoint& j, double theta)
{
    return RigidTransform::rot_z(theta + j.theta_offset) * RigidTransform::from_translation(j.a, 0.0, j.d) *
           RigidTransform::rot_x(j.alpha);
}

std::array<RigidTransform, kDof + 2> link_frames(const KinematicChain& chain, const JointConfig& q)
{
    std::array<RigidTransform, kDof + 2> frames;
    frames[0] = chain.base;
    for (std::size_t i = 0; i < kDof; ++i)
        frames[i + 1] = frames[i] * dh_transform(chain.joints[i], q[i]);
    frames[kDof + 1] = frames[kDof] * chain.tool;
    return frames;
}

RigidTransform fk(const KinematicChain& chain, const JointConfig& q)
{
    RigidTransform t = chain.base;
    for (std::size_t i = 0; i < kDof; ++i)
        t = t * dh_transform(chain.joints[i], q[i]);
    return t * chain.tool;
}

Jacobian jacobian(const KinematicChain& chain, const JointConfig& q)
{
    const auto frames = link_frames(chain, q);
    const Vec3 tip = frames[kDof + 1].translation();
    Jacobian j;
    for (std::size_t i = 0; i < kDof; ++i) {
        // Joint i+1 rotates about z of frame i.
        const Vec3 axis = frames[i].apply_direction(Vec3::UnitZ());
        const Vec3 origin = frames[i].translation();
        const auto col = static_cast<Eigen::Index>(i);
        j.block<3, 1>(0, col) = axis.cross(tip - origin);
        j.block<3, 1>(3, col) = axis;
    }
    return j;
}

Eigen::Matrix<double, 6, 1> pose_error(const RigidTransform& current, const RigidTransform& target)
{
    Eigen::Matrix<double, 6, 1> e;
    e.head<3>() = target.translation() - current.translation();
    Quat dq = target.rotation() * current.rotation().conjugate();
    if (dq.w() < 0.0)
        dq.coeffs() *= -1.0;
    const Eigen::AngleAxisd aa(dq.normalized());
    e.tail<3>() = aa.axis() * aa.angle();
    return e;
}

void IkParams::validate() const
{
    if (method == IkMethod::damped_least_squares && !(damping > 0.0))
        throw InvalidArgument("DLS damping must be positive");
    if (!(position_tolerance > 0.0) || !(orientation_tolerance > 0.0))
        throw InvalidArgument("IK tolerances must be positive");
    if (!(step_clamp > 0.0))
        throw InvalidArgument("IK step clamp must be positive");
    if (max_iterations < 0)
        throw InvalidArgument("IK max_iterations must be non-negative");
}

std::string to_string(IkStatus s)
{
    switch (s) {
    case IkStatus::success:
        return "success";
    case IkStatus::no_convergence:
        return "no_convergence";
    case IkStatus::joint_limit_stuck:
        return "joint_limit_stuck";
    }
    return "?";
}

JointVector ik_step(const Jacobian& j, const Eigen::Matrix<double, 6, 1>& e, const IkParams& params)
{
    if (params.method == IkMethod::pseudo_inverse) {
        const Eigen::JacobiSVD<Jacobian> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        const double tol = 1e-12 * std::max(1.0, s(0));
        JointVector tmp = svd.matrixU().transpose() * e;
        for (Eigen::Index i = 0; i < 6; ++i)
            tmp(i) = s(i) > tol ? tmp(i) / s(i) : 0.0;
        return svd.matrixV() * tmp;
    }
    const double l2 = params.damping * params.damping;
    const Jacobian jjt = j * j.transpose() + l2 * Jacobian::Identity();
    return j.transpose() * jjt.ldlt().solve(e);
}

IkResult ik(const KinematicChain& chain, const RigidTransform& target, const JointConfig& seed, const IkParams& params)
{
    params.validate();
    chain.validate();
    IkResult res;
    JointConfig q = chain.clamp(seed);

    auto residuals = [&](const JointConfig& c) {
        const auto e = pose_error(fk(chain, c), target);
        return std::pair{e.head<3>().norm(), e.tail<3>().norm()};
    };
    auto score = [&](const std::pair<double, double>& r) {
        return r.first / params.position_tolerance + r.second / params.orientation_tolerance;
    };

    auto best_r = residuals(q);
    res.q = q;
    int stalled = 0;
    for (int it = 0; it < params.max_iterations; ++it) {
        const auto r = residuals(q);
        if (r.first <= params.position_tolerance && r.second <= params.orientation_tolerance) {
            res.status = IkStatus::success;
            res.q = q;
            res.position_error = r.first;
            res.orientation_error = r.second;
            res.iterations = it;
            return res;
        }
        const auto e = pose_error(fk(chain, q), target);
        JointVector dq = ik_step(jacobian(chain, q), e, params);
        IkIteration log{e.norm(), dq.norm(), 0.0};
        const double max_abs = dq.cwiseAbs().maxCoeff();
        if (max_abs > params.step_clamp)
            dq *= params.step_clamp / max_abs;
        const JointConfig next = chain.clamp(JointConfig(q.q + dq));
        log.applied_step_norm = (next.q - q.q).norm();
        res.log.push_back(log);
        res.iterations = it + 1;

        // Pinned against limits with no room to move.
        stalled = (log.applied_step_norm < 1e-12 && dq.norm() > 1e-12) ? stalled + 1 : 0;
        q = next;
        const auto nr = residuals(q);
        if (score(nr) < score(best_r)) {
            best_r = nr;
            res.q = q;
        }
        if (stalled >= 3) {
            res.status = IkStatus::joint_limit_stuck;
            break;
        }
    }
    const auto final_r = residuals(q);
    if (final_r.first <= params.position_tolerance && final_r.second <= params.orientation_tolerance) {
        res.status = IkStatus::success;
        res.q = q;
        best_r = final_r;
    } else if (res.status != IkStatus::joint_limit_stuck) {
        res.status = IkStatus::no_convergence;
    }
    res.position_error = best_r.first;
    res.orientation_error = best_r.second;
    return res;
}

} // namespace weldplan
