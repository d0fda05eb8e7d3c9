#include "doctest.h"

#include "support.hpp"
#include "weldplan/kinematics.hpp"

using namespace weldplan;
using weldplan::testing::dh_product;

namespace {

JointConfig random_config(const KinematicChain& chain, Rng& rng)
{
    JointConfig q;
    for (std::size_t i = 0; i < kDof; ++i)
        q[i] = rng.uniform(chain.joints[i].lower, chain.joints[i].upper);
    return q;
}

// Central differences of fk; the angular part from the rotation between the
// two perturbed poses.
Jacobian numeric_jacobian(const KinematicChain& chain, const JointConfig& q, double h)
{
    Jacobian j;
    for (std::size_t i = 0; i < kDof; ++i) {
        JointConfig a = q, b = q;
        a[i] += h;
        b[i] -= h;
        const RigidTransform ta = fk(chain, a), tb = fk(chain, b);
        const auto col = static_cast<Eigen::Index>(i);
        j.block<3, 1>(0, col) = (ta.translation() - tb.translation()) / (2 * h);
        const Eigen::AngleAxisd d(ta.rotation() * tb.rotation().inverse());
        j.block<3, 1>(3, col) = d.axis() * d.angle() / (2 * h);
    }
    return j;
}

} // namespace

TEST_CASE("collapsed chain is a pure translation")
{
    KinematicChain c;
    double sum = 0.0;
    for (std::size_t i = 0; i < kDof; ++i) {
        c.joints[i] = DhJoint{};
        c.joints[i].d = 10.0 * (i + 1);
        sum += c.joints[i].d;
    }
    const RigidTransform t = fk(c, JointConfig{});
    CHECK((t.translation() - Vec3(0, 0, sum)).norm() < 1e-12);
    CHECK(rotation_distance(t.rotation(), Quat::Identity()) < 1e-12);
}

TEST_CASE("fk matches the hand-composed DH product")
{
    const KinematicChain c = make_reference_chain();
    CHECK((fk(c, JointConfig{}).matrix() - dh_product(c, JointConfig{})).norm() < 1e-9);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const JointConfig q = random_config(c, rng);
        CHECK((fk(c, q).matrix() - dh_product(c, q)).norm() < 1e-9);
    }
}

TEST_CASE("joint six turns the tool about the flange axis")
{
    KinematicChain c = make_reference_chain();
    c.tool = RigidTransform::identity();
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
        const JointConfig q = random_config(c, rng);
        JointConfig p = q;
        p[5] += 0.3;
        const RigidTransform a = fk(c, q), b = fk(c, p);
        CHECK((a.translation() - b.translation()).norm() < 1e-9);
        const RigidTransform expect = a * RigidTransform::rot_z(0.3);
        CHECK(rotation_distance(expect.rotation(), b.rotation()) < 1e-9);
    }
}

TEST_CASE("fk is bitwise deterministic")
{
    const KinematicChain c = make_reference_chain();
    Rng rng(3);
    const JointConfig q = random_config(c, rng);
    const Mat4 a = fk(c, q).matrix(), b = fk(c, q).matrix();
    CHECK(a == b);
}

TEST_CASE("link frames end at the flange and the tool")
{
    const KinematicChain c = make_reference_chain();
    Rng rng(4);
    const JointConfig q = random_config(c, rng);
    const auto frames = link_frames(c, q);
    CHECK((frames[0].matrix() - c.base.matrix()).norm() < 1e-12);
    CHECK((frames[7].matrix() - fk(c, q).matrix()).norm() < 1e-9);
    CHECK(((frames[6] * c.tool).matrix() - frames[7].matrix()).norm() < 1e-9);
}

TEST_CASE("jacobian matches finite differences")
{
    const KinematicChain c = make_reference_chain();
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const JointConfig q = random_config(c, rng);
        const Jacobian j = jacobian(c, q);
        const Jacobian n = numeric_jacobian(c, q, 1e-6);
        CHECK((j - n).norm() <= 1e-3 * j.norm());
        for (Eigen::Index k = 0; k < 6; ++k)
            CHECK(j.block<3, 1>(3, k).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("a joint axis through the tool point has no linear part")
{
    KinematicChain c = make_reference_chain();
    c.tool = RigidTransform::from_translation(0, 0, 120);
    Rng rng(6);
    for (int i = 0; i < 10; ++i) {
        const Jacobian j = jacobian(c, random_config(c, rng));
        CHECK(j.block<3, 1>(0, 5).norm() < 1e-9);
    }
}

TEST_CASE("pose error")
{
    const RigidTransform a(quaternion_from_euler(0.1, 0.2, 0.3), Vec3(1, 2, 3));
    CHECK(pose_error(a, a).norm() < 1e-12);
    const RigidTransform b = RigidTransform::from_translation(10, 0, 0) * RigidTransform::rot_z(0.2) * a;
    const auto e = pose_error(a, b);
    CHECK(e.tail<3>().norm() == doctest::Approx(0.2).epsilon(1e-9));
    CHECK((e.tail<3>().normalized() - Vec3::UnitZ()).norm() < 1e-9);
}

TEST_CASE("ik at the seed pose does nothing")
{
    const KinematicChain c = make_reference_chain();
    Rng rng(7);
    const JointConfig q = random_config(c, rng);
    const IkResult r = ik(c, fk(c, q), q);
    CHECK(r.ok());
    CHECK(r.iterations == 0);
    CHECK(r.q == q);
}

TEST_CASE("ik converges from a perturbed seed")
{
    const KinematicChain c = make_reference_chain();
    Rng rng(8);
    for (IkMethod m : {IkMethod::damped_least_squares, IkMethod::pseudo_inverse}) {
        IkParams p;
        p.method = m;
        p.position_tolerance = 0.05;
        p.orientation_tolerance = 1e-4;
        int solved = 0;
        for (int i = 0; i < 50; ++i) {
            JointConfig q;
            for (std::size_t k = 0; k < kDof; ++k)
                q[k] = rng.uniform(c.joints[k].lower + 0.2, c.joints[k].upper - 0.2);
            if (std::abs(q[4]) < 0.2)
                continue; // keep away from the wrist singularity
            JointConfig seed = q;
            for (std::size_t k = 0; k < kDof; ++k)
                seed[k] += rng.uniform(-0.1, 0.1);
            const RigidTransform target = fk(c, q);
            const IkResult r = ik(c, target, seed, p);
            REQUIRE(r.ok());
            ++solved;
            const RigidTransform got = fk(c, r.q);
            CHECK((got.translation() - target.translation()).norm() < 0.1);
            CHECK(rotation_distance(got.rotation(), target.rotation()) <= p.orientation_tolerance + 1e-12);
            CHECK(r.position_error <= p.position_tolerance);
            CHECK(c.within_limits(r.q));
        }
        CHECK(solved > 30);
    }
}

TEST_CASE("dls steps stay bounded near the wrist singularity")
{
    const KinematicChain c = make_reference_chain();
    // q5 near 0 almost aligns joints 4 and 6
    const JointConfig near{0.2, 0.1, 0.3, 0.0, 1e-4, 0.0};
    const Jacobian j = jacobian(c, near);
    const Eigen::JacobiSVD<Jacobian> svd(j, Eigen::ComputeFullU);
    REQUIRE(svd.singularValues()[5] < 1e-3);
    // an error along the weakest direction
    const Eigen::Matrix<double, 6, 1> e = 0.05 * svd.matrixU().col(5);

    IkParams dls;
    IkParams pinv;
    pinv.method = IkMethod::pseudo_inverse;
    const double raw_pinv = ik_step(j, e, pinv).norm();
    const double raw_dls = ik_step(j, e, dls).norm();
    CHECK(raw_pinv > dls.step_clamp);
    CHECK(raw_dls <= e.norm() / (2.0 * dls.damping));

    const RigidTransform target =
        RigidTransform::from_translation(0, 15, -10) * fk(c, near) * RigidTransform::rot_x(0.05);
    const IkResult r = ik(c, target, near, dls);
    REQUIRE(!r.log.empty());
    for (const auto& it : r.log) {
        CHECK(it.raw_step_norm <= it.error_norm / (2.0 * dls.damping) + 1e-12);
        CHECK(it.applied_step_norm <= it.raw_step_norm + 1e-12);
    }
    CHECK(r.ok());
}

TEST_CASE("dls step bound at random configurations")
{
    const KinematicChain c = make_reference_chain();
    Rng rng(9);
    IkParams p;
    for (int i = 0; i < 200; ++i) {
        const JointConfig q = random_config(c, rng);
        Eigen::Matrix<double, 6, 1> e;
        for (int k = 0; k < 6; ++k)
            e[k] = k < 3 ? rng.uniform(-50, 50) : rng.uniform(-0.5, 0.5);
        CHECK(ik_step(jacobian(c, q), e, p).norm() <= e.norm() / (2.0 * p.damping) + 1e-12);
    }
}

TEST_CASE("ik reports unreachable targets")
{
    const KinematicChain c = make_reference_chain();
    const RigidTransform far = RigidTransform::from_translation(1e5, 0, 0);
    const IkResult r = ik(c, far, JointConfig{});
    CHECK_FALSE(r.ok());
    CHECK(r.position_error > 1000.0);
}

TEST_CASE("chain validation and limits")
{
    KinematicChain c = make_reference_chain();
    CHECK_NOTHROW(c.validate());
    c.joints[2].lower = c.joints[2].upper;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);

    const KinematicChain r = make_reference_chain();
    JointConfig q;
    q[1] = r.joints[1].upper + 1.0;
    CHECK_FALSE(r.within_limits(q));
    CHECK(r.clamp(q)[1] == r.joints[1].upper);

    IkParams p;
    p.damping = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
}
