#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "weldplan/kinematics.hpp"
#include "weldplan/planners.hpp"
#include "weldplan/scene.hpp"

namespace weldplan::testing {

// Forward kinematics written out with plain 4x4 matrices, independent of the
// library's quaternion transforms.
inline Eigen::Matrix4d dh_product(const KinematicChain& chain, const JointConfig& q)
{
    Eigen::Matrix4d t = chain.base.matrix();
    for (std::size_t i = 0; i < kDof; ++i) {
        const auto& j = chain.joints[i];
        const double th = q[i] + j.theta_offset;
        const double ct = std::cos(th), st = std::sin(th);
        const double ca = std::cos(j.alpha), sa = std::sin(j.alpha);
        Eigen::Matrix4d a;
        a << ct, -st * ca, st * sa, j.a * ct,
             st, ct * ca, -ct * sa, j.a * st,
             0, sa, ca, j.d,
             0, 0, 0, 1;
        t = t * a;
    }
    return t * chain.tool.matrix();
}

// Planar two-link arm in the base xy plane; joints 3 to 6 are zero-length and
// meant to be locked.
constexpr double kLink1 = 400.0;
constexpr double kLink2 = 300.0;
constexpr double kLinkRadius = 20.0;

inline KinematicChain planar_arm()
{
    KinematicChain c;
    c.name = "planar";
    for (auto& j : c.joints) {
        j = DhJoint{};
        j.lower = -kPi;
        j.upper = kPi;
    }
    c.joints[0].a = kLink1;
    c.joints[1].a = kLink2;
    return c;
}

inline Scene planar_scene(const std::vector<Sphere>& obstacles, double margin)
{
    Scene s;
    s.set_safety_margin(margin);
    s.add_link_proxy("link1", 1, Capsule{Vec3(-kLink1, 0, 0), Vec3::Zero(), kLinkRadius});
    s.add_link_proxy("link2", 2, Capsule{Vec3(-kLink2, 0, 0), Vec3::Zero(), kLinkRadius});
    for (std::size_t i = 0; i < obstacles.size(); ++i)
        s.add_obstacle("obstacle" + std::to_string(i), obstacles[i]);
    return s;
}

inline JointConfig planar_config(double q1, double q2)
{
    JointConfig q;
    q[0] = q1;
    q[1] = q2;
    return q;
}

inline PlannerSettings planar_settings()
{
    PlannerSettings s;
    s.locked = {false, false, true, true, true, true};
    return s;
}

// Exhaustive feasibility: 4-connected breadth-first search over a cells x cells
// grid spanning [-pi, pi]^2 in (q1, q2). Start and goal snap to their nearest
// grid nodes.
inline bool grid_feasible(const Scene& scene, const KinematicChain& chain, const JointConfig& start,
                          const JointConfig& goal, int cells)
{
    const double step = 2.0 * kPi / (cells - 1);
    auto index = [&](double v) {
        const long i = std::lround((v + kPi) / step);
        return static_cast<int>(std::clamp<long>(i, 0, cells - 1));
    };
    std::vector<signed char> state(static_cast<std::size_t>(cells) * cells, -1); // -1 unknown, 0 blocked, 1 free
    auto free = [&](int i, int j) {
        auto& s = state[static_cast<std::size_t>(i) * cells + j];
        if (s < 0)
            s = scene.in_collision(chain, planar_config(-kPi + i * step, -kPi + j * step)) ? 0 : 1;
        return s == 1;
    };
    const int si = index(start[0]), sj = index(start[1]);
    const int gi = index(goal[0]), gj = index(goal[1]);
    if (!free(si, sj) || !free(gi, gj))
        return false;
    std::vector<bool> seen(state.size(), false);
    std::deque<std::pair<int, int>> open{{si, sj}};
    seen[static_cast<std::size_t>(si) * cells + sj] = true;
    const int di[] = {1, -1, 0, 0};
    const int dj[] = {0, 0, 1, -1};
    while (!open.empty()) {
        const auto [i, j] = open.front();
        open.pop_front();
        if (i == gi && j == gj)
            return true;
        for (int k = 0; k < 4; ++k) {
            const int ni = i + di[k], nj = j + dj[k];
            if (ni < 0 || nj < 0 || ni >= cells || nj >= cells)
                continue;
            const auto id = static_cast<std::size_t>(ni) * cells + nj;
            if (!seen[id] && free(ni, nj)) {
                seen[id] = true;
                open.emplace_back(ni, nj);
            }
        }
    }
    return false;
}

// One obstacle, a start and a goal for the planar arm.
struct PlanarInstance {
    Sphere obstacle;
    JointConfig start;
    JointConfig goal;
    bool feasible = false;
};

// Draws instances until one has the wanted verdict and that verdict survives
// growing and shrinking the clearance by `slack` mm, so the grid resolution
// cannot decide it. `margin` is the clearance the planners actually use.
inline PlanarInstance make_planar_instance(Rng& rng, bool want_feasible, double margin, double slack = 10.0,
                                           int cells = 181)
{
    const KinematicChain chain = planar_arm();
    for (;;) {
        PlanarInstance inst;
        const bool wall = rng.uniform() < 0.5 || !want_feasible;
        const double rho = wall ? rng.uniform(150.0, 300.0) : rng.uniform(480.0, 620.0);
        const double theta = rng.uniform(-2.0, 2.0);
        inst.obstacle = Sphere{Vec3(rho * std::cos(theta), rho * std::sin(theta), 0.0), rng.uniform(40.0, 90.0)};
        const Scene tight = planar_scene({inst.obstacle}, margin + slack);
        const Scene loose = planar_scene({inst.obstacle}, margin - slack);
        auto draw = [&]() -> std::optional<JointConfig> {
            for (int k = 0; k < 100; ++k) {
                const JointConfig q = planar_config(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
                if (!tight.in_collision(chain, q))
                    return q;
            }
            return std::nullopt;
        };
        const auto s = draw();
        const auto g = draw();
        if (!s || !g)
            continue;
        inst.start = *s;
        inst.goal = *g;
        const bool a = grid_feasible(tight, chain, inst.start, inst.goal, cells);
        const bool b = grid_feasible(loose, chain, inst.start, inst.goal, cells);
        if (a != b || a != want_feasible)
            continue;
        inst.feasible = a;
        return inst;
    }
}

} // namespace weldplan::testing
