#include "weldplan/scene.hpp"

#include <algorithm>
#include <limits>

namespace weldplan {

namespace {

Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b)
{
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0)
        return a;
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return a + t * ab;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Minimum over t in [0, 1] of a convex function, by golden-section search.
template <typename F>
double minimize_convex_1d(F&& f)
{
    constexpr double inv_phi = 0.6180339887498949;
    double lo = 0.0, hi = 1.0;
    double c = hi - inv_phi * (hi - lo), d = lo + inv_phi * (hi - lo);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < 48; ++i) {
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    return std::min({fc, fd, f(0.0), f(1.0)});
}

double box_local_distance(const Vec3& q, const Vec3& half)
{
    return (q.cwiseAbs() - half).cwiseMax(0.0).norm();
}

double cylinder_local_distance(const Vec3& q, double radius, double half_length)
{
    const double dr = std::max(0.0, std::hypot(q.x(), q.y()) - radius);
    const double dz = std::max(0.0, std::abs(q.z()) - half_length);
    return std::hypot(dr, dz);
}

// Distance between the box of a local-frame segment and the box [-half, half];
// never more than the true segment distance.
double segment_box_lower_bound(const Vec3& a, const Vec3& b, const Vec3& half)
{
    const Vec3 lo = a.cwiseMin(b), hi = a.cwiseMax(b);
    return (lo - half).cwiseMax(-half - hi).cwiseMax(0.0).norm();
}

// Exact distance from a segment to a box or cylinder when it is below `cutoff`;
// otherwise some value >= cutoff.
double segment_to_solid(const Vec3& a, const Vec3& b, const Primitive& solid, double cutoff)
{
    if (const auto* box = std::get_if<Box>(&solid)) {
        const RigidTransform inv = box->pose.inverse();
        const Vec3 la = inv.apply(a), lb = inv.apply(b);
        const double bound = segment_box_lower_bound(la, lb, box->half_extents);
        if (bound >= cutoff)
            return bound;
        return minimize_convex_1d([&](double t) { return box_local_distance(la + t * (lb - la), box->half_extents); });
    }
    if (const auto* cyl = std::get_if<Cylinder>(&solid)) {
        const RigidTransform inv = cyl->pose.inverse();
        const Vec3 la = inv.apply(a), lb = inv.apply(b);
        const double bound =
            segment_box_lower_bound(la, lb, Vec3(cyl->radius, cyl->radius, cyl->half_length));
        if (bound >= cutoff)
            return bound;
        return minimize_convex_1d(
            [&](double t) { return cylinder_local_distance(la + t * (lb - la), cyl->radius, cyl->half_length); });
    }
    return minimize_convex_1d([&](double t) { return point_distance(a + t * (b - a), solid); });
}

double distance_bounded(const Primitive& a, const Primitive& b, double cutoff);

} // namespace

void validate(const Primitive& p)
{
    std::visit(overloaded{
                   [](const Sphere& s) {
                       if (!(s.radius > 0.0))
                           throw InvalidArgument("sphere radius must be positive");
                   },
                   [](const Capsule& c) {
                       if (!(c.radius > 0.0))
                           throw InvalidArgument("capsule radius must be positive");
                   },
                   [](const Box& b) {
                       if (!(b.half_extents.array() > 0.0).all())
                           throw InvalidArgument("box half-extents must be positive");
                   },
                   [](const Cylinder& c) {
                       if (!(c.radius > 0.0) || !(c.half_length > 0.0))
                           throw InvalidArgument("cylinder radius and half-length must be positive");
                   },
               },
               p);
}

Primitive transformed(const Primitive& p, const RigidTransform& t)
{
    return std::visit(overloaded{
                          [&](const Sphere& s) -> Primitive { return Sphere{t.apply(s.center), s.radius}; },
                          [&](const Capsule& c) -> Primitive { return Capsule{t.apply(c.a), t.apply(c.b), c.radius}; },
                          [&](const Box& b) -> Primitive { return Box{t * b.pose, b.half_extents}; },
                          [&](const Cylinder& c) -> Primitive { return Cylinder{t * c.pose, c.radius, c.half_length}; },
                      },
                      p);
}

std::pair<Vec3, double> bounding_sphere(const Primitive& p)
{
    return std::visit(overloaded{
                          [](const Sphere& s) { return std::pair{s.center, s.radius}; },
                          [](const Capsule& c) {
                              return std::pair<Vec3, double>{0.5 * (c.a + c.b), 0.5 * (c.b - c.a).norm() + c.radius};
                          },
                          [](const Box& b) { return std::pair{b.pose.translation(), b.half_extents.norm()}; },
                          [](const Cylinder& c) {
                              return std::pair{c.pose.translation(), std::hypot(c.radius, c.half_length)};
                          },
                      },
                      p);
}

double point_distance(const Vec3& p, const Primitive& prim)
{
    return std::visit(overloaded{
                          [&](const Sphere& s) { return std::max(0.0, (p - s.center).norm() - s.radius); },
                          [&](const Capsule& c) {
                              return std::max(0.0, (p - closest_on_segment(p, c.a, c.b)).norm() - c.radius);
                          },
                          [&](const Box& b) {
                              return box_local_distance(b.pose.inverse().apply(p), b.half_extents);
                          },
                          [&](const Cylinder& c) {
                              return cylinder_local_distance(c.pose.inverse().apply(p), c.radius, c.half_length);
                          },
                      },
                      prim);
}

double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2)
{
    // Ericson, Real-Time Collision Detection, 5.1.9
    const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
    const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
    constexpr double eps = 1e-18;
    double s = 0.0, t = 0.0;
    if (a <= eps && e <= eps)
        return (p1 - p2).norm();
    if (a <= eps) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= eps) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            s = denom > eps * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    return ((p1 + s * d1) - (p2 + t * d2)).norm();
}

namespace {

double distance_bounded(const Primitive& a, const Primitive& b, double cutoff)
{
    if (const auto* s = std::get_if<Sphere>(&a))
        return std::max(0.0, point_distance(s->center, b) - s->radius);
    if (const auto* s = std::get_if<Sphere>(&b))
        return std::max(0.0, point_distance(s->center, a) - s->radius);
    const auto* ca = std::get_if<Capsule>(&a);
    const auto* cb = std::get_if<Capsule>(&b);
    if (ca && cb)
        return std::max(0.0, segment_segment_distance(ca->a, ca->b, cb->a, cb->b) - ca->radius - cb->radius);
    if (ca)
        return std::max(0.0, segment_to_solid(ca->a, ca->b, b, cutoff + ca->radius) - ca->radius);
    if (cb)
        return std::max(0.0, segment_to_solid(cb->a, cb->b, a, cutoff + cb->radius) - cb->radius);
    throw InvalidArgument("distance() needs a sphere or capsule on at least one side");
}

} // namespace

double distance(const Primitive& a, const Primitive& b)
{
    return distance_bounded(a, b, std::numeric_limits<double>::infinity());
}

void MotionCheckParams::validate() const
{
    if (!(resolution > 0.0))
        throw InvalidArgument("motion check resolution must be positive");
}

void Scene::add_obstacle(std::string name, Primitive shape, bool attached_to_workpiece)
{
    validate(shape);
    for (const auto& o : obstacles_) {
        if (o.name == name)
            throw InvalidArgument("duplicate obstacle name '" + name + "'");
    }
    Obstacle o{std::move(name), shape, shape, attached_to_workpiece};
    if (attached_to_workpiece)
        o.shape = transformed(o.nominal, workpiece_pose_);
    obstacles_.push_back(std::move(o));
}

void Scene::add_link_proxy(std::string name, std::size_t frame, Primitive shape)
{
    validate(shape);
    if (!std::holds_alternative<Sphere>(shape) && !std::holds_alternative<Capsule>(shape))
        throw InvalidArgument("link proxies must be spheres or capsules");
    if (frame > kDof + 1)
        throw InvalidArgument("link proxy frame index out of range");
    proxies_.push_back({std::move(name), frame, shape});
}

void Scene::exempt_frames(std::size_t a, std::size_t b)
{
    exempt_.emplace_back(std::min(a, b), std::max(a, b));
}

void Scene::set_safety_margin(double mm)
{
    if (!(mm >= 0.0))
        throw InvalidArgument("safety margin must be non-negative");
    margin_ = mm;
}

Scene Scene::update_workpiece(const RigidTransform& t) const
{
    Scene out = *this;
    out.workpiece_pose_ = t;
    for (auto& o : out.obstacles_) {
        if (o.attached_to_workpiece)
            o.shape = transformed(o.nominal, t);
    }
    return out;
}

std::vector<Primitive> Scene::posed_proxies(const KinematicChain& chain, const JointConfig& q) const
{
    const auto frames = link_frames(chain, q);
    std::vector<Primitive> out;
    out.reserve(proxies_.size());
    for (const auto& p : proxies_)
        out.push_back(transformed(p.shape, frames[p.frame]));
    return out;
}

bool Scene::self_pair_checked(std::size_t fa, std::size_t fb) const
{
    const auto lo = std::min(fa, fb), hi = std::max(fa, fb);
    if (hi - lo <= 1)
        return false;
    return std::find(exempt_.begin(), exempt_.end(), std::pair{lo, hi}) == exempt_.end();
}

bool Scene::collide(const KinematicChain& chain, const JointConfig& q, CollisionReport* report) const
{
    const auto posed = posed_proxies(chain, q);
    std::vector<std::pair<Vec3, double>> bs;
    bs.reserve(posed.size());
    for (const auto& p : posed)
        bs.push_back(bounding_sphere(p));

    bool hit = false;
    auto record = [&](const std::string& x, const std::string& y) {
        hit = true;
        if (report)
            report->pairs.push_back(x < y ? CollisionPair{x, y} : CollisionPair{y, x});
    };
    auto close = [&](const std::pair<Vec3, double>& s1, const std::pair<Vec3, double>& s2) {
        return (s1.first - s2.first).norm() - s1.second - s2.second < margin_;
    };

    for (std::size_t i = 0; i < posed.size(); ++i) {
        for (const auto& o : obstacles_) {
            if (!close(bs[i], bounding_sphere(o.shape)))
                continue;
            if (distance_bounded(posed[i], o.shape, margin_) < margin_) {
                record(proxies_[i].name, o.name);
                if (!report)
                    return true;
            }
        }
    }
    for (std::size_t i = 0; i < posed.size(); ++i) {
        for (std::size_t j = i + 1; j < posed.size(); ++j) {
            if (!self_pair_checked(proxies_[i].frame, proxies_[j].frame) || !close(bs[i], bs[j]))
                continue;
            if (distance(posed[i], posed[j]) < margin_) {
                record(proxies_[i].name, proxies_[j].name);
                if (!report)
                    return true;
            }
        }
    }
    if (report) {
        std::sort(report->pairs.begin(), report->pairs.end(), [](const CollisionPair& a, const CollisionPair& b) {
            return std::tie(a.first, a.second) < std::tie(b.first, b.second);
        });
        report->colliding = hit;
    }
    return hit;
}

CollisionReport Scene::collisions(const KinematicChain& chain, const JointConfig& q) const
{
    CollisionReport report;
    collide(chain, q, &report);
    return report;
}

bool Scene::in_collision(const KinematicChain& chain, const JointConfig& q) const
{
    return collide(chain, q, nullptr);
}

bool Scene::motion_valid(const KinematicChain& chain, const JointConfig& a, const JointConfig& b,
                         const MotionCheckParams& params) const
{
    params.validate();
    // Interpolate from the lexicographically smaller end so (a, b) and (b, a)
    // check bit-identical samples.
    const bool swap = std::lexicographical_compare(b.q.data(), b.q.data() + kDof, a.q.data(), a.q.data() + kDof);
    const JointConfig& from = swap ? b : a;
    const JointConfig& to = swap ? a : b;
    const JointVector delta = to.q - from.q;
    const double max_step = delta.cwiseAbs().maxCoeff();
    const auto n = std::max<long>(1, static_cast<long>(std::ceil(max_step / params.resolution)));
    if (in_collision(chain, from) || in_collision(chain, to))
        return false;
    for (long k = 1; k < n; ++k) {
        const JointConfig q(from.q + (static_cast<double>(k) / static_cast<double>(n)) * delta);
        if (in_collision(chain, q))
            return false;
    }
    return true;
}

Scene update_workpiece(const Scene& scene, const RigidTransform& t) { return scene.update_workpiece(t); }

CollisionReport in_collision(const Scene& scene, const KinematicChain& chain, const JointConfig& q)
{
    return scene.collisions(chain, q);
}

bool motion_valid(const Scene& scene, const KinematicChain& chain, const JointConfig& a, const JointConfig& b,
                  const MotionCheckParams& params)
{
    return scene.motion_valid(chain, a, b, params);
}

void add_default_link_proxies(Scene& scene, const KinematicChain& chain, const std::array<double, 8>& radii)
{
    if (radii[0] > 0.0)
        scene.add_link_proxy("pedestal", 0, Capsule{Vec3::Zero(), Vec3(0, 0, 0.5 * chain.joints[0].d), radii[0]});
    for (std::size_t i = 1; i <= kDof; ++i) {
        if (!(radii[i] > 0.0))
            continue;
        const DhJoint& j = chain.joints[i - 1];
        // Previous frame origin and the corner between the d and a offsets,
        // both in frame i (independent of the joint angle).
        const RigidTransform undo_alpha = RigidTransform::rot_x(-j.alpha);
        const Vec3 start = undo_alpha.apply(Vec3(-j.a, 0.0, -j.d));
        const Vec3 corner = undo_alpha.apply(Vec3(-j.a, 0.0, 0.0));
        const std::string base = "link" + std::to_string(i);
        if (std::abs(j.d) > 1e-9)
            scene.add_link_proxy(base + (std::abs(j.a) > 1e-9 ? "_d" : ""), i, Capsule{start, corner, radii[i]});
        if (std::abs(j.a) > 1e-9)
            scene.add_link_proxy(base + (std::abs(j.d) > 1e-9 ? "_a" : ""), i, Capsule{corner, Vec3::Zero(), radii[i]});
    }
    if (radii[kDof + 1] > 0.0) {
        const Vec3 flange = chain.tool.inverse().apply(Vec3::Zero());
        const Vec3 tip_back(0.0, 0.0, -40.0);
        // Start the torch body clear of the flange so it does not graze the wrist.
        const Vec3 start = flange + 0.25 * (tip_back - flange);
        scene.add_link_proxy("torch", kDof + 1, Capsule{start, tip_back, radii[kDof + 1]});
    }
}

} // namespace weldplan
