#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "weldplan/geometry.hpp"
#include "weldplan/kinematics.hpp"

namespace weldplan {

struct Sphere {
    Vec3 center = Vec3::Zero();
    double radius = 1.0;
};

struct Capsule {
    Vec3 a = Vec3::Zero();
    Vec3 b = Vec3::Zero();
    double radius = 1.0;
};

struct Box {
    RigidTransform pose;
    Vec3 half_extents = Vec3::Ones();
};

// Solid cylinder along the local z axis of `pose`.
struct Cylinder {
    RigidTransform pose;
    double radius = 1.0;
    double half_length = 1.0;
};

using Primitive = std::variant<Sphere, Capsule, Box, Cylinder>;

void validate(const Primitive& p);
Primitive transformed(const Primitive& p, const RigidTransform& t);
// Centre and radius of a sphere enclosing the primitive.
std::pair<Vec3, double> bounding_sphere(const Primitive& p);

// Distance from a point to the solid primitive (0 inside).
double point_distance(const Vec3& p, const Primitive& prim);
double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);

// Separation distance between two primitives, 0 when they overlap. At least one
// side must be a sphere or a capsule (robot proxies always are).
double distance(const Primitive& a, const Primitive& b);

struct Obstacle {
    std::string name;
    Primitive shape;          // current world pose
    Primitive nominal;        // world pose with the workpiece at its nominal pose
    bool attached_to_workpiece = false;
};

struct LinkProxy {
    std::string name;
    // Index into link_frames(): 0 base, 1..6 links, 7 tool.
    std::size_t frame = 0;
    Primitive shape; // expressed in that frame; sphere or capsule
};

struct CollisionPair {
    std::string first;
    std::string second;
    bool operator==(const CollisionPair& o) const { return first == o.first && second == o.second; }
};

struct CollisionReport {
    bool colliding = false;
    std::vector<CollisionPair> pairs; // sorted, each pair name-ordered
};

struct MotionCheckParams {
    double resolution = 0.01; // rad, max per-joint step between checked samples

    void validate() const;
};

class Scene {
public:
    Scene() = default;

    void add_obstacle(std::string name, Primitive shape, bool attached_to_workpiece = false);
    void add_link_proxy(std::string name, std::size_t frame, Primitive shape);
    // Self-collision is never checked between adjacent frames; extra pairs of
    // frame indices can be exempted here (wrist assemblies, tool vs flange).
    void exempt_frames(std::size_t a, std::size_t b);

    const std::vector<Obstacle>& obstacles() const { return obstacles_; }
    const std::vector<LinkProxy>& link_proxies() const { return proxies_; }
    const RigidTransform& workpiece_pose() const { return workpiece_pose_; }
    double safety_margin() const { return margin_; }
    void set_safety_margin(double mm);

    // Absolute: attached primitives end up at t * nominal regardless of any
    // earlier update.
    Scene update_workpiece(const RigidTransform& t) const;

    CollisionReport collisions(const KinematicChain& chain, const JointConfig& q) const;
    bool in_collision(const KinematicChain& chain, const JointConfig& q) const;

    bool motion_valid(const KinematicChain& chain, const JointConfig& a, const JointConfig& b,
                      const MotionCheckParams& params) const;

    // World-frame proxies for a configuration, in proxy order.
    std::vector<Primitive> posed_proxies(const KinematicChain& chain, const JointConfig& q) const;

private:
    bool self_pair_checked(std::size_t fa, std::size_t fb) const;
    bool collide(const KinematicChain& chain, const JointConfig& q, CollisionReport* report) const;

    std::vector<Obstacle> obstacles_;
    std::vector<LinkProxy> proxies_;
    std::vector<std::pair<std::size_t, std::size_t>> exempt_;
    RigidTransform workpiece_pose_;
    double margin_ = 10.0;
};

Scene update_workpiece(const Scene& scene, const RigidTransform& t);
CollisionReport in_collision(const Scene& scene, const KinematicChain& chain, const JointConfig& q);
bool motion_valid(const Scene& scene, const KinematicChain& chain, const JointConfig& a, const JointConfig& b,
                  const MotionCheckParams& params);

// Capsule proxies along each DH link (previous frame origin to this frame
// origin), a pedestal capsule on the base and a torch capsule on the tool.
// Radii are per frame 0..7.
void add_default_link_proxies(Scene& scene, const KinematicChain& chain, const std::array<double, 8>& radii);

} // namespace weldplan
