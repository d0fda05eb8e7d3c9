#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "weldplan/common.hpp"

namespace weldplan {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;

bool is_finite(const Vec3& v);

// SE(3) pose stored as unit quaternion + translation (mm). Applying the
// transform rotates first, then translates.
class RigidTransform {
public:
    RigidTransform() : rotation_(Quat::Identity()), translation_(Vec3::Zero()) {}
    RigidTransform(const Quat& rotation, const Vec3& translation);

    static RigidTransform identity() { return {}; }
    static RigidTransform from_translation(double x, double y, double z);
    static RigidTransform from_translation(const Vec3& t);
    static RigidTransform from_axis_angle(const Vec3& axis, double angle);
    static RigidTransform rot_x(double angle) { return from_axis_angle(Vec3::UnitX(), angle); }
    static RigidTransform rot_y(double angle) { return from_axis_angle(Vec3::UnitY(), angle); }
    static RigidTransform rot_z(double angle) { return from_axis_angle(Vec3::UnitZ(), angle); }
    // Rotation part is re-orthonormalised through the quaternion constructor.
    static RigidTransform from_matrix(const Mat4& m);

    const Quat& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }
    Mat3 rotation_matrix() const { return rotation_.toRotationMatrix(); }
    Mat4 matrix() const;

    Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
    Vec3 apply_direction(const Vec3& d) const { return rotation_ * d; }

    RigidTransform inverse() const;

    // (a * b).apply(p) == a.apply(b.apply(p))
    RigidTransform operator*(const RigidTransform& other) const;

private:
    Quat rotation_;
    Vec3 translation_;
};

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

// Rotation angle (rad) of a.inverse() * b, in [0, pi].
double rotation_distance(const Quat& a, const Quat& b);

struct EulerZyx {
    double yaw = 0.0;   // about z, applied first in intrinsic order
    double pitch = 0.0; // about the new y
    double roll = 0.0;  // about the new x
    bool gimbal_lock = false;

    Vec3 as_vec() const { return {yaw, pitch, roll}; }
};

// Intrinsic Z-Y-X (yaw, pitch, roll): R = Rz(yaw) * Ry(pitch) * Rx(roll).
EulerZyx euler_from_quaternion(const Quat& q);
Quat quaternion_from_euler(double yaw, double pitch, double roll);
inline Quat quaternion_from_euler(const EulerZyx& e) { return quaternion_from_euler(e.yaw, e.pitch, e.roll); }

struct Aabb {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    bool valid() const { return (min.array() <= max.array()).all(); }
    // Closed interval on every axis.
    bool contains(const Vec3& p) const { return (p.array() >= min.array()).all() && (p.array() <= max.array()).all(); }
};

struct PointCloud {
    std::vector<Vec3> points;
    // Either empty or the same length as points.
    std::vector<Vec3> normals;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty(); }

    // Throws InvalidArgument when a non-finite point or a malformed normal is present.
    void validate() const;
};

PointCloud apply(const RigidTransform& t, const PointCloud& cloud);
Vec3 centroid(const PointCloud& cloud);
Aabb bounds(const std::vector<Vec3>& points);

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;

    // Index range and non-degenerate area (> 1e-9 mm^2).
    void validate() const;

    void append(const TriangleMesh& other);
    double bounding_radius(const Vec3& center = Vec3::Zero()) const;
};

TriangleMesh apply(const RigidTransform& t, const TriangleMesh& mesh);

struct RayHit {
    Vec3 point;
    double distance = 0.0;
    std::size_t triangle = 0;
};

// Moller-Trumbore test against one triangle. Edges and vertices count as inside.
std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& direction, const Vec3& v0, const Vec3& v1,
                                         const Vec3& v2);

// Brute-force nearest hit over all triangles; ties go to the lowest triangle index.
std::optional<RayHit> ray_cast(const TriangleMesh& mesh, const Vec3& origin, const Vec3& direction);

// Bounding-volume hierarchy over a mesh. Returns exactly what ray_cast() returns,
// including the lowest-index tie-break.
class MeshRayCaster {
public:
    explicit MeshRayCaster(TriangleMesh mesh);

    std::optional<RayHit> cast(const Vec3& origin, const Vec3& direction) const;
    const TriangleMesh& mesh() const { return mesh_; }

private:
    struct Node {
        Aabb box;
        std::uint32_t first = 0; // into order_ for leaves, child index for inner nodes
        std::uint32_t count = 0; // 0 for inner nodes
    };

    std::uint32_t build(std::uint32_t begin, std::uint32_t end);

    TriangleMesh mesh_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::vector<Vec3> tri_centers_;
};

// Closest point on a triangle (used for surface-membership checks).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Mesh builders used for CAD stand-ins and tests.
TriangleMesh make_box_mesh(const Vec3& half_extents);
// Capped cylinder along local z, centred at origin.
TriangleMesh make_cylinder_mesh(double radius, double half_length, int segments);
TriangleMesh make_uv_sphere_mesh(double radius, int stacks, int slices);

} // namespace weldplan
