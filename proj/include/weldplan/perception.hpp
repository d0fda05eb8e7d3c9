#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "weldplan/geometry.hpp"
#include "weldplan/kdtree.hpp"

namespace weldplan {

// ---------------------------------------------------------------------------
// Synthetic depth sensing

// Camera poses map camera coordinates to world coordinates. Camera frame:
// +z is the optical axis, +x right, +y down.
struct VirtualCameraRig {
    std::vector<RigidTransform> viewpoints;
    int width = 128;
    int height = 128;
    double horizontal_fov = deg2rad(60.0); // rad
    double sphere_radius = 0.0;            // mm

    // At least one viewpoint, positive image size and fov in (0, pi), and every
    // optical axis passing through the origin within 1e-6 rad.
    void validate() const;
};

// The 60 vertices of a truncated icosahedron scaled onto a sphere of the
// given radius, in a fixed order.
std::vector<Vec3> truncated_icosahedron_vertices(double radius);

// Camera at `eye` looking at `target`. The image "up" is chosen so it never
// degenerates when looking straight along +-z.
RigidTransform look_at(const Vec3& eye, const Vec3& target);

VirtualCameraRig make_truncated_icosahedron_rig(double radius, int width = 128, int height = 128,
                                                double horizontal_fov = deg2rad(60.0));

// Union of the per-viewpoint depth images back-projected to 3-D, in viewpoint
// order then row-major pixel order. Throws EmptyCloud when nothing is hit.
PointCloud raytrace_cloud(const TriangleMesh& mesh, const VirtualCameraRig& rig);

// One representative point (the centroid) per occupied voxel, ordered by voxel
// key. Normals are dropped.
PointCloud voxel_downsample(const PointCloud& cloud, double leaf_size);

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, Rng& rng);

// Appends `count` points drawn uniformly from `box`.
PointCloud add_uniform_outliers(const PointCloud& cloud, const Aabb& box, std::size_t count, Rng& rng);

// ---------------------------------------------------------------------------
// Filtering

// Keeps exactly the points inside the closed box, normals carried along.
PointCloud segment_box(const PointCloud& cloud, const Aabb& bounds);

struct NormalEstimate {
    // Unit normals; entries whose `valid` flag is false are zero.
    std::vector<Vec3> normals;
    std::vector<bool> valid;
    std::size_t degenerate_count = 0;
};

// Minimum-eigenvalue eigenvector of the neighbourhood covariance (neighbours
// within `radius`, the point itself included), flipped to face `viewpoint`.
// Fewer than 3 neighbours marks the point invalid.
NormalEstimate estimate_normals(const PointCloud& cloud, const KdTree& tree, double radius, const Vec3& viewpoint);
NormalEstimate estimate_normals(const PointCloud& cloud, double radius, const Vec3& viewpoint);

struct DonParams {
    double small_radius = 5.0;  // mm
    double large_radius = 50.0; // mm
    double threshold = 0.1;     // on |dn|, in [0, 1]

    void validate() const;
};

struct DonResult {
    PointCloud filtered; // kept points with their small-scale normals
    // Per input point; NaN where either scale was degenerate.
    std::vector<double> magnitude;
    std::vector<bool> kept;
    std::size_t degenerate_count = 0;
};

// Difference of normals: dn = (n(p, r_small) - n(p, r_large)) / 2 with the
// large-scale normal flipped to agree with the small-scale one, so |dn| is in
// [0, 1]. Keeps points with |dn| <= threshold.
DonResult don_filter(const PointCloud& cloud, const DonParams& params, const Vec3& viewpoint);

// ---------------------------------------------------------------------------
// Registration

struct IcpParams {
    int max_iterations = 50;
    // Pairs farther apart than this are ignored (mm). Infinity disables the cutoff.
    double correspondence_cutoff = 100.0;
    // Stop once the score improves by less than this (mm^2).
    double epsilon = 1e-6;
    RigidTransform initial_guess = RigidTransform::identity();

    void validate() const;
};

struct IcpResult {
    RigidTransform transform; // maps source onto target
    double convergence_score = 0.0; // mean squared matched distance, mm^2
    int iterations_run = 0;
    bool converged = false;
    std::size_t correspondences = 0;
    // Score after the initial matching and after every accepted iteration.
    std::vector<double> score_history;
};

// Point-to-point ICP: nearest-neighbour matching within the cutoff and a
// closed-form rigid fit (SVD of the cross-covariance with reflection guard).
// Iterations that would raise the score are rejected, which also ends the run.
// Throws NoCorrespondences when a round matches fewer than 3 pairs.
IcpResult icp(const PointCloud& source, const PointCloud& target, const IcpParams& params);
IcpResult icp(const PointCloud& source, const KdTree& target, const IcpParams& params);

// Least-squares rigid transform taking src[i] onto dst[i].
RigidTransform fit_rigid_transform(const std::vector<Vec3>& src, const std::vector<Vec3>& dst);

enum class SweepAxis { x, y, z, yaw };

SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);

// Rigid offset for one sweep entry: translation (mm) along x/y/z, or rotation
// (rad) about the world z axis.
RigidTransform sweep_offset(SweepAxis axis, double offset);

struct SweepEntry {
    double offset = 0.0; // mm, or rad for yaw
    double score = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int iterations = 0;
    bool failed = false;
    std::string error;
    RigidTransform transform;
};

// One ICP run per offset, each starting from identity on the offset source.
// Entries come back in input order regardless of scheduling.
std::vector<SweepEntry> robustness_sweep(const PointCloud& source, const PointCloud& target, SweepAxis axis,
                                         const std::vector<double>& offsets, const IcpParams& params,
                                         unsigned workers = 1);

} // namespace weldplan
