#include "weldplan/perception.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <map>

#include "weldplan/parallel.hpp"

namespace weldplan {

void VirtualCameraRig::validate() const
{
    if (viewpoints.empty())
        throw InvalidArgument("camera rig has no viewpoints");
    if (width <= 0 || height <= 0)
        throw InvalidArgument("camera image size must be positive");
    if (!(horizontal_fov > 0.0 && horizontal_fov < kPi))
        throw InvalidArgument("camera field of view must lie in (0, pi)");
    for (const auto& vp : viewpoints) {
        const Vec3 eye = vp.translation();
        if (eye.norm() == 0.0)
            continue;
        const Vec3 forward = vp.apply_direction(Vec3::UnitZ());
        const double c = std::clamp(forward.dot(-eye.normalized()), -1.0, 1.0);
        if (std::acos(c) > 1e-6)
            throw InvalidArgument("camera viewpoint does not look at the origin");
    }
}

std::vector<Vec3> truncated_icosahedron_vertices(double radius)
{
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const std::array<Vec3, 3> bases = {Vec3(0.0, 1.0, 3.0 * phi), Vec3(1.0, 2.0 + phi, 2.0 * phi),
                                       Vec3(phi, 2.0, 2.0 * phi + 1.0)};
    std::vector<Vec3> out;
    out.reserve(60);
    for (const auto& b : bases) {
        for (int shift = 0; shift < 3; ++shift) {
            for (int signs = 0; signs < 8; ++signs) {
                Vec3 v = b;
                bool duplicate = false;
                for (int a = 0; a < 3; ++a) {
                    if (signs & (1 << a)) {
                        if (v[a] == 0.0)
                            duplicate = true;
                        v[a] = -v[a];
                    }
                }
                if (duplicate)
                    continue;
                // Cyclic (even) permutation of the coordinates.
                const Vec3 p(v[shift % 3], v[(shift + 1) % 3], v[(shift + 2) % 3]);
                out.push_back(p.normalized() * radius);
            }
        }
    }
    return out;
}

RigidTransform look_at(const Vec3& eye, const Vec3& target)
{
    const Vec3 z = (target - eye).normalized();
    Vec3 up = Vec3::UnitZ();
    if (std::abs(z.dot(up)) > 0.99)
        up = Vec3::UnitY();
    const Vec3 x = (-up).cross(z).normalized();
    const Vec3 y = z.cross(x);
    Mat3 r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    return {Quat(r), eye};
}

VirtualCameraRig make_truncated_icosahedron_rig(double radius, int width, int height, double horizontal_fov)
{
    VirtualCameraRig rig;
    rig.width = width;
    rig.height = height;
    rig.horizontal_fov = horizontal_fov;
    rig.sphere_radius = radius;
    for (const auto& v : truncated_icosahedron_vertices(radius))
        rig.viewpoints.push_back(look_at(v, Vec3::Zero()));
    return rig;
}

PointCloud raytrace_cloud(const TriangleMesh& mesh, const VirtualCameraRig& rig)
{
    rig.validate();
    const MeshRayCaster caster(mesh);
    const double focal = 0.5 * rig.width / std::tan(0.5 * rig.horizontal_fov);
    std::vector<std::vector<Vec3>> per_view(rig.viewpoints.size());
    parallel_for(rig.viewpoints.size(), [&](std::size_t v) {
        const auto& pose = rig.viewpoints[v];
        const Vec3 origin = pose.translation();
        auto& pts = per_view[v];
        for (int row = 0; row < rig.height; ++row) {
            for (int col = 0; col < rig.width; ++col) {
                const Vec3 d_cam((col + 0.5 - 0.5 * rig.width) / focal, (row + 0.5 - 0.5 * rig.height) / focal, 1.0);
                const Vec3 dir = pose.apply_direction(d_cam.normalized());
                if (const auto hit = caster.cast(origin, dir))
                    pts.push_back(hit->point);
            }
        }
    });
    PointCloud cloud;
    for (auto& pts : per_view)
        cloud.points.insert(cloud.points.end(), pts.begin(), pts.end());
    if (cloud.empty())
        throw EmptyCloud("no camera ray hit the mesh");
    return cloud;
}

PointCloud voxel_downsample(const PointCloud& cloud, double leaf_size)
{
    if (!(leaf_size > 0.0))
        throw InvalidArgument("voxel leaf size must be positive");
    struct Acc {
        Vec3 sum = Vec3::Zero();
        std::size_t n = 0;
    };
    std::map<std::array<long long, 3>, Acc> voxels;
    for (const auto& p : cloud.points) {
        const std::array<long long, 3> key = {static_cast<long long>(std::floor(p.x() / leaf_size)),
                                              static_cast<long long>(std::floor(p.y() / leaf_size)),
                                              static_cast<long long>(std::floor(p.z() / leaf_size))};
        auto& acc = voxels[key];
        acc.sum += p;
        ++acc.n;
    }
    PointCloud out;
    out.points.reserve(voxels.size());
    for (const auto& [key, acc] : voxels)
        out.points.push_back(acc.sum / static_cast<double>(acc.n));
    return out;
}

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, Rng& rng)
{
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const auto& p : cloud.points)
        out.points.push_back(p + Vec3(rng.normal(0.0, sigma), rng.normal(0.0, sigma), rng.normal(0.0, sigma)));
    return out;
}

PointCloud add_uniform_outliers(const PointCloud& cloud, const Aabb& box, std::size_t count, Rng& rng)
{
    PointCloud out;
    out.points = cloud.points;
    for (std::size_t i = 0; i < count; ++i) {
        const double x = rng.uniform(box.min.x(), box.max.x());
        const double y = rng.uniform(box.min.y(), box.max.y());
        const double z = rng.uniform(box.min.z(), box.max.z());
        out.points.emplace_back(x, y, z);
    }
    return out;
}

PointCloud segment_box(const PointCloud& cloud, const Aabb& bounds)
{
    if (!bounds.valid())
        throw InvalidArgument("segmentation bounds have min > max");
    PointCloud out;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (!bounds.contains(cloud.points[i]))
            continue;
        out.points.push_back(cloud.points[i]);
        if (cloud.has_normals())
            out.normals.push_back(cloud.normals[i]);
    }
    return out;
}

NormalEstimate estimate_normals(const PointCloud& cloud, const KdTree& tree, double radius, const Vec3& viewpoint)
{
    if (!(radius > 0.0))
        throw InvalidArgument("normal estimation radius must be positive");
    NormalEstimate est;
    est.normals.assign(cloud.size(), Vec3::Zero());
    est.valid.assign(cloud.size(), false);
    std::vector<std::size_t> nbrs;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        tree.radius_search(p, radius, nbrs);
        if (nbrs.size() < 3) {
            ++est.degenerate_count;
            continue;
        }
        Vec3 mean = Vec3::Zero();
        for (auto j : nbrs)
            mean += tree.points()[j];
        mean /= static_cast<double>(nbrs.size());
        Mat3 cov = Mat3::Zero();
        for (auto j : nbrs) {
            const Vec3 d = tree.points()[j] - mean;
            cov += d * d.transpose();
        }
        const Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
        // Collinear neighbourhoods leave the normal undefined.
        const auto& ev = solver.eigenvalues();
        if (ev(1) <= 1e-12 * std::max(1.0, ev(2))) {
            ++est.degenerate_count;
            continue;
        }
        Vec3 n = solver.eigenvectors().col(0).normalized();
        if (n.dot(viewpoint - p) < 0.0)
            n = -n;
        est.normals[i] = n;
        est.valid[i] = true;
    }
    return est;
}

NormalEstimate estimate_normals(const PointCloud& cloud, double radius, const Vec3& viewpoint)
{
    const KdTree tree(cloud.points);
    return estimate_normals(cloud, tree, radius, viewpoint);
}

void DonParams::validate() const
{
    if (!(small_radius > 0.0 && small_radius < large_radius))
        throw InvalidArgument("DoN radii must satisfy 0 < small < large");
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw InvalidArgument("DoN threshold must lie in [0, 1]");
}

DonResult don_filter(const PointCloud& cloud, const DonParams& params, const Vec3& viewpoint)
{
    params.validate();
    if (cloud.empty())
        throw EmptyCloud("DoN filter needs a non-empty cloud");
    const KdTree tree(cloud.points);
    const NormalEstimate small = estimate_normals(cloud, tree, params.small_radius, viewpoint);
    const NormalEstimate large = estimate_normals(cloud, tree, params.large_radius, viewpoint);

    DonResult res;
    res.magnitude.assign(cloud.size(), std::numeric_limits<double>::quiet_NaN());
    res.kept.assign(cloud.size(), false);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (!small.valid[i] || !large.valid[i]) {
            ++res.degenerate_count;
            continue;
        }
        const Vec3& n1 = small.normals[i];
        Vec3 n2 = large.normals[i];
        if (n1.dot(n2) < 0.0)
            n2 = -n2;
        const double mag = std::min(1.0, (0.5 * (n1 - n2)).norm());
        res.magnitude[i] = mag;
        if (mag <= params.threshold) {
            res.kept[i] = true;
            res.filtered.points.push_back(cloud.points[i]);
            res.filtered.normals.push_back(n1);
        }
    }
    return res;
}

void IcpParams::validate() const
{
    if (max_iterations < 0)
        throw InvalidArgument("ICP max_iterations must be non-negative");
    if (!(correspondence_cutoff > 0.0))
        throw InvalidArgument("ICP correspondence cutoff must be positive");
    if (!(epsilon >= 0.0))
        throw InvalidArgument("ICP epsilon must be non-negative");
}

RigidTransform fit_rigid_transform(const std::vector<Vec3>& src, const std::vector<Vec3>& dst)
{
    if (src.size() != dst.size() || src.size() < 3)
        throw InvalidArgument("rigid fit needs at least 3 paired points");
    Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        cs += src[i];
        cd += dst[i];
    }
    cs /= static_cast<double>(src.size());
    cd /= static_cast<double>(dst.size());
    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i)
        h += (src[i] - cs) * (dst[i] - cd).transpose();
    const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    if ((v * u.transpose()).determinant() < 0.0)
        d(2, 2) = -1.0;
    const Mat3 r = v * d * u.transpose();
    return {Quat(r), cd - r * cs};
}

namespace {

struct Matching {
    std::vector<Vec3> src;
    std::vector<Vec3> dst;
    double score = 0.0;
};

Matching match(const PointCloud& source, const KdTree& target, const RigidTransform& t, double cutoff)
{
    Matching m;
    m.src.reserve(source.size());
    m.dst.reserve(source.size());
    double sum = 0.0;
    for (const auto& p : source.points) {
        const Vec3 q = t.apply(p);
        const auto nn = target.nearest(q);
        if (nn.distance > cutoff)
            continue;
        m.src.push_back(p);
        m.dst.push_back(target.points()[nn.index]);
        sum += nn.distance * nn.distance;
    }
    if (m.src.size() < 3)
        throw NoCorrespondences("ICP matched " + std::to_string(m.src.size()) + " pairs (need 3)");
    m.score = sum / static_cast<double>(m.src.size());
    return m;
}

} // namespace

IcpResult icp(const PointCloud& source, const KdTree& target, const IcpParams& params)
{
    params.validate();
    if (source.size() < 3 || target.size() < 3)
        throw InvalidArgument("ICP needs at least 3 points in both clouds");

    IcpResult res;
    res.transform = params.initial_guess;
    Matching current = match(source, target, res.transform, params.correspondence_cutoff);
    res.score_history.push_back(current.score);
    for (int it = 1; it <= params.max_iterations; ++it) {
        // current.src are untransformed source points, so the fit yields the
        // full source->target transform directly.
        const RigidTransform candidate = fit_rigid_transform(current.src, current.dst);
        Matching next = match(source, target, candidate, params.correspondence_cutoff);
        if (next.score > current.score) {
            res.converged = true;
            break;
        }
        const double improvement = current.score - next.score;
        res.transform = candidate;
        current = std::move(next);
        res.iterations_run = it;
        res.score_history.push_back(current.score);
        if (improvement < params.epsilon) {
            res.converged = true;
            break;
        }
    }
    res.convergence_score = current.score;
    res.correspondences = current.src.size();
    return res;
}

IcpResult icp(const PointCloud& source, const PointCloud& target, const IcpParams& params)
{
    const KdTree tree(target.points);
    return icp(source, tree, params);
}

SweepAxis parse_sweep_axis(const std::string& name)
{
    if (name == "x")
        return SweepAxis::x;
    if (name == "y")
        return SweepAxis::y;
    if (name == "z")
        return SweepAxis::z;
    if (name == "yaw")
        return SweepAxis::yaw;
    throw InvalidArgument("unknown sweep axis '" + name + "' (expected x, y, z or yaw)");
}

std::string to_string(SweepAxis axis)
{
    switch (axis) {
    case SweepAxis::x:
        return "x";
    case SweepAxis::y:
        return "y";
    case SweepAxis::z:
        return "z";
    case SweepAxis::yaw:
        return "yaw";
    }
    return "?";
}

RigidTransform sweep_offset(SweepAxis axis, double offset)
{
    switch (axis) {
    case SweepAxis::x:
        return RigidTransform::from_translation(offset, 0, 0);
    case SweepAxis::y:
        return RigidTransform::from_translation(0, offset, 0);
    case SweepAxis::z:
        return RigidTransform::from_translation(0, 0, offset);
    case SweepAxis::yaw:
        return RigidTransform::rot_z(offset);
    }
    return {};
}

std::vector<SweepEntry> robustness_sweep(const PointCloud& source, const PointCloud& target, SweepAxis axis,
                                         const std::vector<double>& offsets, const IcpParams& params,
                                         unsigned workers)
{
    if (!std::is_sorted(offsets.begin(), offsets.end()))
        throw InvalidArgument("sweep offsets must be sorted ascending");
    const KdTree tree(target.points);
    std::vector<SweepEntry> entries(offsets.size());
    parallel_for(
        offsets.size(),
        [&](std::size_t i) {
            SweepEntry& e = entries[i];
            e.offset = offsets[i];
            const PointCloud moved = apply(sweep_offset(axis, offsets[i]), source);
            try {
                const IcpResult r = icp(moved, tree, params);
                e.score = r.convergence_score;
                e.converged = r.converged;
                e.iterations = r.iterations_run;
                e.transform = r.transform;
            } catch (const Error& err) {
                e.failed = true;
                e.error = err.what();
            }
        },
        workers);
    return entries;
}

} // namespace weldplan
