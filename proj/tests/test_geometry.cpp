#include "doctest.h"

#include <sstream>

#include "weldplan/geometry.hpp"
#include "weldplan/mesh_io.hpp"

using namespace weldplan;

namespace {

Quat random_quat(Rng& rng)
{
    Eigen::Vector4d v(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    v.normalize();
    return Quat(v[0], v[1], v[2], v[3]);
}

RigidTransform random_transform(Rng& rng, double span = 500.0)
{
    return {random_quat(rng), Vec3(rng.uniform(-span, span), rng.uniform(-span, span), rng.uniform(-span, span))};
}

Vec3 random_point(Rng& rng, double span = 500.0)
{
    return {rng.uniform(-span, span), rng.uniform(-span, span), rng.uniform(-span, span)};
}

// Plane intersection and barycentric inside test, written independently of
// the library's Moller-Trumbore routine.
std::optional<double> oracle_hit(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 n = (b - a).cross(c - a);
    const double denom = n.dot(d);
    if (std::abs(denom) < 1e-12)
        return std::nullopt;
    const double t = n.dot(a - o) / denom;
    if (t < 0.0)
        return std::nullopt;
    const Vec3 p = o + t * d;
    const double area = n.squaredNorm();
    const double u = n.dot((c - b).cross(p - b)) / area;
    const double v = n.dot((a - c).cross(p - c)) / area;
    const double w = 1.0 - u - v;
    if (u < -1e-12 || v < -1e-12 || w < -1e-12)
        return std::nullopt;
    return t;
}

} // namespace

TEST_CASE("compose")
{
    Rng rng(1);
    const RigidTransform t = random_transform(rng);
    const Vec3 p = random_point(rng);
    CHECK((compose(RigidTransform::identity(), t).apply(p) - t.apply(p)).norm() < 1e-12);
    CHECK((compose(t, t.inverse()).apply(p) - p).norm() < 1e-9);

    const RigidTransform ab =
        compose(RigidTransform::from_translation(100, 0, 0), RigidTransform::from_translation(0, 50, 0));
    CHECK((ab.translation() - Vec3(100, 50, 0)).norm() < 1e-12);
    CHECK(rotation_distance(ab.rotation(), Quat::Identity()) < 1e-12);

    for (int i = 0; i < 100; ++i) {
        const RigidTransform a = random_transform(rng), b = random_transform(rng), c = random_transform(rng);
        const Vec3 x = random_point(rng);
        CHECK((compose(a, b).apply(x) - a.apply(b.apply(x))).norm() < 1e-9);
        CHECK((compose(a, compose(b, c)).apply(x) - compose(compose(a, b), c).apply(x)).norm() < 1e-9);
    }
}

TEST_CASE("apply to clouds")
{
    PointCloud one;
    one.points = {Vec3::Zero()};
    CHECK((apply(RigidTransform::from_translation(200, 0, 0), one).points[0] - Vec3(200, 0, 0)).norm() < 1e-12);

    PointCloud x;
    x.points = {Vec3::UnitX()};
    x.normals = {Vec3::UnitX()};
    const PointCloud r = apply(RigidTransform::rot_z(kPi / 2), x);
    CHECK((r.points[0] - Vec3::UnitY()).norm() < 1e-9);
    CHECK((r.normals[0] - Vec3::UnitY()).norm() < 1e-9);

    Rng rng(2);
    PointCloud c;
    for (int i = 0; i < 50; ++i) {
        c.points.push_back(random_point(rng));
        c.normals.push_back(random_point(rng).normalized());
    }
    const PointCloud same = apply(RigidTransform::identity(), c);
    CHECK(same.points == c.points);

    // normals are rotated only
    const RigidTransform t = random_transform(rng);
    const PointCloud moved = apply(t, c);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK((moved.normals[i] - t.rotation() * c.normals[i]).norm() < 1e-12);
        CHECK(std::abs(moved.normals[i].norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("rigid motions preserve distances")
{
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const RigidTransform t = random_transform(rng);
        const Vec3 p = random_point(rng), q = random_point(rng);
        CHECK(std::abs((t.apply(p) - t.apply(q)).norm() - (p - q).norm()) < 1e-6);
    }
}

TEST_CASE("quaternion double cover")
{
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        const Quat q = random_quat(rng);
        const Vec3 tr = random_point(rng);
        const Quat neg(-q.w(), -q.x(), -q.y(), -q.z());
        const RigidTransform a(q, tr), b(neg, tr);
        const Vec3 p = random_point(rng);
        CHECK((a.apply(p) - b.apply(p)).norm() < 1e-9);
    }
}

TEST_CASE("inverse")
{
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const RigidTransform t = random_transform(rng);
        const Vec3 p = random_point(rng);
        CHECK(((t * t.inverse()).apply(p) - p).norm() < 1e-9);
        CHECK(((t.inverse() * t).apply(p) - p).norm() < 1e-9);
    }
}

TEST_CASE("euler zyx")
{
    const EulerZyx id = euler_from_quaternion(Quat::Identity());
    CHECK(id.as_vec().norm() < 1e-12);
    CHECK_FALSE(id.gimbal_lock);

    const EulerZyx z = euler_from_quaternion(Quat(Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ())));
    CHECK(z.yaw == doctest::Approx(kPi / 2).epsilon(1e-12));
    CHECK(std::abs(z.pitch) < 1e-12);
    CHECK(std::abs(z.roll) < 1e-12);

    // R = Rz(yaw) Ry(pitch) Rx(roll)
    const Quat q = quaternion_from_euler(0.3, -0.4, 0.5);
    const Mat3 expect = (Eigen::AngleAxisd(0.3, Vec3::UnitZ()) * Eigen::AngleAxisd(-0.4, Vec3::UnitY()) *
                         Eigen::AngleAxisd(0.5, Vec3::UnitX()))
                            .toRotationMatrix();
    CHECK((q.toRotationMatrix() - expect).norm() < 1e-12);

    Rng rng(6);
    const std::array<Vec3, 3> probes{Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0.3, -0.5, 0.8)};
    for (int i = 0; i < 1000; ++i) {
        const Quat a = random_quat(rng);
        const Quat b = quaternion_from_euler(euler_from_quaternion(a));
        for (const auto& v : probes)
            CHECK((a * v - b * v).norm() < 1e-7);
        CHECK(std::abs(a.dot(b)) > 1.0 - 1e-9);
    }
}

TEST_CASE("euler gimbal lock")
{
    for (double sign : {1.0, -1.0}) {
        const Quat q = quaternion_from_euler(0.7, sign * kPi / 2, 0.2);
        const EulerZyx e = euler_from_quaternion(q);
        CHECK(e.gimbal_lock);
        const Quat back = quaternion_from_euler(e);
        CHECK(std::abs(back.norm() - 1.0) < 1e-12);
        CHECK(rotation_distance(q, back) < 1e-6);
    }
}

TEST_CASE("ray cast on a unit cube")
{
    const TriangleMesh cube = make_box_mesh(Vec3(0.5, 0.5, 0.5));
    const auto hit = ray_cast(cube, Vec3(0, 0, -10), Vec3(0, 0, 1));
    REQUIRE(hit);
    CHECK((hit->point - Vec3(0, 0, -0.5)).norm() < 1e-12);
    CHECK(hit->distance == doctest::Approx(9.5).epsilon(1e-12));
    CHECK_FALSE(ray_cast(cube, Vec3(0, 0, -10), Vec3(0, 0, -1)));
}

TEST_CASE("ray on a shared edge hits the lower triangle index")
{
    TriangleMesh quad;
    quad.vertices = {Vec3(-1, -1, 0), Vec3(1, -1, 0), Vec3(1, 1, 0), Vec3(-1, 1, 0)};
    quad.triangles = {{0, 1, 2}, {0, 2, 3}};
    const Vec3 o(0.25, 0.25, -1), d(0, 0, 1);
    // both triangles contain the point on their common diagonal
    for (const auto& t : quad.triangles)
        CHECK(intersect_triangle(o, d, quad.vertices[t[0]], quad.vertices[t[1]], quad.vertices[t[2]]));
    auto hit = ray_cast(quad, o, d);
    REQUIRE(hit);
    CHECK(hit->triangle == 0);
    CHECK(std::abs(hit->point.z()) < 1e-12);

    std::swap(quad.triangles[0], quad.triangles[1]);
    hit = ray_cast(quad, o, d);
    REQUIRE(hit);
    CHECK(hit->triangle == 0);
    CHECK(MeshRayCaster(quad).cast(o, d)->triangle == 0);
}

TEST_CASE("ray cast returns the nearest hit")
{
    Rng rng(7);
    const TriangleMesh sphere = make_uv_sphere_mesh(50.0, 6, 8);
    REQUIRE(sphere.triangles.size() <= 100);
    TriangleMesh two = sphere;
    two.append(apply(RigidTransform::from_translation(30, 10, 0), make_box_mesh(Vec3(20, 30, 10))));
    const MeshRayCaster bvh(two);
    int hits = 0;
    for (int i = 0; i < 500; ++i) {
        const Vec3 o = random_point(rng, 200.0);
        const Vec3 d = (random_point(rng, 40.0) - o).normalized();
        std::optional<double> best;
        for (const auto& t : sphere.triangles) {
            const auto h = oracle_hit(o, d, sphere.vertices[t[0]], sphere.vertices[t[1]], sphere.vertices[t[2]]);
            if (h && (!best || *h < *best))
                best = h;
        }
        const auto got = ray_cast(sphere, o, d);
        REQUIRE(got.has_value() == best.has_value());
        if (got) {
            ++hits;
            CHECK(got->distance == doctest::Approx(*best).epsilon(1e-9));
            const auto& t = sphere.triangles[got->triangle];
            const Vec3 n = (sphere.vertices[t[1]] - sphere.vertices[t[0]])
                               .cross(sphere.vertices[t[2]] - sphere.vertices[t[0]])
                               .normalized();
            CHECK(std::abs(n.dot(got->point - sphere.vertices[t[0]])) < 1e-6);
        }
        const auto a = ray_cast(two, o, d);
        const auto b = bvh.cast(o, d);
        REQUIRE(a.has_value() == b.has_value());
        if (a) {
            CHECK(a->triangle == b->triangle);
            CHECK(a->distance == b->distance);
        }
    }
    CHECK(hits > 100);
}

TEST_CASE("mesh validation")
{
    TriangleMesh m;
    m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    m.triangles = {{0, 1, 2}};
    CHECK_NOTHROW(m.validate());
    m.triangles = {{0, 1, 3}};
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    m.vertices[2] = Vec3(2, 0, 0);
    m.triangles = {{0, 1, 2}};
    CHECK_THROWS_AS(m.validate(), InvalidArgument);

    PointCloud c;
    c.points = {Vec3(0, 0, 0)};
    c.normals = {Vec3(0, 0, 2)};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("ply cloud round trip")
{
    Rng rng(8);
    PointCloud c;
    for (int i = 0; i < 20; ++i) {
        c.points.push_back(random_point(rng));
        c.normals.push_back(random_point(rng).normalized());
    }
    std::stringstream s;
    write_ply_cloud(s, c);
    const PointCloud back = read_ply_cloud(s);
    CHECK(back.points == c.points);
    REQUIRE(back.normals.size() == c.normals.size());
    // normals are renormalised on read
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK((back.normals[i] - c.normals[i]).norm() < 1e-15);
}

TEST_CASE("ply mesh round trip and fan triangulation")
{
    const TriangleMesh box = make_box_mesh(Vec3(1, 2, 3));
    std::stringstream s;
    write_ply_mesh(s, box);
    const TriangleMesh back = read_ply_mesh(s);
    CHECK(back.vertices == box.vertices);
    CHECK(back.triangles == box.triangles);

    std::istringstream quad("ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\n"
                            "property float z\nproperty uchar red\nelement face 1\n"
                            "property list uchar int vertex_indices\nend_header\n"
                            "0 0 0 255\n1 0 0 255\n1 1 0 255\n0 1 0 255\n4 0 1 2 3\n");
    const TriangleMesh q = read_ply_mesh(quad);
    CHECK(q.triangles.size() == 2);
}

TEST_CASE("malformed ply is a parse error")
{
    std::istringstream bad("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
                           "property float z\nend_header\n0 0 0\n1 oops 0\n");
    CHECK_THROWS_AS(read_ply_cloud(bad), ParseError);
    std::istringstream binary("ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n");
    CHECK_THROWS_AS(read_ply_cloud(binary), ParseError);
    std::istringstream notply("solid x\n");
    CHECK_THROWS_AS(read_ply_cloud(notply), ParseError);
}

TEST_CASE("ascii stl welds shared vertices")
{
    std::istringstream stl("solid t\n"
                           "facet normal 0 0 1\nouter loop\nvertex 0 0 0\nvertex 1 0 0\nvertex 1 1 0\nendloop\nendfacet\n"
                           "facet normal 0 0 1\nouter loop\nvertex 0 0 0\nvertex 1 1 0\nvertex 0 1 0\nendloop\nendfacet\n"
                           "endsolid t\n");
    const TriangleMesh m = read_stl_mesh(stl);
    CHECK(m.vertices.size() == 4);
    CHECK(m.triangles.size() == 2);
}

TEST_CASE("format_double round trips")
{
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
}
