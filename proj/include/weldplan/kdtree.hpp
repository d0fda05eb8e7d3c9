#pragma once

#include <cstdint>
#include <vector>

#include "weldplan/geometry.hpp"

namespace weldplan {

struct NearestResult {
    std::size_t index = 0;
    double distance = 0.0;
};

// Balanced 3-d tree over a fixed point set. Queries are exact; equidistant
// candidates resolve to the lowest point index.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::vector<Vec3> points);

    bool empty() const { return points_.empty(); }
    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    // Precondition: !empty().
    NearestResult nearest(const Vec3& query) const;

    // Indices of all points with |p - query| <= radius, ascending.
    std::vector<std::size_t> radius_search(const Vec3& query, double radius) const;
    void radius_search(const Vec3& query, double radius, std::vector<std::size_t>& out) const;

private:
    struct Node {
        std::uint32_t begin = 0, end = 0; // range in index_
        std::uint32_t left = 0, right = 0; // 0 means leaf
        int axis = -1;
        double split = 0.0;
        Vec3 lo, hi; // bounding box of the node's points
    };

    std::uint32_t build(std::uint32_t begin, std::uint32_t end);
    void nearest_rec(std::uint32_t node, const Vec3& q, double& best_d2, std::size_t& best_i) const;
    void radius_rec(std::uint32_t node, const Vec3& q, double r2, std::vector<std::size_t>& out) const;

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> index_;
    std::vector<Node> nodes_;
};

NearestResult nearest(const KdTree& tree, const Vec3& query);

} // namespace weldplan
