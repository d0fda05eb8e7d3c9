#include "weldplan/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace weldplan {

namespace {

constexpr std::uint32_t kLeafSize = 8;

double box_distance2(const Vec3& q, const Vec3& lo, const Vec3& hi)
{
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double d = q[a] < lo[a] ? lo[a] - q[a] : (q[a] > hi[a] ? q[a] - hi[a] : 0.0);
        d2 += d * d;
    }
    return d2;
}

} // namespace

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points))
{
    index_.resize(points_.size());
    std::iota(index_.begin(), index_.end(), 0U);
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / kLeafSize + 2);
        build(0, static_cast<std::uint32_t>(points_.size()));
    }
}

std::uint32_t KdTree::build(std::uint32_t begin, std::uint32_t end)
{
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Vec3 lo = points_[index_[begin]], hi = lo;
    for (auto i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[index_[i]]);
        hi = hi.cwiseMax(points_[index_[i]]);
    }
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    if (end - begin <= kLeafSize)
        return id;

    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis])
        return id; // all points coincide
    const auto mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         if (points_[a][axis] != points_[b][axis])
                             return points_[a][axis] < points_[b][axis];
                         return a < b;
                     });
    nodes_[id].axis = axis;
    nodes_[id].split = points_[index_[mid]][axis];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

NearestResult KdTree::nearest(const Vec3& query) const
{
    if (points_.empty())
        throw InvalidArgument("nearest() on an empty tree");
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best_i = std::numeric_limits<std::size_t>::max();
    nearest_rec(0, query, best_d2, best_i);
    return {best_i, std::sqrt(best_d2)};
}

void KdTree::nearest_rec(std::uint32_t id, const Vec3& q, double& best_d2, std::size_t& best_i) const
{
    const Node& n = nodes_[id];
    if (n.left == 0) {
        for (auto k = n.begin; k < n.end; ++k) {
            const auto i = index_[k];
            const double d2 = (points_[i] - q).squaredNorm();
            if (d2 < best_d2 || (d2 == best_d2 && i < best_i)) {
                best_d2 = d2;
                best_i = i;
            }
        }
        return;
    }
    const bool go_left = q[n.axis] < n.split;
    const std::uint32_t first = go_left ? n.left : n.right;
    const std::uint32_t second = go_left ? n.right : n.left;
    // Equal-distance boxes must still be visited so a lower index can win the tie.
    if (box_distance2(q, nodes_[first].lo, nodes_[first].hi) <= best_d2)
        nearest_rec(first, q, best_d2, best_i);
    if (box_distance2(q, nodes_[second].lo, nodes_[second].hi) <= best_d2)
        nearest_rec(second, q, best_d2, best_i);
}

std::vector<std::size_t> KdTree::radius_search(const Vec3& query, double radius) const
{
    std::vector<std::size_t> out;
    radius_search(query, radius, out);
    return out;
}

void KdTree::radius_search(const Vec3& query, double radius, std::vector<std::size_t>& out) const
{
    out.clear();
    if (points_.empty() || radius < 0.0)
        return;
    radius_rec(0, query, radius * radius, out);
    std::sort(out.begin(), out.end());
}

void KdTree::radius_rec(std::uint32_t id, const Vec3& q, double r2, std::vector<std::size_t>& out) const
{
    const Node& n = nodes_[id];
    if (box_distance2(q, n.lo, n.hi) > r2)
        return;
    if (n.left == 0) {
        for (auto k = n.begin; k < n.end; ++k) {
            if ((points_[index_[k]] - q).squaredNorm() <= r2)
                out.push_back(index_[k]);
        }
        return;
    }
    radius_rec(n.left, q, r2, out);
    radius_rec(n.right, q, r2, out);
}

NearestResult nearest(const KdTree& tree, const Vec3& query) { return tree.nearest(query); }

} // namespace weldplan
