#include "weldplan/planners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>

namespace weldplan {

double path_length(const Path& path)
{
    double len = 0.0;
    for (std::size_t i = 1; i < path.waypoints.size(); ++i)
        len += (path.waypoints[i].q - path.waypoints[i - 1].q).norm();
    return len;
}

bool path_valid(const Scene& scene, const KinematicChain& chain, const Path& path, const MotionCheckParams& params)
{
    if (path.empty())
        return false;
    if (path.size() == 1)
        return !scene.in_collision(chain, path.waypoints.front());
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (!scene.motion_valid(chain, path.waypoints[i - 1], path.waypoints[i], params))
            return false;
    }
    return true;
}

void TransitionParams::validate() const
{
    if (!(temperature_rate > 1.0))
        throw InvalidArgument("temperature rate must be > 1");
    if (max_fails < 1)
        throw InvalidArgument("max_fails must be >= 1");
    if (!(initial_temperature > 0.0))
        throw InvalidArgument("initial temperature factor must be positive");
}

TransitionState TransitionState::initial(const TransitionParams& params, double c_start, double c_goal)
{
    params.validate();
    TransitionState s;
    const double range = std::abs(c_start - c_goal);
    s.temperature = params.initial_temperature * (range > 0.0 ? range : 1.0);
    s.min_temperature = s.temperature;
    s.temperature_rate = params.temperature_rate;
    s.max_fails = params.max_fails;
    const double ref = std::max(c_start, c_goal);
    s.reference_cost = ref > 0.0 ? ref : 1.0;
    s.max_cost_seen = s.reference_cost;
    return s;
}

double acceptance_probability(const TransitionState& state, double c_parent, double c_new)
{
    if (c_new <= c_parent)
        return 1.0;
    return std::exp(-(c_new - c_parent) / (state.normalization() * state.temperature));
}

bool transition_test(TransitionState& state, double c_parent, double c_new, double distance, Rng& rng)
{
    if (!std::isfinite(c_parent) || !std::isfinite(c_new) || c_parent < 0.0 || c_new < 0.0)
        throw InvalidArgument("transition test needs finite non-negative costs");
    if (!(distance >= 0.0))
        throw InvalidArgument("transition test needs a non-negative distance");
    state.max_cost_seen = std::max(state.max_cost_seen, c_new);
    if (c_new <= c_parent || rng.uniform() < acceptance_probability(state, c_parent, c_new)) {
        state.temperature = std::max(state.min_temperature, state.temperature / state.temperature_rate);
        state.fails = 0;
        return true;
    }
    if (++state.fails >= state.max_fails) {
        state.temperature *= state.temperature_rate;
        state.fails = 0;
    }
    return false;
}

void PlanRequest::validate() const
{
    if (!start.finite() || !goal.finite())
        throw InvalidArgument("start and goal must be finite");
    if (!(time_budget > 0.0))
        throw InvalidArgument("time budget must be positive");
    if (!(extension_step > 0.0))
        throw InvalidArgument("extension step must be positive");
    if (!(goal_bias >= 0.0 && goal_bias <= 1.0))
        throw InvalidArgument("goal bias must be in [0, 1]");
}

void PlannerSettings::validate() const
{
    motion.validate();
    transition.validate();
    if (!(clearance_padding >= 0.0))
        throw InvalidArgument("clearance padding must be non-negative");
    if (!(weights.array() > 0.0).all())
        throw InvalidArgument("joint weights must be positive");
    if (max_iterations < 1 || rrt_star_iterations < 1 || lbt_iterations < 1 || prm_samples < 1)
        throw InvalidArgument("planner budgets must be positive");
    if (!(rrt_star_max_radius > 0.0))
        throw InvalidArgument("rewiring radius cap must be positive");
    if (!(lbt_epsilon >= 0.0))
        throw InvalidArgument("LBT-RRT epsilon must be non-negative");
    if (std::all_of(locked.begin(), locked.end(), [](bool b) { return b; }))
        throw InvalidArgument("at least one joint must be free");
}

std::string to_string(PlanStatus s)
{
    switch (s) {
    case PlanStatus::success:
        return "success";
    case PlanStatus::timeout:
        return "timeout";
    case PlanStatus::invalid_endpoint:
        return "invalid_endpoint";
    case PlanStatus::disconnected:
        return "disconnected";
    }
    return "?";
}

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();

class Deadline {
public:
    explicit Deadline(double seconds) : start_(Clock::now()), budget_(seconds) {}
    double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }
    bool expired() const { return elapsed() > budget_; }

private:
    Clock::time_point start_;
    double budget_;
};

// Joint-space helpers shared by all planners. Collision queries go to a copy
// of the scene with the padded margin.
class Space {
public:
    Space(const PlanningProblem& problem, const JointConfig& anchor)
        : chain_(problem.chain), settings_(problem.settings), padded_(problem.scene), anchor_(anchor),
          lo_(problem.chain.lower()), hi_(problem.chain.upper())
    {
        padded_.set_safety_margin(problem.scene.safety_margin() + settings_.clearance_padding);
        for (bool l : settings_.locked)
            dims_ += l ? 0 : 1;
    }

    int dims() const { return dims_; }

    double distance(const JointConfig& a, const JointConfig& b) const
    {
        return settings_.weights.cwiseProduct(a.q - b.q).norm();
    }

    JointConfig sample(Rng& rng) const
    {
        JointConfig q = anchor_;
        for (std::size_t i = 0; i < kDof; ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            if (!settings_.locked[i])
                q.q[k] = rng.uniform(lo_[k], hi_[k]);
        }
        return q;
    }

    // Moves from `from` towards `to` by at most `step` (metric units).
    JointConfig steer(const JointConfig& from, const JointConfig& to, double step) const
    {
        const double d = distance(from, to);
        if (d <= step)
            return to;
        return JointConfig(from.q + (to.q - from.q) * (step / d));
    }

    bool free(const JointConfig& q) const { return !padded_.in_collision(chain_, q); }

    bool motion(const JointConfig& a, const JointConfig& b)
    {
        ++motion_checks;
        return padded_.motion_valid(chain_, a, b, settings_.motion);
    }

    // Volume of the free-joint box under the metric, for the optimal radius.
    double measure() const
    {
        double m = 1.0;
        for (std::size_t i = 0; i < kDof; ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            if (!settings_.locked[i])
                m *= settings_.weights[k] * (hi_[k] - lo_[k]);
        }
        return m;
    }

    std::size_t motion_checks = 0;

private:
    const KinematicChain& chain_;
    const PlannerSettings& settings_;
    Scene padded_;
    JointConfig anchor_;
    JointVector lo_, hi_;
    int dims_ = 0;
};

// Shrinking-ball radius gamma (log n / n)^(1/d) with the RRT* constant.
double optimal_radius(const Space& space, std::size_t n, double cap)
{
    if (n < 2)
        return cap;
    const double d = space.dims();
    const double unit_ball = std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
    const double gamma = 2.0 * std::pow(1.0 + 1.0 / d, 1.0 / d) * std::pow(space.measure() / unit_ball, 1.0 / d);
    const double nn = static_cast<double>(n);
    return std::min(cap, gamma * std::pow(std::log(nn) / nn, 1.0 / d));
}

std::size_t nearest_index(const Space& space, const std::vector<JointConfig>& qs, const JointConfig& q)
{
    std::size_t best = 0;
    double best_d = kInf;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const double d = space.distance(qs[i], q);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::vector<std::size_t> near_indices(const Space& space, const std::vector<JointConfig>& qs, const JointConfig& q,
                                      double radius)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        if (space.distance(qs[i], q) <= radius)
            out.push_back(i);
    }
    return out;
}

// Common request screening. Returns true when the caller should return `res`.
bool screen_request(const PlanningProblem& problem, const PlanRequest& request, PlanResult& res)
{
    request.validate();
    problem.settings.validate();
    problem.chain.validate();
    for (std::size_t i = 0; i < kDof; ++i) {
        if (problem.settings.locked[i] && request.start[i] != request.goal[i])
            throw InvalidArgument("locked joint " + std::to_string(i + 1) + " differs between start and goal");
    }
    res.stats.seed = request.seed;
    const auto& scene = problem.scene;
    const auto& chain = problem.chain;
    if (!chain.within_limits(request.start) || !chain.within_limits(request.goal) ||
        scene.in_collision(chain, request.start) || scene.in_collision(chain, request.goal)) {
        res.status = PlanStatus::invalid_endpoint;
        return true;
    }
    if (request.start == request.goal) {
        res.status = PlanStatus::success;
        res.path.waypoints = {request.start};
        return true;
    }
    return false;
}

void finish(PlanResult& res, const Deadline& deadline, std::size_t motion_checks)
{
    res.stats.success = res.ok();
    res.stats.wall_time = deadline.elapsed();
    res.stats.motion_checks = motion_checks;
    res.stats.path_waypoints = res.path.size();
    res.stats.path_length = path_length(res.path);
}

// ---------------------------------------------------------------------------
// Bidirectional engine shared by BiTRRT and RRT-Connect

struct TreeNode {
    JointConfig q;
    int parent = -1;
    double cost = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;
    std::vector<JointConfig> qs; // mirror of node configurations for scans
    TransitionState transition;
    bool is_goal_tree = false;

    void add(const JointConfig& q, int parent, double cost)
    {
        nodes.push_back({q, parent, cost});
        qs.push_back(q);
    }
};

enum class Extend { trapped, advanced, reached };

class BidirectionalPlanner {
public:
    BidirectionalPlanner(const PlanningProblem& problem, const PlanRequest& request, bool use_transition)
        : request_(request), space_(problem, request.start), rng_(request.seed), use_transition_(use_transition),
          max_iterations_(problem.settings.max_iterations)
    {
        const double c_start = cost(request.start);
        const double c_goal = cost(request.goal);
        start_.add(request.start, -1, c_start);
        goal_.add(request.goal, -1, c_goal);
        goal_.is_goal_tree = true;
        start_.transition = TransitionState::initial(problem.settings.transition, c_start, c_goal);
        goal_.transition = start_.transition;
    }

    PlanResult run(const Deadline& deadline)
    {
        PlanResult res;
        Tree* ta = &start_;
        Tree* tb = &goal_;
        long it = 0;
        for (; it < max_iterations_; ++it) {
            if (deadline.expired())
                break;
            const bool bias = it == 0 || rng_.uniform() < request_.goal_bias;
            const JointConfig target = bias ? tb->nodes.front().q : space_.sample(rng_);
            const auto [status, idx] = extend(*ta, target, false);
            if (status != Extend::trapped) {
                const JointConfig link = ta->nodes[static_cast<std::size_t>(idx)].q;
                for (;;) {
                    const auto [st2, idx2] = extend(*tb, link, true);
                    if (st2 == Extend::reached) {
                        res.status = PlanStatus::success;
                        res.path = join(*ta, idx, *tb, idx2);
                        res.stats.iterations = it + 1;
                        fill_stats(res);
                        return res;
                    }
                    if (st2 == Extend::trapped)
                        break;
                }
            }
            std::swap(ta, tb);
        }
        res.status = PlanStatus::timeout;
        res.stats.iterations = it;
        fill_stats(res);
        return res;
    }

    std::size_t motion_checks() const { return space_.motion_checks; }

private:
    double cost(const JointConfig& q) const { return request_.cost ? request_.cost(q) : 0.0; }

    std::pair<Extend, int> extend(Tree& tree, const JointConfig& target, bool connecting)
    {
        const std::size_t near = nearest_index(space_, tree.qs, target);
        const JointConfig from = tree.nodes[near].q;
        const double from_cost = tree.nodes[near].cost;
        const double d = space_.distance(from, target);
        if (d == 0.0)
            return {Extend::reached, static_cast<int>(near)};
        const bool reaches = d <= request_.extension_step;
        const JointConfig q_new = reaches ? target : space_.steer(from, target, request_.extension_step);
        if (!space_.motion(from, q_new))
            return {Extend::trapped, -1};
        const double c_new = cost(q_new);
        if (use_transition_) {
            const double step = std::min(d, request_.extension_step);
            // The goal tree explores in its growth direction, which keeps it in
            // the low-cost basin around the goal; a connection edge is judged
            // in the direction the path will be travelled.
            const bool ok = connecting && tree.is_goal_tree
                                ? transition_test(tree.transition, c_new, from_cost, step, rng_)
                                : transition_test(tree.transition, from_cost, c_new, step, rng_);
            if (!ok)
                return {Extend::trapped, -1};
        }
        tree.add(q_new, static_cast<int>(near), c_new);
        return {reaches ? Extend::reached : Extend::advanced, static_cast<int>(tree.nodes.size() - 1)};
    }

    static std::vector<JointConfig> to_root(const Tree& t, int idx)
    {
        std::vector<JointConfig> out;
        for (int i = idx; i >= 0; i = t.nodes[static_cast<std::size_t>(i)].parent)
            out.push_back(t.nodes[static_cast<std::size_t>(i)].q);
        return out;
    }

    Path join(const Tree& ta, int ia, const Tree& tb, int ib) const
    {
        const Tree& ts = ta.is_goal_tree ? tb : ta;
        const Tree& tg = ta.is_goal_tree ? ta : tb;
        const int is = ta.is_goal_tree ? ib : ia;
        const int ig = ta.is_goal_tree ? ia : ib;
        auto from_start = to_root(ts, is);
        std::reverse(from_start.begin(), from_start.end());
        const auto to_goal = to_root(tg, ig);
        Path p;
        p.waypoints = std::move(from_start);
        // Both junction nodes hold the same configuration.
        p.waypoints.insert(p.waypoints.end(), to_goal.begin() + 1, to_goal.end());
        return p;
    }

    void fill_stats(PlanResult& res) const
    {
        res.stats.start_tree_nodes = start_.nodes.size();
        res.stats.goal_tree_nodes = goal_.nodes.size();
        res.stats.final_temperature_start = start_.transition.temperature;
        res.stats.final_temperature_goal = goal_.transition.temperature;
    }

    const PlanRequest& request_;
    Space space_;
    Rng rng_;
    bool use_transition_;
    long max_iterations_;
    Tree start_;
    Tree goal_;
};

PlanResult plan_bidirectional(const PlanningProblem& problem, const PlanRequest& request, bool use_transition,
                              const char* name)
{
    const Deadline deadline(request.time_budget);
    PlanResult res;
    res.stats.planner = name;
    if (screen_request(problem, request, res)) {
        res.stats.planner = name;
        finish(res, deadline, 0);
        return res;
    }
    BidirectionalPlanner planner(problem, request, use_transition);
    res = planner.run(deadline);
    res.stats.planner = name;
    res.stats.seed = request.seed;
    finish(res, deadline, planner.motion_checks());
    return res;
}

void propagate_costs(std::vector<double>& g, const std::vector<std::vector<std::size_t>>& children,
                     const std::vector<JointConfig>& qs, const Space& space, std::size_t root)
{
    std::vector<std::size_t> stack{root};
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t c : children[u]) {
            g[c] = g[u] + space.distance(qs[u], qs[c]);
            stack.push_back(c);
        }
    }
}

void detach(std::vector<std::vector<std::size_t>>& children, std::size_t parent, std::size_t child)
{
    auto& v = children[parent];
    v.erase(std::find(v.begin(), v.end(), child));
}

} // namespace

PlanResult plan_bitrrt(const PlanningProblem& problem, const PlanRequest& request)
{
    return plan_bidirectional(problem, request, true, "bitrrt");
}

PlanResult plan_rrt_connect(const PlanningProblem& problem, const PlanRequest& request)
{
    return plan_bidirectional(problem, request, false, "rrtconnect");
}

// ---------------------------------------------------------------------------

PlanResult plan_rrt_star(const PlanningProblem& problem, const PlanRequest& request)
{
    const Deadline deadline(request.time_budget);
    PlanResult res;
    res.stats.planner = "rrtstar";
    if (screen_request(problem, request, res)) {
        finish(res, deadline, 0);
        return res;
    }
    Space space(problem, request.start);
    Rng rng(request.seed);
    const double step = request.extension_step;
    const double cap = problem.settings.rrt_star_max_radius;

    std::vector<JointConfig> qs{request.start};
    std::vector<int> parent{-1};
    std::vector<double> g{0.0};
    std::vector<std::vector<std::size_t>> children(1);
    long goal = -1;

    // Adds q_new (reachable from `near`) with choose-parent and rewiring.
    auto insert = [&](const JointConfig& q_new, std::size_t near) {
        const double r = optimal_radius(space, qs.size() + 1, cap);
        auto candidates = near_indices(space, qs, q_new, r);
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t c : candidates)
            order.emplace_back(g[c] + space.distance(qs[c], q_new), c);
        std::sort(order.begin(), order.end());
        std::size_t best = near;
        double best_cost = g[near] + space.distance(qs[near], q_new);
        for (const auto& [c_cost, c] : order) {
            if (c_cost >= best_cost)
                break;
            if (space.motion(qs[c], q_new)) {
                best = c;
                best_cost = c_cost;
                break;
            }
        }
        const std::size_t v = qs.size();
        qs.push_back(q_new);
        parent.push_back(static_cast<int>(best));
        g.push_back(best_cost);
        children.emplace_back();
        children[best].push_back(v);

        for (std::size_t c : candidates) {
            if (c == best || c == 0)
                continue;
            const double via = g[v] + space.distance(q_new, qs[c]);
            if (via < g[c] && space.motion(q_new, qs[c])) {
                detach(children, static_cast<std::size_t>(parent[c]), c);
                parent[c] = static_cast<int>(v);
                children[v].push_back(c);
                g[c] = via;
                propagate_costs(g, children, qs, space, c);
            }
        }
        return v;
    };

    long it = 0;
    for (; it < problem.settings.rrt_star_iterations; ++it) {
        if (deadline.expired())
            break;
        const JointConfig target = rng.uniform() < request.goal_bias ? request.goal : space.sample(rng);
        const std::size_t near = nearest_index(space, qs, target);
        const JointConfig q_new = space.steer(qs[near], target, step);
        const bool is_goal = q_new == request.goal;
        const bool skip = space.distance(qs[near], q_new) == 0.0 || (is_goal && goal >= 0);
        if (!skip && space.motion(qs[near], q_new)) {
            const std::size_t v = insert(q_new, near);
            if (is_goal)
                goal = static_cast<long>(v);
            // Direct connection once the goal is inside the neighbourhood.
            if (goal < 0 && space.distance(q_new, request.goal) <= optimal_radius(space, qs.size(), cap) &&
                space.motion(q_new, request.goal))
                goal = static_cast<long>(insert(request.goal, v));
        }
        res.stats.best_cost_trace.push_back(goal >= 0 ? g[static_cast<std::size_t>(goal)] : kInf);
    }
    res.stats.iterations = it;
    res.stats.start_tree_nodes = qs.size();
    if (goal >= 0) {
        res.status = PlanStatus::success;
        for (long i = goal; i >= 0; i = parent[static_cast<std::size_t>(i)])
            res.path.waypoints.push_back(qs[static_cast<std::size_t>(i)]);
        std::reverse(res.path.waypoints.begin(), res.path.waypoints.end());
    } else {
        res.status = PlanStatus::timeout;
    }
    finish(res, deadline, space.motion_checks);
    return res;
}

// ---------------------------------------------------------------------------

namespace {

struct GraphEdge {
    std::size_t u = 0;
    std::size_t v = 0;
    double w = 0.0;
    enum class State { unknown, valid, invalid } state = State::unknown;

    std::size_t other(std::size_t x) const { return x == u ? v : u; }
};

struct Graph {
    std::vector<GraphEdge> edges;
    std::vector<std::vector<std::size_t>> adj; // edge ids

    std::size_t add_edge(std::size_t u, std::size_t v, double w, GraphEdge::State s = GraphEdge::State::unknown)
    {
        edges.push_back({u, v, w, s});
        adj[u].push_back(edges.size() - 1);
        adj[v].push_back(edges.size() - 1);
        return edges.size() - 1;
    }
};

using QueueItem = std::pair<double, std::size_t>;
using MinQueue = std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>>;

// Dijkstra over edges not known to be invalid. pred_edge is -1 for the root
// and unreachable vertices.
void dijkstra(const Graph& graph, std::size_t root, std::vector<double>& dist, std::vector<long>& pred_edge)
{
    const std::size_t n = graph.adj.size();
    dist.assign(n, kInf);
    pred_edge.assign(n, -1);
    dist[root] = 0.0;
    MinQueue pq;
    pq.emplace(0.0, root);
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u])
            continue;
        for (std::size_t e : graph.adj[u]) {
            const GraphEdge& ed = graph.edges[e];
            if (ed.state == GraphEdge::State::invalid)
                continue;
            const std::size_t v = ed.other(u);
            const double nd = d + ed.w;
            if (nd < dist[v]) {
                dist[v] = nd;
                pred_edge[v] = static_cast<long>(e);
                pq.emplace(nd, v);
            }
        }
    }
}

} // namespace

PlanResult plan_prm_star(const PlanningProblem& problem, const PlanRequest& request)
{
    const Deadline deadline(request.time_budget);
    PlanResult res;
    res.stats.planner = "prmstar";
    if (screen_request(problem, request, res)) {
        finish(res, deadline, 0);
        return res;
    }
    Space space(problem, request.start);
    Rng rng(request.seed);

    std::vector<JointConfig> qs{request.start, request.goal};
    const std::size_t wanted = static_cast<std::size_t>(problem.settings.prm_samples);
    const std::size_t max_attempts = wanted * 50;
    for (std::size_t attempt = 0; attempt < max_attempts && qs.size() < wanted + 2; ++attempt) {
        if ((attempt & 63) == 0 && deadline.expired()) {
            res.status = PlanStatus::timeout;
            finish(res, deadline, space.motion_checks);
            return res;
        }
        const JointConfig q = space.sample(rng);
        if (space.free(q))
            qs.push_back(q);
    }

    const std::size_t n = qs.size();
    const double d = space.dims();
    const auto k = std::min<std::size_t>(
        n - 1, static_cast<std::size_t>(std::ceil(std::exp(1.0) * (1.0 + 1.0 / d) * std::log(static_cast<double>(n)))));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::pair<double, std::size_t>> by_dist;
    for (std::size_t u = 0; u < n; ++u) {
        by_dist.clear();
        for (std::size_t v = 0; v < n; ++v) {
            if (v != u)
                by_dist.emplace_back(space.distance(qs[u], qs[v]), v);
        }
        std::partial_sort(by_dist.begin(), by_dist.begin() + static_cast<long>(k), by_dist.end());
        for (std::size_t i = 0; i < k; ++i)
            pairs.emplace_back(std::min(u, by_dist[i].second), std::max(u, by_dist[i].second));
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    Graph graph;
    graph.adj.resize(n);
    for (const auto& [u, v] : pairs)
        graph.add_edge(u, v, space.distance(qs[u], qs[v]));
    res.stats.start_tree_nodes = n;
    res.stats.goal_tree_nodes = graph.edges.size();

    // Lazy evaluation: check only the edges of the current shortest path. The
    // answer is the shortest path over valid roadmap edges, as with eager checks.
    std::vector<double> dist;
    std::vector<long> pred;
    long rounds = 0;
    for (;;) {
        if (deadline.expired()) {
            res.status = PlanStatus::timeout;
            break;
        }
        ++rounds;
        dijkstra(graph, 0, dist, pred);
        if (!std::isfinite(dist[1])) {
            res.status = PlanStatus::disconnected;
            break;
        }
        std::vector<std::size_t> chain_edges;
        for (std::size_t x = 1; x != 0;) {
            const auto e = static_cast<std::size_t>(pred[x]);
            chain_edges.push_back(e);
            x = graph.edges[e].other(x);
        }
        std::reverse(chain_edges.begin(), chain_edges.end());
        bool all_valid = true;
        for (std::size_t e : chain_edges) {
            GraphEdge& ed = graph.edges[e];
            if (ed.state == GraphEdge::State::unknown)
                ed.state = space.motion(qs[ed.u], qs[ed.v]) ? GraphEdge::State::valid : GraphEdge::State::invalid;
            if (ed.state == GraphEdge::State::invalid) {
                all_valid = false;
                break;
            }
        }
        if (all_valid) {
            res.status = PlanStatus::success;
            std::vector<JointConfig> rev;
            for (std::size_t x = 1;; x = graph.edges[static_cast<std::size_t>(pred[x])].other(x)) {
                rev.push_back(qs[x]);
                if (x == 0)
                    break;
            }
            res.path.waypoints.assign(rev.rbegin(), rev.rend());
            break;
        }
    }
    res.stats.iterations = rounds;
    finish(res, deadline, space.motion_checks);
    return res;
}

// ---------------------------------------------------------------------------
// LBT-RRT: an approximation tree whose edges are collision-checked, and a
// lower-bound graph whose edges are checked only when the approximation cost of
// a vertex would otherwise exceed (1 + eps) times its lower bound.

namespace {

class LbtRrt {
public:
    LbtRrt(const PlanningProblem& problem, const PlanRequest& request)
        : request_(request), space_(problem, request.start), rng_(request.seed),
          eps_(problem.settings.lbt_epsilon), cap_(problem.settings.rrt_star_max_radius),
          iterations_(problem.settings.lbt_iterations)
    {
        add_vertex(request.start, -1, 0.0);
        lb_[0] = 0.0;
    }

    PlanResult run(const Deadline& deadline)
    {
        PlanResult res;
        const double step = request_.extension_step;
        long it = 0;
        for (; it < iterations_; ++it) {
            if (deadline.expired())
                break;
            const JointConfig target = rng_.uniform() < request_.goal_bias ? request_.goal : space_.sample(rng_);
            const std::size_t near = nearest_index(space_, qs_, target);
            const JointConfig q_new = space_.steer(qs_[near], target, step);
            const bool is_goal = q_new == request_.goal;
            const bool skip = space_.distance(qs_[near], q_new) == 0.0 || (is_goal && goal_ >= 0);
            if (!skip && space_.motion(qs_[near], q_new)) {
                const std::size_t v = insert(q_new, near, is_goal);
                // Direct connection once the goal is inside the neighbourhood.
                if (goal_ < 0 && space_.distance(q_new, request_.goal) <= optimal_radius(space_, qs_.size(), cap_) &&
                    space_.motion(q_new, request_.goal))
                    insert(request_.goal, v, true);
            }
            res.stats.best_cost_trace.push_back(goal_ >= 0 ? apx_[static_cast<std::size_t>(goal_)] : kInf);
        }
        res.stats.iterations = it;
        res.stats.start_tree_nodes = qs_.size();
        res.stats.goal_tree_nodes = graph_.edges.size();
        res.stats.goal_lower_bound = goal_lower_bound();
        if (goal_ >= 0) {
            res.status = PlanStatus::success;
            for (long i = goal_; i >= 0; i = parent_[static_cast<std::size_t>(i)])
                res.path.waypoints.push_back(qs_[static_cast<std::size_t>(i)]);
            std::reverse(res.path.waypoints.begin(), res.path.waypoints.end());
        } else {
            res.status = PlanStatus::timeout;
        }
        return res;
    }

    double goal_lower_bound() const { return goal_ >= 0 ? lb_[static_cast<std::size_t>(goal_)] : kInf; }
    std::size_t motion_checks() const { return space_.motion_checks; }

private:
    void add_vertex(const JointConfig& q, long parent, double apx)
    {
        qs_.push_back(q);
        parent_.push_back(parent);
        apx_.push_back(apx);
        children_.emplace_back();
        lb_.push_back(kInf);
        lb_pred_.push_back(-1);
        graph_.adj.emplace_back();
        if (parent >= 0)
            children_[static_cast<std::size_t>(parent)].push_back(qs_.size() - 1);
    }

    std::size_t insert(const JointConfig& q_new, std::size_t near, bool is_goal)
    {
        const std::size_t v = qs_.size();
        add_vertex(q_new, static_cast<long>(near), apx_[near] + space_.distance(qs_[near], q_new));
        if (is_goal)
            goal_ = static_cast<long>(v);
        graph_.add_edge(near, v, space_.distance(qs_[near], q_new), GraphEdge::State::valid);
        const double r = optimal_radius(space_, qs_.size(), cap_);
        for (std::size_t x = 0; x < v; ++x) {
            if (x == near)
                continue;
            const double w = space_.distance(qs_[x], q_new);
            if (w <= r)
                graph_.add_edge(x, v, w);
        }
        relax_from(v);
        repair();
        return v;
    }

    // Incremental lower-bound update after inserting v with its edges.
    void relax_from(std::size_t v)
    {
        for (std::size_t e : graph_.adj[v]) {
            const GraphEdge& ed = graph_.edges[e];
            const std::size_t x = ed.other(v);
            if (lb_[x] + ed.w < lb_[v]) {
                lb_[v] = lb_[x] + ed.w;
                lb_pred_[v] = static_cast<long>(e);
            }
        }
        MinQueue pq;
        pq.emplace(lb_[v], v);
        while (!pq.empty()) {
            const auto [d, u] = pq.top();
            pq.pop();
            if (d > lb_[u])
                continue;
            for (std::size_t e : graph_.adj[u]) {
                const GraphEdge& ed = graph_.edges[e];
                if (ed.state == GraphEdge::State::invalid)
                    continue;
                const std::size_t x = ed.other(u);
                if (d + ed.w < lb_[x]) {
                    lb_[x] = d + ed.w;
                    lb_pred_[x] = static_cast<long>(e);
                    pq.emplace(lb_[x], x);
                }
            }
        }
    }

    bool violated(std::size_t v) const { return apx_[v] > (1.0 + eps_) * lb_[v] * (1.0 + 1e-12); }

    void repair()
    {
        for (;;) {
            long worst = -1;
            for (std::size_t v = 0; v < qs_.size(); ++v) {
                if (violated(v) && (worst < 0 || lb_[v] < lb_[static_cast<std::size_t>(worst)]))
                    worst = static_cast<long>(v);
            }
            if (worst < 0)
                return;
            const auto v = static_cast<std::size_t>(worst);
            GraphEdge& ed = graph_.edges[static_cast<std::size_t>(lb_pred_[v])];
            const std::size_t p = ed.other(v);
            if (ed.state == GraphEdge::State::unknown)
                ed.state = space_.motion(qs_[p], qs_[v]) ? GraphEdge::State::valid : GraphEdge::State::invalid;
            if (ed.state == GraphEdge::State::invalid) {
                dijkstra(graph_, 0, lb_, lb_pred_);
                continue;
            }
            // p has a smaller lower bound and satisfies the bound, so routing v
            // through p restores it for v and only lowers costs below v.
            detach(children_, static_cast<std::size_t>(parent_[v]), v);
            parent_[v] = static_cast<long>(p);
            children_[p].push_back(v);
            apx_[v] = apx_[p] + ed.w;
            propagate_costs(apx_, children_, qs_, space_, v);
        }
    }

    const PlanRequest& request_;
    Space space_;
    Rng rng_;
    double eps_;
    double cap_;
    long iterations_;
    std::vector<JointConfig> qs_;
    std::vector<long> parent_;
    std::vector<double> apx_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<double> lb_;
    std::vector<long> lb_pred_;
    Graph graph_;
    long goal_ = -1;
};

} // namespace

PlanResult plan_lbt_rrt(const PlanningProblem& problem, const PlanRequest& request)
{
    const Deadline deadline(request.time_budget);
    PlanResult res;
    res.stats.planner = "lbtrrt";
    if (screen_request(problem, request, res)) {
        finish(res, deadline, 0);
        return res;
    }
    LbtRrt planner(problem, request);
    res = planner.run(deadline);
    res.stats.planner = "lbtrrt";
    res.stats.seed = request.seed;
    finish(res, deadline, planner.motion_checks());
    return res;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& planner_names()
{
    static const std::vector<std::string> names{"bitrrt", "rrtconnect", "rrtstar", "prmstar", "lbtrrt"};
    return names;
}

bool is_planner_name(const std::string& name)
{
    const auto& n = planner_names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

PlanResult plan(const std::string& planner, const PlanningProblem& problem, const PlanRequest& request)
{
    if (planner == "bitrrt")
        return plan_bitrrt(problem, request);
    if (planner == "rrtconnect")
        return plan_rrt_connect(problem, request);
    if (planner == "rrtstar")
        return plan_rrt_star(problem, request);
    if (planner == "prmstar")
        return plan_prm_star(problem, request);
    if (planner == "lbtrrt")
        return plan_lbt_rrt(problem, request);
    throw InvalidArgument("unknown planner '" + planner + "'");
}

} // namespace weldplan
