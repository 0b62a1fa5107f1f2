#pragma once

// Least-cost routing with fractal-aware link costs.
//
// Link costs start from an administrator base cost and are refreshed at
// announcement intervals from the carried traffic's (H, sigma_var) by an
// exact four-branch piecewise rule; increments are re-derived from the base
// cost each time (never compounded).  Flows are routed greedily: class
// priority first, larger bandwidth first, each on its least-cost path with
// sufficient residual capacity.  A brute-force enumerator over all simple
// paths serves as the optimality oracle on small instances.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace fqos {

struct link {
    int link_id = -1;
    int node_a = -1, node_b = -1;
    double base_cost = 1.0;     // administrator-assigned
    double current_cost = 1.0;  // after the latest announcement
    double capacity = 0.0;      // bandwidth units
    int channels = 1;
    double allocated = 0.0;     // bandwidth currently held by flows

    double residual() const { return capacity - allocated; }

    void validate() const {
        if (!(base_cost > 0.0)) throw std::invalid_argument("link: base_cost must be > 0");
        if (!(capacity >= 0.0)) throw std::invalid_argument("link: capacity must be >= 0");
        if (channels < 1) throw std::invalid_argument("link: channels must be >= 1");
        if (node_a == node_b) throw std::invalid_argument("link: self-loop");
    }
};

struct topology {
    int node_count = 0;
    std::vector<link> links;
    std::vector<std::string> node_names;  // optional, index-aligned

    void validate() const {
        if (node_count < 1) throw std::invalid_argument("topology: need >= 1 node");
        for (const auto& l : links) {
            l.validate();
            if (l.node_a < 0 || l.node_a >= node_count || l.node_b < 0 || l.node_b >= node_count)
                throw std::invalid_argument("topology: link endpoint out of range");
        }
    }

    const link& link_by_id(int id) const {
        for (const auto& l : links)
            if (l.link_id == id) return l;
        throw std::invalid_argument("topology: unknown link id");
    }
    link& link_by_id(int id) {
        for (auto& l : links)
            if (l.link_id == id) return l;
        throw std::invalid_argument("topology: unknown link id");
    }
};

struct traffic_demand {
    int flow_id = -1;
    int priority = 0;  // service-class priority, lower = more critical
    int src = -1, dst = -1;
    double bandwidth = 0.0;
};

// Which branch of the cost rule applies; exactly one for every valid input.
//   1: H <= 0.5                          -> C
//   2: 0.5 < H < 0.9 and sigma_var <= 1  -> C + (H - 0.5) C0
//   3: 0.5 < H < 0.9 and 1 < sigma_var < 3 -> C + (H - 0.5)(sigma_var - 1) C0
//   4: H >= 0.9, or H > 0.5 and sigma_var >= 3 -> C + C0
inline int update_cost_branch(double hurst, double sigma_var) {
    if (hurst <= 0.5) return 1;
    if (hurst >= 0.9 || sigma_var >= 3.0) return 4;
    if (sigma_var <= 1.0) return 2;
    return 3;
}

inline double update_cost(double cost, double hurst, double sigma_var, double c0) {
    if (!(cost >= 0.0)) throw std::invalid_argument("update_cost: C must be >= 0");
    if (!(c0 > 0.0)) throw std::invalid_argument("update_cost: C0 must be > 0");
    if (!(sigma_var >= 0.0)) throw std::invalid_argument("update_cost: sigma_var must be >= 0");
    if (!(hurst > 0.0 && hurst <= 1.0)) throw std::invalid_argument("update_cost: H must be in (0, 1]");
    switch (update_cost_branch(hurst, sigma_var)) {
        case 1: return cost;
        case 2: return cost + (hurst - 0.5) * c0;
        case 3: return cost + (hurst - 0.5) * (sigma_var - 1.0) * c0;
        default: return cost + c0;
    }
}

inline double path_cost(const topology& topo, const std::vector<int>& path_links) {
    if (path_links.empty()) throw std::invalid_argument("path_cost: empty path");
    double c = 0.0;
    for (int id : path_links) c += topo.link_by_id(id).current_cost;
    return c;
}

struct flow_route {
    int flow_id = -1;
    bool routed = false;
    std::vector<int> path_links;
    double bandwidth = 0.0;
    double cost = 0.0;  // path cost at assignment time
    std::string reason;  // when unrouted
};

struct routing_outcome {
    std::vector<flow_route> routes;  // one per demand, demand order preserved
    double objective = 0.0;          // sum over routed flows of path_cost * bandwidth
    int unrouted = 0;
};

namespace detail {

// Deterministic Dijkstra over links with residual capacity >= need.
// Ties broken by (cost, node index); path returned as link ids.
inline std::optional<std::vector<int>> least_cost_path(const topology& topo, int src, int dst,
                                                       double need) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(static_cast<std::size_t>(topo.node_count), inf);
    std::vector<int> parent_link(static_cast<std::size_t>(topo.node_count), -1);
    std::vector<int> parent_node(static_cast<std::size_t>(topo.node_count), -1);
    using entry = std::pair<double, int>;
    std::priority_queue<entry, std::vector<entry>, std::greater<>> heap;
    dist[static_cast<std::size_t>(src)] = 0.0;
    heap.emplace(0.0, src);

    // Adjacency built on the fly (instances are small).
    std::vector<std::vector<std::size_t>> adj(static_cast<std::size_t>(topo.node_count));
    for (std::size_t i = 0; i < topo.links.size(); ++i) {
        adj[static_cast<std::size_t>(topo.links[i].node_a)].push_back(i);
        adj[static_cast<std::size_t>(topo.links[i].node_b)].push_back(i);
    }
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        if (u == dst) break;
        for (std::size_t li : adj[static_cast<std::size_t>(u)]) {
            const link& l = topo.links[li];
            if (l.residual() + 1e-12 < need) continue;
            int v = l.node_a == u ? l.node_b : l.node_a;
            double nd = d + l.current_cost;
            auto& dv = dist[static_cast<std::size_t>(v)];
            if (nd < dv - 1e-15 || (std::abs(nd - dv) <= 1e-15 && parent_node[static_cast<std::size_t>(v)] > u)) {
                dv = nd;
                parent_link[static_cast<std::size_t>(v)] = l.link_id;
                parent_node[static_cast<std::size_t>(v)] = u;
                heap.emplace(nd, v);
            }
        }
    }
    if (!std::isfinite(dist[static_cast<std::size_t>(dst)])) return std::nullopt;
    std::vector<int> path;
    for (int at = dst; at != src;) {
        int lid = parent_link[static_cast<std::size_t>(at)];
        path.push_back(lid);
        at = parent_node[static_cast<std::size_t>(at)];
    }
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace detail

namespace detail {

// Cost polish for a complete routing: tear out groups of one to three flows
// and re-route them against the fixed remainder, trying every insertion
// order, adopting the cheapest strictly-improving variant until no group
// move helps.  The greedy pass commits paths in order, so two flows sharing
// a tight corridor may need to trade paths to reach the joint optimum.
inline void polish_routes(topology& topo, routing_outcome& out,
                          const std::vector<traffic_demand>& demands) {
    std::vector<std::size_t> movable;
    for (std::size_t i = 0; i < out.routes.size(); ++i)
        if (out.routes[i].routed && !out.routes[i].path_links.empty()) movable.push_back(i);
    const std::size_t max_group = std::min<std::size_t>(3, movable.size());
    auto combinations = [&](std::size_t r) {
        std::vector<std::vector<std::size_t>> all;
        std::vector<std::size_t> cur;
        auto rec = [&](auto&& self, std::size_t start) -> void {
            if (cur.size() == r) {
                all.push_back(cur);
                return;
            }
            for (std::size_t i = start; i + (r - cur.size()) <= movable.size(); ++i) {
                cur.push_back(movable[i]);
                self(self, i + 1);
                cur.pop_back();
            }
        };
        rec(rec, 0);
        return all;
    };
    for (int iter = 0; iter < 64; ++iter) {
        double best_delta = -1e-12;
        topology best_topo;
        std::vector<std::pair<std::size_t, flow_route>> best_changes;
        for (std::size_t r = 1; r <= max_group && best_changes.empty(); ++r) {
            for (const auto& comb : combinations(r)) {
                std::vector<std::size_t> perm = comb;
                std::sort(perm.begin(), perm.end());
                do {
                    topology work = topo;
                    double delta = 0.0;
                    for (std::size_t i : comb) {
                        for (int lid : out.routes[i].path_links)
                            work.link_by_id(lid).allocated -= out.routes[i].bandwidth;
                        delta -= out.routes[i].cost * out.routes[i].bandwidth;
                    }
                    std::vector<std::pair<std::size_t, flow_route>> changes;
                    bool ok = true;
                    for (std::size_t i : perm) {
                        const auto& d = demands[i];
                        auto path = least_cost_path(work, d.src, d.dst, d.bandwidth);
                        if (!path) {
                            ok = false;
                            break;
                        }
                        flow_route nr = out.routes[i];
                        nr.path_links = *path;
                        nr.cost = path_cost(work, *path);
                        for (int lid : *path) work.link_by_id(lid).allocated += d.bandwidth;
                        delta += nr.cost * d.bandwidth;
                        changes.emplace_back(i, std::move(nr));
                    }
                    if (ok && delta < best_delta) {
                        best_delta = delta;
                        best_topo = std::move(work);
                        best_changes = std::move(changes);
                    }
                } while (std::next_permutation(perm.begin(), perm.end()));
            }
        }
        if (best_changes.empty()) break;
        topo = std::move(best_topo);
        for (auto& [i, nr] : best_changes) out.routes[i] = std::move(nr);
        out.objective = 0.0;
        for (const auto& rt : out.routes)
            if (rt.routed) out.objective += rt.cost * rt.bandwidth;
    }
}

}  // namespace detail

// Greedy successive least-cost routing with order repair and cost polish.
// Flows go class priority first, larger bandwidth first; when a pass strands
// a flow for lack of residual capacity, that flow is promoted to the front
// and the whole assignment restarts (one promotion per flow at most), so an
// early cheap choice cannot permanently block a later flow's only corridor.
// The outcome with the fewest unrouted flows wins; ties keep the earliest
// attempt.  Complete routings then get a group re-route descent (see
// polish_routes).  Mutates link allocations in topo.
inline routing_outcome route_flows(topology& topo, const std::vector<traffic_demand>& demands) {
    topo.validate();
    std::vector<std::size_t> base(demands.size());
    for (std::size_t i = 0; i < base.size(); ++i) base[i] = i;
    std::sort(base.begin(), base.end(), [&](std::size_t a, std::size_t b) {
        const auto& da = demands[a];
        const auto& db = demands[b];
        if (da.priority != db.priority) return da.priority < db.priority;
        if (da.bandwidth != db.bandwidth) return da.bandwidth > db.bandwidth;
        return da.flow_id < db.flow_id;
    });

    auto attempt = [&demands](const std::vector<std::size_t>& order, topology& t) {
        routing_outcome out;
        out.routes.resize(demands.size());
        for (std::size_t oi : order) {
            const auto& d = demands[oi];
            flow_route r;
            r.flow_id = d.flow_id;
            r.bandwidth = d.bandwidth;
            if (d.src < 0 || d.src >= t.node_count || d.dst < 0 || d.dst >= t.node_count) {
                r.reason = "endpoint out of range";
            } else if (d.src == d.dst) {
                r.routed = true;  // degenerate: nothing to allocate
            } else if (auto path = detail::least_cost_path(t, d.src, d.dst, d.bandwidth)) {
                r.routed = true;
                r.path_links = *path;
                r.cost = path_cost(t, *path);
                for (int lid : *path) t.link_by_id(lid).allocated += d.bandwidth;
                out.objective += r.cost * d.bandwidth;
            } else {
                r.reason = "no path with sufficient residual capacity";
            }
            if (!r.routed) ++out.unrouted;
            out.routes[oi] = r;
        }
        return out;
    };

    std::vector<std::size_t> promoted;  // most recently stranded flow first
    routing_outcome best;
    topology best_topo = topo;
    bool have_best = false;
    for (std::size_t tries = 0; tries <= demands.size(); ++tries) {
        std::vector<std::size_t> order = promoted;
        for (std::size_t i : base)
            if (std::find(promoted.begin(), promoted.end(), i) == promoted.end())
                order.push_back(i);
        topology work = topo;
        routing_outcome out = attempt(order, work);
        std::size_t next = demands.size();
        for (std::size_t oi : order) {
            if (!out.routes[oi].routed &&
                out.routes[oi].reason == "no path with sufficient residual capacity" &&
                std::find(promoted.begin(), promoted.end(), oi) == promoted.end()) {
                next = oi;
                break;
            }
        }
        if (!have_best || out.unrouted < best.unrouted) {
            best = std::move(out);
            best_topo = std::move(work);
            have_best = true;
        }
        if (best.unrouted == 0 || next == demands.size()) break;
        promoted.insert(promoted.begin(), next);
    }
    if (best.unrouted == 0) detail::polish_routes(best_topo, best, demands);
    topo = std::move(best_topo);
    return best;
}

// Refresh every link's cost from its dominant carried signature before
// re-routing.  Links with no signature fall back to the base cost.
struct link_signature {
    double hurst = 0.5;
    double sigma_var = 0.0;
};

inline void refresh_costs(topology& topo, const std::map<int, link_signature>& per_link, double c0) {
    for (auto& l : topo.links) {
        auto it = per_link.find(l.link_id);
        if (it == per_link.end()) {
            l.current_cost = l.base_cost;
        } else {
            l.current_cost = update_cost(l.base_cost, it->second.hurst, it->second.sigma_var, c0);
        }
    }
}

// --- Brute-force oracle (small instances only) -----------------------------

namespace detail {

inline void all_simple_paths(const topology& topo, int at, int dst, std::vector<bool>& visited,
                             std::vector<int>& stack, std::vector<std::vector<int>>& out) {
    if (at == dst) {
        out.push_back(stack);
        return;
    }
    for (const auto& l : topo.links) {
        int other;
        if (l.node_a == at)
            other = l.node_b;
        else if (l.node_b == at)
            other = l.node_a;
        else
            continue;
        if (visited[static_cast<std::size_t>(other)]) continue;
        visited[static_cast<std::size_t>(other)] = true;
        stack.push_back(l.link_id);
        all_simple_paths(topo, other, dst, visited, stack, out);
        stack.pop_back();
        visited[static_cast<std::size_t>(other)] = false;
    }
}

}  // namespace detail

// Minimal total cost*bandwidth over all assignments that route every demand
// within capacity; nullopt when no such assignment exists.  Exponential in
// the number of demands; intended for <= 4 nodes, <= 6 links, <= 3 demands.
inline std::optional<double> brute_force_route_optimum(const topology& topo_in,
                                                       const std::vector<traffic_demand>& demands) {
    topology topo = topo_in;
    std::vector<std::vector<std::vector<int>>> options(demands.size());
    for (std::size_t i = 0; i < demands.size(); ++i) {
        if (demands[i].src == demands[i].dst) {
            options[i].push_back({});
            continue;
        }
        std::vector<bool> visited(static_cast<std::size_t>(topo.node_count), false);
        visited[static_cast<std::size_t>(demands[i].src)] = true;
        std::vector<int> stack;
        detail::all_simple_paths(topo, demands[i].src, demands[i].dst, visited, stack, options[i]);
        if (options[i].empty()) return std::nullopt;
    }
    std::optional<double> best;
    std::vector<std::size_t> choice(demands.size(), 0);
    while (true) {
        std::map<int, double> load;
        double objective = 0.0;
        bool feasible = true;
        for (std::size_t i = 0; i < demands.size() && feasible; ++i) {
            for (int lid : options[i][choice[i]]) {
                load[lid] += demands[i].bandwidth;
                if (load[lid] > topo.link_by_id(lid).capacity + 1e-9) feasible = false;
            }
        }
        if (feasible) {
            for (std::size_t i = 0; i < demands.size(); ++i) {
                double c = 0.0;
                for (int lid : options[i][choice[i]]) c += topo.link_by_id(lid).current_cost;
                objective += c * demands[i].bandwidth;
            }
            if (!best || objective < *best) best = objective;
        }
        std::size_t k = 0;
        while (k < choice.size()) {
            if (++choice[k] < options[k].size()) break;
            choice[k] = 0;
            ++k;
        }
        if (k == choice.size()) break;
    }
    return best;
}

}  // namespace fqos
