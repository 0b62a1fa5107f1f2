#pragma once

// Dynamic load balancing: per-window signature-driven resource demands,
// imbalance scoring, and greedy flow-to-server assignment.
//
// Imbalance is a coefficient-of-variation-style dispersion: for each
// resource, the population standard deviation of utilization across servers
// divided by max(mean, 0.05), averaged over resources.  Assignment is a
// greedy pass (flows ordered by class priority then descending demand, each
// placed on the feasible server minimizing post-assignment imbalance, ties
// to the lowest server id) hardened by deterministic order restarts,
// relocation rescue of deferred flows, and relocation/swap local search; see
// assign_flows.  A brute-force enumerator over all placements is the oracle
// for small instances.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "capacity.hpp"
#include "estimators.hpp"
#include "queue_node.hpp"

namespace fqos {

struct node_load {
    int server_id = -1;
    resource_vector util;  // each component in [0, 1]
};

struct imbalance_report {
    std::map<int, double> per_node_score;  // max over resources of |u - mean|
    double system_imbalance = 0.0;
    long window_index = 0;
};

inline imbalance_report system_imbalance(const std::vector<node_load>& loads, long window_index = 0) {
    if (loads.empty()) throw std::invalid_argument("system_imbalance: need >= 1 node");
    imbalance_report rep;
    rep.window_index = window_index;
    const std::size_t n = loads.size();
    auto component = [](const resource_vector& v, int r) {
        return r == 0 ? v.cpu : r == 1 ? v.net : v.ram;
    };
    double total = 0.0;
    std::vector<double> means(3, 0.0);
    for (int r = 0; r < 3; ++r) {
        double mean = 0.0;
        for (const auto& l : loads) mean += component(l.util, r);
        mean /= static_cast<double>(n);
        means[static_cast<std::size_t>(r)] = mean;
        double var = 0.0;
        for (const auto& l : loads) {
            double d = component(l.util, r) - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        total += std::sqrt(var) / std::max(mean, 0.05);
    }
    rep.system_imbalance = total / 3.0;
    for (const auto& l : loads) {
        double score = 0.0;
        for (int r = 0; r < 3; ++r)
            score = std::max(score, std::abs(component(l.util, r) - means[static_cast<std::size_t>(r)]));
        rep.per_node_score[l.server_id] = score;
    }
    return rep;
}

// Burst headroom factor from the calibration table: how much more buffer the
// observed (H, sigma_var) needs than classical traffic at the reference
// utilization, clamped to [1, 4].  Saturated lookups take the clamp maximum.
inline double fractal_gain(const calibration_table& table, double hurst, double sigma_var,
                           double rho_ref = 0.7) {
    auto base = table.interpolate_norm(rho_ref, 0.5, 0.5);
    auto cur = table.interpolate_norm(rho_ref, hurst, sigma_var);
    if (cur.saturated) return 4.0;
    if (base.saturated || !(base.value > 0.0)) return 1.0;
    return std::clamp(cur.value / base.value, 1.0, 4.0);
}

// Per-window resource demand of one flow: class base vector scaled by
// intensity and the burst headroom factor.
inline resource_vector resource_demand(const fractal_signature& sig, const service_class& cls,
                                       const calibration_table* table, double rho_ref = 0.7) {
    double g = 1.0;
    if (table != nullptr) g = fractal_gain(*table, sig.hurst_H, sig.sigma_var, rho_ref);
    resource_vector d;
    d.cpu = cls.mu_qs.cpu * sig.intensity_lambda * g;
    d.net = cls.mu_qs.net * sig.intensity_lambda * g;
    d.ram = cls.mu_qs.ram * sig.intensity_lambda * g;
    return d;
}

struct balancer_flow {
    int flow_id = -1;
    int qs_id = 0;
    int priority = 0;
    resource_vector demand;
};

struct flow_assignment {
    int flow_id = -1;
    int qs_id = 0;
    int server_id = -1;
    resource_vector reserved;
    long window_index = 0;
};

struct server_capacity {
    int server_id = -1;
    resource_vector capacity;
};

struct assignment_outcome {
    std::vector<flow_assignment> assignments;   // placed flows only, sorted by flow id
    std::vector<int> deferred_flows;            // no feasible server this window
    std::vector<node_load> forecast;            // projected utilization after placement
    double forecast_imbalance = 0.0;
};

namespace detail {

inline double util_component(const resource_vector& reserved, const resource_vector& cap, int r) {
    double res = r == 0 ? reserved.cpu : r == 1 ? reserved.net : reserved.ram;
    double c = r == 0 ? cap.cpu : r == 1 ? cap.net : cap.ram;
    return c > 0.0 ? res / c : 0.0;
}

inline std::vector<node_load> project(const std::vector<server_capacity>& servers,
                                      const std::vector<resource_vector>& reserved) {
    std::vector<node_load> loads(servers.size());
    for (std::size_t i = 0; i < servers.size(); ++i) {
        loads[i].server_id = servers[i].server_id;
        loads[i].util.cpu = util_component(reserved[i], servers[i].capacity, 0);
        loads[i].util.net = util_component(reserved[i], servers[i].capacity, 1);
        loads[i].util.ram = util_component(reserved[i], servers[i].capacity, 2);
    }
    return loads;
}

inline bool fits(const resource_vector& reserved, const resource_vector& demand,
                 const resource_vector& cap) {
    const double eps = 1e-9;
    return reserved.cpu + demand.cpu <= cap.cpu + eps && reserved.net + demand.net <= cap.net + eps &&
           reserved.ram + demand.ram <= cap.ram + eps;
}

inline void add(resource_vector& a, const resource_vector& b) {
    a.cpu += b.cpu;
    a.net += b.net;
    a.ram += b.ram;
}

}  // namespace detail

namespace detail {

inline const balancer_flow& flow_by_id(const std::vector<balancer_flow>& flows, int flow_id) {
    for (const auto& f : flows)
        if (f.flow_id == flow_id) return f;
    throw std::logic_error("assign_flows: unknown flow id");
}

inline std::size_t server_index_of(const std::vector<server_capacity>& servers, int server_id) {
    for (std::size_t si = 0; si < servers.size(); ++si)
        if (servers[si].server_id == server_id) return si;
    throw std::logic_error("assign_flows: assignment on unknown server");
}

inline std::vector<resource_vector> reserved_for(const std::vector<server_capacity>& servers,
                                                 const std::vector<resource_vector>& background,
                                                 const std::vector<flow_assignment>& assignments) {
    std::vector<resource_vector> reserved =
        background.empty() ? std::vector<resource_vector>(servers.size()) : background;
    for (const auto& a : assignments)
        add(reserved[server_index_of(servers, a.server_id)], a.reserved);
    return reserved;
}

inline bool within_capacity(const std::vector<server_capacity>& servers,
                            const std::vector<resource_vector>& reserved) {
    for (std::size_t si = 0; si < servers.size(); ++si) {
        const auto& c = servers[si].capacity;
        if (reserved[si].cpu > c.cpu + 1e-9 || reserved[si].net > c.net + 1e-9 ||
            reserved[si].ram > c.ram + 1e-9)
            return false;
    }
    return true;
}

inline double imbalance_score(const std::vector<server_capacity>& servers,
                              const std::vector<resource_vector>& reserved) {
    return system_imbalance(project(servers, reserved)).system_imbalance;
}

// One greedy placement pass over `order` (indices into `flows`): each flow
// goes to the feasible server with the lowest post-placement imbalance, ties
// to the lowest server id.  `first_deferred` reports the first flow index
// that found no feasible server (flows.size() when every flow landed).
inline assignment_outcome greedy_pass(const std::vector<balancer_flow>& flows,
                                      const std::vector<server_capacity>& servers,
                                      const std::vector<resource_vector>& background,
                                      long window_index, const std::vector<std::size_t>& order,
                                      std::size_t& first_deferred) {
    std::vector<resource_vector> reserved =
        background.empty() ? std::vector<resource_vector>(servers.size()) : background;
    first_deferred = flows.size();
    assignment_outcome out;
    for (std::size_t oi : order) {
        const auto& f = flows[oi];
        int best_server = -1;
        std::size_t best_idx = 0;
        double best_score = std::numeric_limits<double>::infinity();
        for (std::size_t si = 0; si < servers.size(); ++si) {
            if (!fits(reserved[si], f.demand, servers[si].capacity)) continue;
            std::vector<resource_vector> trial = reserved;
            add(trial[si], f.demand);
            double score = imbalance_score(servers, trial);
            if (score < best_score - 1e-12 ||
                (std::abs(score - best_score) <= 1e-12 &&
                 (best_server == -1 || servers[si].server_id < best_server))) {
                best_score = score;
                best_server = servers[si].server_id;
                best_idx = si;
            }
        }
        if (best_server == -1) {
            if (first_deferred == flows.size()) first_deferred = oi;
            out.deferred_flows.push_back(f.flow_id);
            continue;
        }
        add(reserved[best_idx], f.demand);
        flow_assignment fa;
        fa.flow_id = f.flow_id;
        fa.qs_id = f.qs_id;
        fa.server_id = best_server;
        fa.reserved = f.demand;
        fa.window_index = window_index;
        out.assignments.push_back(fa);
    }
    out.forecast = project(servers, reserved);
    out.forecast_imbalance = system_imbalance(out.forecast).system_imbalance;
    return out;
}

// Greedy with bounded order repair: whenever a pass defers a flow, that flow
// is promoted to the front and the pass restarts (each flow promoted at most
// once, so <= flows+1 passes).  The pass with the fewest deferrals wins;
// ties keep the earliest attempt, so instances the plain pass already solves
// are untouched.
inline assignment_outcome construct_with_restarts(const std::vector<balancer_flow>& flows,
                                                  const std::vector<server_capacity>& servers,
                                                  const std::vector<resource_vector>& background,
                                                  long window_index,
                                                  const std::vector<std::size_t>& base) {
    std::vector<std::size_t> promoted;  // most recently deferred flow first
    assignment_outcome best;
    bool have_best = false;
    for (std::size_t tries = 0; tries <= flows.size(); ++tries) {
        std::vector<std::size_t> order = promoted;
        for (std::size_t i : base)
            if (std::find(promoted.begin(), promoted.end(), i) == promoted.end())
                order.push_back(i);
        std::size_t first_deferred = flows.size();
        assignment_outcome out = greedy_pass(flows, servers, background, window_index, order,
                                             first_deferred);
        if (!have_best || out.deferred_flows.size() < best.deferred_flows.size()) {
            best = std::move(out);
            have_best = true;
        }
        if (best.deferred_flows.empty() || first_deferred == flows.size() ||
            std::find(promoted.begin(), promoted.end(), first_deferred) != promoted.end())
            break;
        promoted.insert(promoted.begin(), first_deferred);
    }
    return best;
}

// A deferred flow may become placeable if one or two already-assigned flows
// relocate first; try every (relocation, placement) combination and adopt
// the feasible one with the lowest resulting imbalance, until no deferred
// flow can be rescued.  Deferred flows are rescued critical-first.
inline void repair_deferred(const std::vector<balancer_flow>& flows,
                            const std::vector<server_capacity>& servers,
                            const std::vector<resource_vector>& background, long window_index,
                            assignment_outcome& best) {
    bool rescued = true;
    while (rescued && !best.deferred_flows.empty()) {
        rescued = false;
        std::vector<int> todo = best.deferred_flows;
        std::sort(todo.begin(), todo.end(), [&](int a, int b) {
            const auto& fa = flow_by_id(flows, a);
            const auto& fb = flow_by_id(flows, b);
            if (fa.priority != fb.priority) return fa.priority < fb.priority;
            return a < b;
        });
        for (int fid : todo) {
            const balancer_flow& f = flow_by_id(flows, fid);
            double best_score = std::numeric_limits<double>::infinity();
            std::vector<flow_assignment> best_asg;
            auto consider = [&](std::vector<flow_assignment> cand, std::size_t target) {
                flow_assignment fa;
                fa.flow_id = f.flow_id;
                fa.qs_id = f.qs_id;
                fa.server_id = servers[target].server_id;
                fa.reserved = f.demand;
                fa.window_index = window_index;
                cand.push_back(fa);
                auto reserved = reserved_for(servers, background, cand);
                if (!within_capacity(servers, reserved)) return;
                double score = imbalance_score(servers, reserved);
                if (score < best_score - 1e-12) {
                    best_score = score;
                    best_asg = std::move(cand);
                }
            };
            for (std::size_t si = 0; si < servers.size(); ++si)
                consider(best.assignments, si);  // room may have appeared
            for (std::size_t ai = 0; ai < best.assignments.size(); ++ai) {
                std::size_t from = server_index_of(servers, best.assignments[ai].server_id);
                for (std::size_t ti = 0; ti < servers.size(); ++ti) {
                    if (ti == from) continue;
                    std::vector<flow_assignment> cand = best.assignments;
                    cand[ai].server_id = servers[ti].server_id;
                    for (std::size_t si = 0; si < servers.size(); ++si) consider(cand, si);
                }
            }
            for (std::size_t ai = 0; ai + 1 < best.assignments.size(); ++ai) {
                for (std::size_t bi = ai + 1; bi < best.assignments.size(); ++bi) {
                    for (std::size_t ti = 0; ti < servers.size(); ++ti) {
                        for (std::size_t tj = 0; tj < servers.size(); ++tj) {
                            if (servers[ti].server_id == best.assignments[ai].server_id &&
                                servers[tj].server_id == best.assignments[bi].server_id)
                                continue;
                            std::vector<flow_assignment> cand = best.assignments;
                            cand[ai].server_id = servers[ti].server_id;
                            cand[bi].server_id = servers[tj].server_id;
                            for (std::size_t si = 0; si < servers.size(); ++si) consider(cand, si);
                        }
                    }
                }
            }
            if (!best_asg.empty()) {
                best.assignments = std::move(best_asg);
                best.deferred_flows.erase(
                    std::find(best.deferred_flows.begin(), best.deferred_flows.end(), fid));
                rescued = true;
                break;
            }
        }
    }
}

// Variable-neighborhood descent: steepest-descent over moves that relocate
// one, two, or three flows at once, escalating to the larger group size only
// when every smaller move is exhausted, until no move improves.  Greedy
// placement is myopic — an early flow parked on the emptiest server can lock
// the best final layout out — and tight capacity coupling can require
// several flows to trade places in one step.  Group size is capped at 3 to
// stay polynomial (O(k^3 s^3) candidates per round).
inline void polish_assignments(const std::vector<server_capacity>& servers,
                               const std::vector<resource_vector>& background,
                               assignment_outcome& best) {
    const std::size_t k = best.assignments.size();
    const std::size_t max_group = std::min<std::size_t>(3, k);
    auto combinations = [&](std::size_t r) {
        std::vector<std::vector<std::size_t>> all;
        std::vector<std::size_t> cur;
        auto rec = [&](auto&& self, std::size_t start) -> void {
            if (cur.size() == r) {
                all.push_back(cur);
                return;
            }
            for (std::size_t i = start; i + (r - cur.size()) <= k; ++i) {
                cur.push_back(i);
                self(self, i + 1);
                cur.pop_back();
            }
        };
        rec(rec, 0);
        return all;
    };
    for (int iter = 0; iter < 256; ++iter) {
        double cur = imbalance_score(servers, reserved_for(servers, background, best.assignments));
        double best_delta = -1e-12;
        std::vector<flow_assignment> best_asg;
        auto consider = [&](std::vector<flow_assignment>&& cand) {
            auto reserved = reserved_for(servers, background, cand);
            if (!within_capacity(servers, reserved)) return;
            double delta = imbalance_score(servers, reserved) - cur;
            if (delta < best_delta) {
                best_delta = delta;
                best_asg = std::move(cand);
            }
        };
        for (std::size_t r = 1; r <= max_group && best_asg.empty(); ++r) {
            for (const auto& comb : combinations(r)) {
                std::vector<std::size_t> tgt(r, 0);
                while (true) {
                    bool identity = true;
                    for (std::size_t i = 0; i < r && identity; ++i)
                        identity = servers[tgt[i]].server_id == best.assignments[comb[i]].server_id;
                    if (!identity) {
                        std::vector<flow_assignment> cand = best.assignments;
                        for (std::size_t i = 0; i < r; ++i)
                            cand[comb[i]].server_id = servers[tgt[i]].server_id;
                        consider(std::move(cand));
                    }
                    std::size_t p = 0;
                    while (p < r && ++tgt[p] == servers.size()) tgt[p++] = 0;
                    if (p == r) break;
                }
            }
        }
        if (best_asg.empty()) break;
        best.assignments = std::move(best_asg);
    }
}

}  // namespace detail

// Flow-to-server assignment minimizing forecast system imbalance.  The core
// pass is greedy — flows by class priority then descending total demand,
// each placed on the feasible server with the lowest post-placement
// imbalance — hardened in three inexpensive deterministic ways: deferred
// flows promote to the front of the order and the pass restarts; a
// still-deferred flow can force one placed flow to relocate; and the final
// layout is polished by relocation/swap local search.  The whole pipeline
// runs from a handful of deterministic start orders and the best final
// layout wins (fewest deferrals, then lowest imbalance, then earliest
// order).  `background` holds per-server reservations that are not up for
// (re)assignment this window, index-aligned with `servers`.
inline assignment_outcome assign_flows(const std::vector<balancer_flow>& flows,
                                       const std::vector<server_capacity>& servers,
                                       const std::vector<resource_vector>& background = {},
                                       long window_index = 0) {
    if (servers.empty()) throw std::invalid_argument("assign_flows: need >= 1 server");
    if (!background.empty() && background.size() != servers.size())
        throw std::invalid_argument("assign_flows: background size mismatch");

    auto total = [](const resource_vector& v) { return v.cpu + v.net + v.ram; };
    auto order_by = [&](auto&& less) {
        std::vector<std::size_t> o(flows.size());
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = i;
        std::stable_sort(o.begin(), o.end(), less);
        return o;
    };
    auto by_id = [&](std::size_t a, std::size_t b) { return flows[a].flow_id < flows[b].flow_id; };
    std::vector<std::vector<std::size_t>> starts;
    starts.push_back(order_by([&](std::size_t a, std::size_t b) {  // canonical order first
        if (flows[a].priority != flows[b].priority) return flows[a].priority < flows[b].priority;
        double ta = total(flows[a].demand), tb = total(flows[b].demand);
        if (ta != tb) return ta > tb;
        return by_id(a, b);
    }));
    starts.push_back(order_by([&](std::size_t a, std::size_t b) {
        double ta = total(flows[a].demand), tb = total(flows[b].demand);
        if (ta != tb) return ta > tb;
        return by_id(a, b);
    }));
    starts.push_back(order_by([&](std::size_t a, std::size_t b) {
        double ta = total(flows[a].demand), tb = total(flows[b].demand);
        if (ta != tb) return ta < tb;
        return by_id(a, b);
    }));
    starts.push_back(order_by([&](std::size_t a, std::size_t b) {
        if (flows[a].demand.cpu != flows[b].demand.cpu) return flows[a].demand.cpu > flows[b].demand.cpu;
        return by_id(a, b);
    }));
    starts.push_back(order_by([&](std::size_t a, std::size_t b) {
        if (flows[a].demand.net != flows[b].demand.net) return flows[a].demand.net > flows[b].demand.net;
        return by_id(a, b);
    }));
    starts.push_back(order_by([&](std::size_t a, std::size_t b) {
        if (flows[a].demand.ram != flows[b].demand.ram) return flows[a].demand.ram > flows[b].demand.ram;
        return by_id(a, b);
    }));

    assignment_outcome best;
    bool have_best = false;
    for (const auto& start : starts) {
        assignment_outcome out =
            detail::construct_with_restarts(flows, servers, background, window_index, start);
        detail::repair_deferred(flows, servers, background, window_index, out);
        detail::polish_assignments(servers, background, out);
        auto reserved = detail::reserved_for(servers, background, out.assignments);
        out.forecast = detail::project(servers, reserved);
        out.forecast_imbalance = detail::imbalance_score(servers, reserved);
        if (!have_best || out.deferred_flows.size() < best.deferred_flows.size() ||
            (out.deferred_flows.size() == best.deferred_flows.size() &&
             out.forecast_imbalance < best.forecast_imbalance - 1e-12)) {
            best = std::move(out);
            have_best = true;
        }
    }

    // Canonical output order regardless of which start order won.
    std::sort(best.assignments.begin(), best.assignments.end(),
              [](const flow_assignment& a, const flow_assignment& b) { return a.flow_id < b.flow_id; });
    std::sort(best.deferred_flows.begin(), best.deferred_flows.end());
    return best;
}

// Exhaustive minimum post-assignment imbalance over all feasible complete
// placements (servers^flows combinations); nullopt when none is feasible.
// Intended for <= 6 flows and <= 3 servers.
inline std::optional<double> brute_force_min_imbalance(const std::vector<balancer_flow>& flows,
                                                       const std::vector<server_capacity>& servers,
                                                       const std::vector<resource_vector>& background = {}) {
    if (servers.empty()) throw std::invalid_argument("brute_force_min_imbalance: need >= 1 server");
    std::vector<resource_vector> base(servers.size());
    if (!background.empty()) base = background;
    std::vector<std::size_t> choice(flows.size(), 0);
    std::optional<double> best;
    while (true) {
        std::vector<resource_vector> reserved = base;
        bool feasible = true;
        for (std::size_t i = 0; i < flows.size() && feasible; ++i) {
            std::size_t si = choice[i];
            if (!detail::fits(reserved[si], flows[i].demand, servers[si].capacity))
                feasible = false;
            else
                detail::add(reserved[si], flows[i].demand);
        }
        if (feasible) {
            double score = system_imbalance(detail::project(servers, reserved)).system_imbalance;
            if (!best || score < *best) best = score;
        }
        std::size_t k = 0;
        while (k < choice.size()) {
            if (++choice[k] < servers.size()) break;
            choice[k] = 0;
            ++k;
        }
        if (k == choice.size() || flows.empty()) break;
    }
    return best;
}

}  // namespace fqos
