#include "catch_amalgamated.hpp"

#include <fqos/balancer.hpp>
#include <fqos/rng.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace fqos;
using Catch::Approx;

// ============================================================================
// Helpers
// ============================================================================

static node_load mk_load(int id, double cpu, double net, double ram) {
    node_load l;
    l.server_id = id;
    l.util = {cpu, net, ram};
    return l;
}

static server_capacity mk_server(int id, double cpu, double net, double ram) {
    server_capacity s;
    s.server_id = id;
    s.capacity = {cpu, net, ram};
    return s;
}

static balancer_flow mk_flow(int id, int prio, double cpu, double net, double ram) {
    balancer_flow f;
    f.flow_id = id;
    f.qs_id = id % 3;
    f.priority = prio;
    f.demand = {cpu, net, ram};
    return f;
}

// Writes a small hand-valued lookup table: one finite utilization plane and
// one fully saturated plane, isotonic along every axis.
static calibration_table hand_table(double burst_cell_norm = 8.0) {
    auto path = std::filesystem::temp_directory_path() /
                ("fqos_balancer_table_" + std::to_string(static_cast<long>(burst_cell_norm)) + ".csv");
    std::ofstream f(path);
    f << "rho,H,sigma_var,buffer_norm,saturated\n";
    f << "0.5,0.5,0.5,2,0\n";
    f << "0.5,0.5,2,4,0\n";
    f << "0.5,0.8,0.5,6,0\n";
    f << "0.5,0.8,2," << burst_cell_norm << ",0\n";
    f << "1,0.5,0.5,2048,1\n";
    f << "1,0.5,2,2048,1\n";
    f << "1,0.8,0.5,2048,1\n";
    f << "1,0.8,2,2048,1\n";
    f.close();
    return calibration_table::load(path.string());
}

// Recomputes the utilization forecast of an assignment from scratch.
static std::vector<node_load> project_assignment(const std::vector<server_capacity>& servers,
                                                 const std::vector<resource_vector>& background,
                                                 const std::vector<flow_assignment>& assignments) {
    std::vector<node_load> loads;
    for (std::size_t si = 0; si < servers.size(); ++si) {
        resource_vector sum = background.empty() ? resource_vector{} : background[si];
        for (const auto& a : assignments) {
            if (a.server_id != servers[si].server_id) continue;
            sum.cpu += a.reserved.cpu;
            sum.net += a.reserved.net;
            sum.ram += a.reserved.ram;
        }
        node_load l;
        l.server_id = servers[si].server_id;
        l.util.cpu = sum.cpu / servers[si].capacity.cpu;
        l.util.net = sum.net / servers[si].capacity.net;
        l.util.ram = sum.ram / servers[si].capacity.ram;
        loads.push_back(l);
    }
    return loads;
}

// ============================================================================
// Imbalance metric
// ============================================================================

TEST_CASE("uniform utilization has zero imbalance", "[balancer][imbalance]") {
    auto rep = system_imbalance({mk_load(0, 0.5, 0.3, 0.7), mk_load(1, 0.5, 0.3, 0.7)});
    REQUIRE(rep.system_imbalance == 0.0);
    REQUIRE(rep.per_node_score.at(0) == 0.0);
    REQUIRE(rep.per_node_score.at(1) == 0.0);
}

TEST_CASE("imbalance matches the hand-computed dispersion", "[balancer][imbalance]") {
    // cpu: mean 0.6, population std 0.2 -> 1/3; net: mean 0.4, std 0.2 -> 1/2;
    // ram: identical -> 0.  Average over resources: (1/3 + 1/2)/3.
    auto rep = system_imbalance({mk_load(0, 0.8, 0.2, 0.5), mk_load(1, 0.4, 0.6, 0.5)}, 9);
    REQUIRE(rep.system_imbalance == Approx((1.0 / 3.0 + 0.5) / 3.0).epsilon(1e-12));
    REQUIRE(rep.window_index == 9);
    // Per-node score is the largest absolute deviation across resources.
    REQUIRE(rep.per_node_score.at(0) == Approx(0.2));
    REQUIRE(rep.per_node_score.at(1) == Approx(0.2));
}

TEST_CASE("near-idle systems use the mean floor", "[balancer][imbalance]") {
    // cpu: mean 0.01 is floored to 0.05 in the denominator: 0.01/0.05 = 0.2.
    auto rep = system_imbalance({mk_load(0, 0.02, 0.0, 0.0), mk_load(1, 0.0, 0.0, 0.0)});
    REQUIRE(rep.system_imbalance == Approx(0.2 / 3.0).epsilon(1e-12));
}

TEST_CASE("imbalance needs at least one node", "[balancer][imbalance][error]") {
    REQUIRE_THROWS_AS(system_imbalance({}), std::invalid_argument);
}

// ============================================================================
// Burst headroom factor
// ============================================================================

TEST_CASE("headroom factor against a hand-valued table", "[balancer][gain]") {
    auto table = hand_table();
    // Classical traffic is its own baseline.
    REQUIRE(fractal_gain(table, 0.5, 0.5, 0.5) == 1.0);
    // Finite cells give exact ratios of the hand values.
    REQUIRE(fractal_gain(table, 0.8, 0.5, 0.5) == Approx(3.0));
    REQUIRE(fractal_gain(table, 0.5, 2.0, 0.5) == Approx(2.0));
    REQUIRE(fractal_gain(table, 0.8, 2.0, 0.5) == Approx(4.0));
    // Below-baseline lookups clamp at the grid edge and stay at gain 1.
    REQUIRE(fractal_gain(table, 0.3, 0.1, 0.5) == 1.0);
    // A saturated lookup takes the full clamp.
    REQUIRE(fractal_gain(table, 0.5, 0.5, 1.0) == 4.0);
}

TEST_CASE("headroom factor is clamped to four", "[balancer][gain]") {
    auto table = hand_table(/*burst_cell_norm=*/40.0);  // raw ratio would be 20
    REQUIRE(fractal_gain(table, 0.8, 2.0, 0.5) == 4.0);
}

TEST_CASE("resource demand scales class vectors by intensity and headroom", "[balancer][gain]") {
    service_class cls;
    cls.qs_id = 0;
    cls.priority = 0;
    cls.tau_qs = 100.0;
    cls.l_qs = 0.01;
    cls.mu_qs = {1.0, 2.0, 4.0};
    fractal_signature sig;
    sig.intensity_lambda = 3.0;
    sig.hurst_H = 0.8;
    sig.sigma_var = 0.5;

    auto plain = resource_demand(sig, cls, nullptr);
    REQUIRE(plain.cpu == Approx(3.0));
    REQUIRE(plain.net == Approx(6.0));
    REQUIRE(plain.ram == Approx(12.0));

    auto table = hand_table();
    auto boosted = resource_demand(sig, cls, &table, 0.5);  // gain 3 at (0.8, 0.5)
    REQUIRE(boosted.cpu == Approx(9.0));
    REQUIRE(boosted.net == Approx(18.0));
    REQUIRE(boosted.ram == Approx(36.0));
}

// ============================================================================
// Assignment on hand-built instances
// ============================================================================

TEST_CASE("two identical flows split across two identical servers exactly", "[balancer]") {
    std::vector<server_capacity> servers = {mk_server(0, 10, 10, 10), mk_server(1, 10, 10, 10)};
    std::vector<balancer_flow> flows = {mk_flow(0, 0, 4, 4, 4), mk_flow(1, 0, 4, 4, 4)};
    auto out = assign_flows(flows, servers);
    REQUIRE(out.deferred_flows.empty());
    REQUIRE(out.assignments.size() == 2);
    REQUIRE(out.assignments[0].server_id != out.assignments[1].server_id);
    REQUIRE(out.forecast_imbalance == 0.0);
}

TEST_CASE("assignment validates its inputs", "[balancer][error]") {
    REQUIRE_THROWS_AS(assign_flows({mk_flow(0, 0, 1, 1, 1)}, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(assign_flows({mk_flow(0, 0, 1, 1, 1)},
                                   {mk_server(0, 4, 4, 4), mk_server(1, 4, 4, 4)},
                                   {resource_vector{1, 1, 1}}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(brute_force_min_imbalance({mk_flow(0, 0, 1, 1, 1)}, {}),
                      std::invalid_argument);
}

TEST_CASE("a flow no server can hold is deferred", "[balancer]") {
    auto out = assign_flows({mk_flow(7, 0, 3, 1, 1)}, {mk_server(0, 2, 2, 2)});
    REQUIRE(out.assignments.empty());
    REQUIRE(out.deferred_flows == std::vector<int>{7});
    REQUIRE(out.forecast_imbalance == 0.0);  // nothing placed, nothing skewed
}

TEST_CASE("ties go to the lowest server id", "[balancer]") {
    std::vector<server_capacity> servers = {mk_server(3, 10, 10, 10), mk_server(1, 10, 10, 10)};
    auto out = assign_flows({mk_flow(0, 0, 2, 2, 2)}, servers);
    REQUIRE(out.assignments.size() == 1);
    REQUIRE(out.assignments[0].server_id == 1);
}

TEST_CASE("background reservations steer placement", "[balancer]") {
    std::vector<server_capacity> servers = {mk_server(0, 10, 10, 10), mk_server(1, 10, 10, 10)};
    std::vector<resource_vector> background = {{6, 6, 6}, {0, 0, 0}};
    auto out = assign_flows({mk_flow(0, 0, 2, 2, 2)}, servers, background, 5);
    REQUIRE(out.assignments.size() == 1);
    REQUIRE(out.assignments[0].server_id == 1);  // evening out, not stacking
    REQUIRE(out.assignments[0].window_index == 5);
    // Forecast includes the background: server 0 at 0.6, server 1 at 0.2.
    REQUIRE(out.forecast[0].util.cpu == Approx(0.6));
    REQUIRE(out.forecast[1].util.cpu == Approx(0.2));
}

TEST_CASE("order repair places a critical pair the plain pass would split", "[balancer]") {
    // The critical small flow fits anywhere; the big flow only fits on the
    // large server.  A plain pass parks the small flow there first (the
    // large server gives the lowest dispersion) and must defer the big one;
    // the repaired order places both.
    std::vector<server_capacity> servers = {mk_server(0, 10, 10, 10), mk_server(1, 4, 4, 4)};
    std::vector<balancer_flow> flows = {mk_flow(0, 0, 4, 4, 4), mk_flow(1, 1, 8, 8, 8)};
    auto out = assign_flows(flows, servers);
    REQUIRE(out.deferred_flows.empty());
    REQUIRE(out.assignments.size() == 2);
    REQUIRE(out.assignments[0].server_id == 1);
    REQUIRE(out.assignments[1].server_id == 0);
    auto opt = brute_force_min_imbalance(flows, servers);
    REQUIRE(opt.has_value());
    REQUIRE(out.forecast_imbalance == Approx(*opt).margin(1e-12));
}

TEST_CASE("assignments carry class, demand, and window", "[balancer]") {
    auto flow = mk_flow(4, 1, 2, 3, 1);
    auto out = assign_flows({flow}, {mk_server(0, 8, 8, 8)}, {}, 11);
    REQUIRE(out.assignments.size() == 1);
    const auto& a = out.assignments[0];
    REQUIRE(a.flow_id == 4);
    REQUIRE(a.qs_id == flow.qs_id);
    REQUIRE(a.server_id == 0);
    REQUIRE(a.window_index == 11);
    REQUIRE(a.reserved.cpu == 2.0);
    REQUIRE(a.reserved.net == 3.0);
    REQUIRE(a.reserved.ram == 1.0);
}

// ============================================================================
// Randomized oracle family
// ============================================================================

TEST_CASE("greedy assignment tracks the enumeration oracle on random instances",
          "[balancer][oracle]") {
    const std::uint64_t master = fnv1a64("acceptance-balancer-instances");
    int feasible = 0, infeasible = 0;
    for (int i = 0; i < 1200; ++i) {
        INFO("instance " << i);
        rng_stream g(named_stream(master, "balancer-" + std::to_string(i)));
        const int s = 1 + static_cast<int>(g.below(3));
        const int k = 1 + static_cast<int>(g.below(6));
        // Draw each field as its own statement: argument evaluation order is
        // unspecified, and the instance family must not depend on it.
        std::vector<server_capacity> servers;
        for (int j = 0; j < s; ++j) {
            server_capacity c;
            c.server_id = j;
            c.capacity.cpu = static_cast<double>(4 + g.below(12));
            c.capacity.net = static_cast<double>(4 + g.below(12));
            c.capacity.ram = static_cast<double>(4 + g.below(12));
            servers.push_back(c);
        }
        std::vector<balancer_flow> flows;
        for (int j = 0; j < k; ++j) {
            balancer_flow f;
            f.flow_id = j;
            f.qs_id = j % 3;
            f.priority = static_cast<int>(g.below(3));
            f.demand.cpu = static_cast<double>(1 + g.below(6));
            f.demand.net = static_cast<double>(1 + g.below(6));
            f.demand.ram = static_cast<double>(1 + g.below(6));
            flows.push_back(f);
        }
        std::vector<resource_vector> background;
        if (i % 4 == 0) {
            for (int j = 0; j < s; ++j) {
                resource_vector b;
                b.cpu = static_cast<double>(g.below(3));
                b.net = static_cast<double>(g.below(3));
                b.ram = static_cast<double>(g.below(3));
                background.push_back(b);
            }
        }

        auto opt = brute_force_min_imbalance(flows, servers, background);
        auto out = assign_flows(flows, servers, background);

        // Every flow lands exactly once: assigned or deferred.
        REQUIRE(out.assignments.size() + out.deferred_flows.size() == flows.size());
        for (const auto& f : flows) {
            int hits = 0;
            for (const auto& a : out.assignments)
                if (a.flow_id == f.flow_id) ++hits;
            for (int d : out.deferred_flows)
                if (d == f.flow_id) ++hits;
            REQUIRE(hits == 1);
        }

        // The forecast is exactly the projection of what was placed, and
        // capacities are respected.
        auto loads = project_assignment(servers, background, out.assignments);
        for (std::size_t si = 0; si < servers.size(); ++si) {
            REQUIRE(out.forecast[si].server_id == loads[si].server_id);
            REQUIRE(out.forecast[si].util.cpu == Approx(loads[si].util.cpu).margin(1e-12));
            REQUIRE(out.forecast[si].util.net == Approx(loads[si].util.net).margin(1e-12));
            REQUIRE(out.forecast[si].util.ram == Approx(loads[si].util.ram).margin(1e-12));
            REQUIRE(loads[si].util.cpu * servers[si].capacity.cpu <=
                    servers[si].capacity.cpu + 1e-9);
            REQUIRE(loads[si].util.net * servers[si].capacity.net <=
                    servers[si].capacity.net + 1e-9);
            REQUIRE(loads[si].util.ram * servers[si].capacity.ram <=
                    servers[si].capacity.ram + 1e-9);
        }
        REQUIRE(out.forecast_imbalance == Approx(system_imbalance(loads).system_imbalance).margin(1e-12));

        if (opt) {
            ++feasible;
            REQUIRE(out.deferred_flows.empty());
            REQUIRE(out.forecast_imbalance <= 1.15 * *opt + 1e-9);
        } else {
            ++infeasible;
            REQUIRE_FALSE(out.deferred_flows.empty());
        }
    }
    REQUIRE(feasible > 400);
    REQUIRE(infeasible > 200);
}
