#pragma once

// Scenario orchestration: wire generators, queueing nodes, and the three
// control methods (adaptive buffering/capacity, fractal-cost routing,
// dynamic load balancing) into a deterministic windowed simulation, compute
// the comparison metrics (utilization, loss %, jitter, imbalance), and run
// the four-way method comparison.
//
// Simulation model (one balancer in front of a server pool):
//   - Each demand is a persistent flow entering at the balancer.  Its
//     per-slot work is a composed multifractal trace; packets are unit-size
//     Poisson counts with the trace value as the slot's rate, drawn from a
//     per-flow named stream (so method toggles never perturb arrivals).
//   - The balancer has one port per attached trunk link; the port owns a
//     slice of the shared buffer/storage pool and drains at the link
//     capacity.  A packet joins the port of its flow's current path, so path
//     choice determines egress contention.  All admission losses happen
//     here.
//   - Served packets reach their server after (path length * hop latency)
//     slots, wait in the server's queue, and are served at the server's CPU
//     rate.  End-to-end delay = server service slot - balancer arrival slot.
//   - Window boundaries drive: metrics snapshots, the capacity controller,
//     the balancer's assignment step, and routing cost announcements, in
//     that order (deterministic event sequence numbers).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "balancer.hpp"
#include "capacity.hpp"
#include "des.hpp"
#include "estimators.hpp"
#include "generator.hpp"
#include "queue_node.hpp"
#include "routing.hpp"
#include "trace.hpp"

namespace fqos {

// Delay variation: mean absolute difference of consecutive per-packet delays,
// the usual interarrival-jitter reading for a packet stream.
inline std::optional<double> compute_jitter(const std::vector<double>& delays) {
    if (delays.size() < 2) return std::nullopt;
    double s = 0.0;
    for (std::size_t i = 1; i < delays.size(); ++i) s += std::abs(delays[i] - delays[i - 1]);
    return s / static_cast<double>(delays.size() - 1);
}

struct method_toggles {
    bool capacity_control = false;
    bool fractal_routing = false;
    bool load_balancing = false;

    std::string label() const {
        if (capacity_control && fractal_routing && load_balancing) return "all_three";
        std::string s;
        if (capacity_control) s += "capacity_control";
        if (fractal_routing) s += (s.empty() ? "" : "+") + std::string("fractal_routing");
        if (load_balancing) s += (s.empty() ? "" : "+") + std::string("load_balancing");
        return s.empty() ? "none" : s;
    }
};

struct class_config {
    service_class cls;
    generator_spec gen;  // length/seed/intensity filled per flow at run time
};

struct node_config {
    std::string name;
    bool is_server = false;
    resource_vector capacity;   // servers only
    double service = 0.0;       // work-units/slot, defaults to capacity.cpu
    double buffer = 4096.0;     // server queue bound
};

struct scenario_topology {
    std::vector<node_config> nodes;
    topology graph;  // node ids index into `nodes`
    std::vector<traffic_demand> demands;  // dst = static destination server
    int balancer_node = -1;

    int node_id(const std::string& name) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].name == name) return static_cast<int>(i);
        throw std::invalid_argument("topology: unknown node name: " + name);
    }
};

struct balancer_node_config {
    double buffer = -1.0;  // < 0: derive the classical static value from the table
    double buffer_ceiling = std::numeric_limits<double>::infinity();
    double storage = 0.0;
    double capacity_ceiling = std::numeric_limits<double>::infinity();
};

struct scenario_config {
    std::string name = "scenario";
    std::string topology_path;
    std::string calibration_table_path;
    std::size_t run_slots = 16384;
    std::size_t window = 1024;
    std::size_t announcement_interval = 1024;
    std::size_t warmup_windows = 2;
    std::vector<std::uint64_t> seeds{1};
    method_toggles methods;
    double c0 = 4.0;
    double p_eject = 1.0;
    double loss_target = 0.01;
    long hop_latency = 2;
    double slot_duration_ms = 1.0;
    std::vector<class_config> classes;
    balancer_node_config balancer_node;

    const class_config& class_by_id(int qs_id) const {
        for (const auto& c : classes)
            if (c.cls.qs_id == qs_id) return c;
        throw std::invalid_argument("scenario: unknown class id");
    }

    void validate() const {
        if (run_slots < 4 * window)
            throw std::invalid_argument("scenario.run_slots: run length must be >= 4 windows");
        if (window < 512) throw std::invalid_argument("scenario.window: must be >= 512 slots");
        if (announcement_interval == 0)
            throw std::invalid_argument("scenario.announcement_interval: must be > 0");
        if (seeds.empty()) throw std::invalid_argument("scenario.seeds: must be non-empty");
        if (classes.empty()) throw std::invalid_argument("scenario.classes: must be non-empty");
        if (!(c0 > 0.0)) throw std::invalid_argument("scenario.c0: must be > 0");
        if (!(p_eject >= 0.0 && p_eject <= 1.0))
            throw std::invalid_argument("scenario.p_eject: must be in [0,1]");
        if (hop_latency < 0) throw std::invalid_argument("scenario.hop_latency: must be >= 0");
        for (std::size_t i = 0; i < classes.size(); ++i) {
            try {
                classes[i].cls.validate();
            } catch (const std::exception& e) {
                throw std::invalid_argument("scenario.classes[" + std::to_string(i) + "]: " + e.what());
            }
        }
    }
};

// ---------------------------------------------------------------------------
// JSON loading with field-path error messages.

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const std::string& key,
                                           const std::string& path) {
    if (!j.contains(key))
        throw std::invalid_argument(path + "." + key + ": required field missing");
    return j.at(key);
}

inline double require_number(const nlohmann::json& j, const std::string& key, const std::string& path) {
    const auto& v = require_field(j, key, path);
    if (!v.is_number()) throw std::invalid_argument(path + "." + key + ": must be a number");
    return v.get<double>();
}

inline std::string require_string(const nlohmann::json& j, const std::string& key, const std::string& path) {
    const auto& v = require_field(j, key, path);
    if (!v.is_string()) throw std::invalid_argument(path + "." + key + ": must be a string");
    return v.get<std::string>();
}

}  // namespace detail

inline scenario_topology load_topology_json(const nlohmann::json& j) {
    scenario_topology topo;
    const auto& nodes = detail::require_field(j, "nodes", "topology");
    if (!nodes.is_array() || nodes.empty())
        throw std::invalid_argument("topology.nodes: must be a non-empty array");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string path = "topology.nodes[" + std::to_string(i) + "]";
        node_config n;
        n.name = detail::require_string(nodes[i], "name", path);
        std::string kind = detail::require_string(nodes[i], "kind", path);
        if (kind == "server") {
            n.is_server = true;
            const auto& cap = detail::require_field(nodes[i], "capacity", path);
            n.capacity.cpu = detail::require_number(cap, "cpu", path + ".capacity");
            n.capacity.net = detail::require_number(cap, "net", path + ".capacity");
            n.capacity.ram = detail::require_number(cap, "ram", path + ".capacity");
            n.capacity.validate();
            n.service = nodes[i].value("service", n.capacity.cpu);
            n.buffer = nodes[i].value("buffer", 4096.0);
        } else if (kind != "balancer" && kind != "router") {
            throw std::invalid_argument(path + ".kind: must be balancer, server, or router");
        }
        if (kind == "balancer") {
            if (topo.balancer_node >= 0)
                throw std::invalid_argument(path + ".kind: only one balancer node is supported");
            topo.balancer_node = static_cast<int>(i);
        }
        topo.nodes.push_back(n);
    }
    if (topo.balancer_node < 0)
        throw std::invalid_argument("topology.nodes: exactly one node of kind 'balancer' is required");
    topo.graph.node_count = static_cast<int>(topo.nodes.size());
    for (const auto& n : topo.nodes) topo.graph.node_names.push_back(n.name);

    const auto& links = detail::require_field(j, "links", "topology");
    if (!links.is_array() || links.empty())
        throw std::invalid_argument("topology.links: must be a non-empty array");
    std::set<int> link_ids;
    for (std::size_t i = 0; i < links.size(); ++i) {
        const std::string path = "topology.links[" + std::to_string(i) + "]";
        link l;
        l.link_id = static_cast<int>(detail::require_number(links[i], "id", path));
        if (!link_ids.insert(l.link_id).second)
            throw std::invalid_argument(path + ".id: duplicate link id");
        l.node_a = topo.node_id(detail::require_string(links[i], "a", path));
        l.node_b = topo.node_id(detail::require_string(links[i], "b", path));
        l.base_cost = detail::require_number(links[i], "base_cost", path);
        l.current_cost = l.base_cost;
        l.capacity = detail::require_number(links[i], "capacity", path);
        l.channels = static_cast<int>(links[i].value("channels", 1.0));
        topo.graph.links.push_back(l);
    }
    const auto& demands = detail::require_field(j, "demands", "topology");
    if (!demands.is_array() || demands.empty())
        throw std::invalid_argument("topology.demands: must be a non-empty array");
    std::set<int> flow_ids;
    for (std::size_t i = 0; i < demands.size(); ++i) {
        const std::string path = "topology.demands[" + std::to_string(i) + "]";
        traffic_demand d;
        d.flow_id = static_cast<int>(detail::require_number(demands[i], "flow", path));
        if (!flow_ids.insert(d.flow_id).second)
            throw std::invalid_argument(path + ".flow: duplicate flow id");
        d.priority = static_cast<int>(detail::require_number(demands[i], "class", path));
        d.src = topo.node_id(detail::require_string(demands[i], "src", path));
        d.dst = topo.node_id(detail::require_string(demands[i], "dst", path));
        d.bandwidth = detail::require_number(demands[i], "bandwidth", path);
        if (!(d.bandwidth > 0.0)) throw std::invalid_argument(path + ".bandwidth: must be > 0");
        if (d.src != topo.balancer_node)
            throw std::invalid_argument(path + ".src: demands must originate at the balancer");
        if (!topo.nodes[static_cast<std::size_t>(d.dst)].is_server)
            throw std::invalid_argument(path + ".dst: destination must be a server");
        topo.graph.validate();
        topo.demands.push_back(d);
    }
    return topo;
}

inline scenario_topology load_topology_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open topology file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("topology file " + path + ": invalid JSON: " + e.what());
    }
    return load_topology_json(j);
}

inline scenario_config load_scenario_json(const nlohmann::json& j, const std::string& base_dir) {
    scenario_config cfg;
    cfg.name = j.value("name", std::string("scenario"));
    cfg.topology_path = detail::require_string(j, "topology", "scenario");
    if (!base_dir.empty() && !std::filesystem::path(cfg.topology_path).is_absolute())
        cfg.topology_path = (std::filesystem::path(base_dir) / cfg.topology_path).string();
    if (j.contains("calibration_table")) {
        cfg.calibration_table_path = detail::require_string(j, "calibration_table", "scenario");
        if (!base_dir.empty() && !std::filesystem::path(cfg.calibration_table_path).is_absolute())
            cfg.calibration_table_path =
                (std::filesystem::path(base_dir) / cfg.calibration_table_path).string();
    }
    cfg.run_slots = static_cast<std::size_t>(j.value("run_slots", 16384.0));
    cfg.window = static_cast<std::size_t>(j.value("window", 1024.0));
    cfg.announcement_interval = static_cast<std::size_t>(j.value("announcement_interval", 1024.0));
    cfg.warmup_windows = static_cast<std::size_t>(j.value("warmup_windows", 2.0));
    if (j.contains("seeds")) {
        cfg.seeds.clear();
        for (const auto& s : j.at("seeds")) cfg.seeds.push_back(s.get<std::uint64_t>());
    }
    if (j.contains("methods")) {
        const auto& m = j.at("methods");
        cfg.methods.capacity_control = m.value("capacity_control", false);
        cfg.methods.fractal_routing = m.value("fractal_routing", false);
        cfg.methods.load_balancing = m.value("load_balancing", false);
    }
    cfg.c0 = j.value("c0", 4.0);
    cfg.p_eject = j.value("p_eject", 1.0);
    cfg.loss_target = j.value("loss_target", 0.01);
    cfg.hop_latency = static_cast<long>(j.value("hop_latency", 2.0));
    cfg.slot_duration_ms = j.value("slot_duration_ms", 1.0);

    const auto& classes = detail::require_field(j, "classes", "scenario");
    if (!classes.is_array() || classes.empty())
        throw std::invalid_argument("scenario.classes: must be a non-empty array");
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const std::string path = "scenario.classes[" + std::to_string(i) + "]";
        class_config cc;
        cc.cls.qs_id = static_cast<int>(detail::require_number(classes[i], "qs_id", path));
        cc.cls.priority = static_cast<int>(detail::require_number(classes[i], "priority", path));
        cc.cls.tau_qs = detail::require_number(classes[i], "tau", path);
        cc.cls.l_qs = detail::require_number(classes[i], "l", path);
        const auto& mu = detail::require_field(classes[i], "mu", path);
        cc.cls.mu_qs.cpu = detail::require_number(mu, "cpu", path + ".mu");
        cc.cls.mu_qs.net = detail::require_number(mu, "net", path + ".mu");
        cc.cls.mu_qs.ram = detail::require_number(mu, "ram", path + ".mu");
        const auto& gen = detail::require_field(classes[i], "generator", path);
        cc.gen.target_H = detail::require_number(gen, "H", path + ".generator");
        cc.gen.cascade_depth = static_cast<int>(gen.value("cascade_depth", 0.0));
        cc.gen.cascade_weight = gen.value("cascade_weight", 0.5);
        cc.gen.envelope_cv = gen.value("envelope_cv", 0.25);
        cfg.classes.push_back(cc);
    }
    if (j.contains("balancer_node")) {
        const auto& b = j.at("balancer_node");
        cfg.balancer_node.buffer = b.value("buffer", -1.0);
        cfg.balancer_node.buffer_ceiling =
            b.value("buffer_ceiling", std::numeric_limits<double>::infinity());
        cfg.balancer_node.storage = b.value("storage", 0.0);
        cfg.balancer_node.capacity_ceiling =
            b.value("capacity_ceiling", std::numeric_limits<double>::infinity());
    }
    cfg.validate();
    return cfg;
}

inline scenario_config load_scenario_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("scenario file " + path + ": invalid JSON: " + e.what());
    }
    return load_scenario_json(j, std::filesystem::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// Report rows.

struct class_compliance {
    double loss_fraction = 0.0;
    std::optional<double> mean_delay;
    bool loss_ok = true;   // loss <= l_qs
    bool delay_ok = true;  // mean delay <= tau_qs
};

struct report_row {
    std::string method_label;
    double utilization = 0.0;   // mean offered / current capacity, in [0,1]
    double loss_pct = 0.0;      // lost work / offered work * 100
    double jitter = 0.0;        // time units (slot_duration scaled)
    double imbalance = 0.0;     // window-mean system imbalance
    std::map<int, class_compliance> per_class;
    int qos_violations = 0;
};

struct run_logs {
    std::vector<std::string> metrics;   // per-window per-node per-class CSV lines
    std::vector<std::string> balancer;  // per-window assignment CSV lines
    std::vector<std::string> routing;   // per-announcement CSV lines
    std::vector<std::string> control;   // per-window controller decisions
};

struct flow_summary {
    int flow_id = 0;
    int qs_id = 0;
    int final_server = -1;
    std::uint64_t delivered = 0;
    double mean_delay_ms = 0.0;
    double jitter_ms = 0.0;
    double transport_p99_ms = 0.0;  // 99th percentile transport delay
    double transport_max_ms = 0.0;
};

struct run_result {
    report_row row;
    run_logs logs;
    double conservation_error = 0.0;  // max over nodes/slots (0 when clean)
    double ledger_imbalance = 0.0;    // outstanding allocations at run end
    std::uint64_t served_packets = 0;
    double final_buffer = 0.0;        // balancer pool, run end (sum over ports)
    double final_capacity = 0.0;      // balancer service total, run end
    long flow_moves = 0;              // balancer-initiated destination changes
    std::map<int, resource_vector> mean_server_util;  // over measured windows
    std::vector<flow_summary> flows;                  // post-warmup per-flow stats
};

// ---------------------------------------------------------------------------
// The simulation engine.

namespace detail {

struct flow_state {
    traffic_demand demand;
    int qs_id = 0;
    const class_config* cls = nullptr;
    std::vector<double> work;          // composed per-slot work trace
    std::vector<double> window_counts; // packetized arrivals, current window
    rng_stream packetizer;
    int server = -1;                   // current destination
    std::vector<int> path_links;
    int port_link = -1;                // first link of the path
    long ledger_key = -1;              // active allocation epoch
    fractal_signature last_sig;        // from the previous window
    bool has_sig = false;
    double demand_multiplier = 1.0;    // measured-vs-forecast feedback correction
    std::vector<double> delays;        // transport delay per delivered packet, post-warmup
    double e2e_delay_sum = 0.0;        // arrival to served-at-server, post-warmup
    std::uint64_t e2e_delay_cnt = 0;
    std::uint64_t delivered = 0;

    flow_state() : packetizer(0) {}
};

struct port_state {
    int link_id = -1;
    double capacity = 0.0;  // mirrors the trunk link's capacity
    double buffer = 0.0;
    double weight = 0.0;    // initial share of the node's capacity
    std::unique_ptr<queue_node> node;
    std::vector<double> window_counts;  // packetized arrivals, current window
};

struct server_state {
    int node_id = -1;
    node_config cfg;
    std::unique_ptr<queue_node> node;
    double window_received = 0.0;
    double window_served = 0.0;
    resource_vector measured;    // utilization over the last closed window
};

}  // namespace detail

class scenario_engine {
  public:
    scenario_engine(const scenario_config& cfg, const scenario_topology& topo,
                    const calibration_table* table, std::uint64_t seed)
        : cfg_(cfg), topo_(topo), table_(table), seed_(seed) {}

    run_result run() {
        setup();
        const long total = static_cast<long>(cfg_.run_slots);
        const long window = static_cast<long>(cfg_.window);
        for (long b = window; b <= total; b += window)
            sched_.schedule(b - 1, event_kind::window_boundary, 0, 0.0,
                            [this](const event_record& ev) { on_window_boundary(ev.slot); });
        if (cfg_.methods.load_balancing)
            for (long b = window; b < total; b += window)
                sched_.schedule(b - 1, event_kind::rebalance, 0, 0.0,
                                [this](const event_record& ev) { on_rebalance(ev.slot); });
        if (cfg_.methods.fractal_routing)
            for (long b = static_cast<long>(cfg_.announcement_interval); b < total;
                 b += static_cast<long>(cfg_.announcement_interval))
                sched_.schedule(b - 1, event_kind::announcement, 0, 0.0,
                                [this](const event_record& ev) { on_announcement(ev.slot); });

        for (long slot = 0; slot < total; ++slot) {
            step_arrivals(slot);
            step_service(slot);
            sched_.run_until(slot + 1);
            check_conservation();
        }
        finalize();
        return std::move(result_);
    }

  private:
    // --- setup -------------------------------------------------------------

    void setup() {
        graph_ = topo_.graph;
        // Ports: one per trunk link incident to the balancer.
        for (const auto& l : graph_.links) {
            if (l.node_a != topo_.balancer_node && l.node_b != topo_.balancer_node) continue;
            detail::port_state p;
            p.link_id = l.link_id;
            p.capacity = l.capacity;
            ports_.push_back(std::move(p));
        }
        if (ports_.empty()) throw std::invalid_argument("scenario: balancer has no attached links");
        std::sort(ports_.begin(), ports_.end(),
                  [](const auto& a, const auto& b) { return a.link_id < b.link_id; });

        std::vector<service_class> classes;
        for (const auto& c : cfg_.classes) classes.push_back(c.cls);

        total_capacity_ = 0.0;
        for (const auto& p : ports_) total_capacity_ += p.capacity;
        total_lambda_ = 0.0;
        for (const auto& d : topo_.demands) total_lambda_ += d.bandwidth;

        // Static provisioning: the classical (H=0.5, sigma_var=0.5) buffer at
        // the nominal utilization, reflecting a network designed for
        // short-range-dependent traffic.
        double buffer = cfg_.balancer_node.buffer;
        if (buffer < 0.0) {
            if (table_ == nullptr)
                throw std::invalid_argument(
                    "scenario.balancer_node.buffer: negative (derive-from-table) requires a calibration table");
            auto rb = table_->required_buffer(total_capacity_, total_lambda_, 0.5, 0.5);
            if (rb.saturated)
                throw std::invalid_argument("scenario: table saturated at the nominal operating point");
            // Table norms bound the backlog carried across slots (the fluid
            // probe admits one slot of drain on top); the node's admission
            // bound also holds the work served within the slot, so the
            // provisioned waiting room adds one slot of capacity.
            buffer = rb.buffer + total_capacity_;
        }
        buffer_floor_ = buffer;
        current_buffer_ = buffer;
        capacity_floor_ = total_capacity_;
        current_capacity_ = total_capacity_;

        // The shared pools split across ports by initial capacity share; each
        // port is one controlled queue with its own adaptive state.
        for (auto& p : ports_) {
            p.weight = p.capacity / total_capacity_;
            p.buffer = buffer * p.weight;
            p.node = std::make_unique<queue_node>(classes, p.buffer,
                                                  cfg_.balancer_node.storage * p.weight,
                                                  p.capacity, cfg_.p_eject);
            p.window_counts.assign(cfg_.window, 0.0);
        }
        for (std::size_t i = 0; i < topo_.nodes.size(); ++i) {
            if (!topo_.nodes[i].is_server) continue;
            detail::server_state s;
            s.node_id = static_cast<int>(i);
            s.cfg = topo_.nodes[i];
            s.node = std::make_unique<queue_node>(classes, s.cfg.buffer, 0.0, s.cfg.service, cfg_.p_eject);
            servers_.push_back(std::move(s));
        }
        if (servers_.empty()) throw std::invalid_argument("scenario: topology has no servers");

        // Flows.
        flows_.resize(topo_.demands.size());
        for (std::size_t i = 0; i < topo_.demands.size(); ++i) {
            auto& f = flows_[i];
            f.demand = topo_.demands[i];
            f.qs_id = f.demand.priority;  // demands carry the class id
            f.cls = &cfg_.class_by_id(f.qs_id);
            f.demand.priority = f.cls->cls.priority;
            generator_spec spec = f.cls->gen;
            spec.target_intensity = f.demand.bandwidth;
            spec.length = cfg_.run_slots;
            spec.seed = splitmix64(seed_ ^ fnv1a64("flow/" + std::to_string(f.demand.flow_id)));
            f.work = compose_traffic(spec).slots;
            f.window_counts.assign(cfg_.window, 0.0);
            f.packetizer = named_stream(seed_, "packetize/" + std::to_string(f.demand.flow_id));
            // Initial destination: static demand target, or round-robin when
            // balancing is off (the naive baseline), or balancer's choice later.
            f.server = f.demand.dst;
        }
        if (!cfg_.methods.load_balancing) {
            // Naive round-robin by flow order over the server pool.
            for (std::size_t i = 0; i < flows_.size(); ++i)
                flows_[i].server = servers_[i % servers_.size()].node_id;
        }
        eject_rng_ = std::make_unique<rng_stream>(named_stream(seed_, "eject"));
        for (auto& f : flows_) route_flow(f, /*respect_capacity=*/cfg_.methods.fractal_routing);
    }

    // --- per-slot mechanics --------------------------------------------------

    void step_arrivals(long slot) {
        const std::size_t wpos = static_cast<std::size_t>(slot) % cfg_.window;
        for (auto& f : flows_) {
            long count = f.packetizer.poisson(f.work[static_cast<std::size_t>(slot)]);
            if (count <= 0) continue;
            f.window_counts[wpos] += static_cast<double>(count);
            auto& port = port_by_link(f.port_link);
            port.window_counts[wpos] += static_cast<double>(count);
            for (long k = 0; k < count; ++k) {
                packet p;
                p.qs_id = f.qs_id;
                p.size = 1.0;
                p.arrival_slot = slot;
                p.deadline_slot = slot + static_cast<long>(f.cls->cls.tau_qs);
                p.flow_id = f.demand.flow_id;
                port.node->enqueue(p, *eject_rng_);
            }
        }
    }

    void step_service(long slot) {
        for (auto& port : ports_) {
            auto served = port.node->service_step(slot);
            if (served.empty()) continue;
            // One transfer event per (port, slot): the batch reaches each
            // packet's flow-current server after path-length * hop_latency.
            std::map<std::pair<int, long>, std::vector<served_packet>> batches;
            for (const auto& sp : served) {
                auto& f = flow_by_id(sp.pkt.flow_id);
                long hops = static_cast<long>(std::max<std::size_t>(f.path_links.size(), 1));
                long eta = slot + std::max<long>(1, hops * cfg_.hop_latency);
                batches[{f.server, eta}].push_back(sp);
            }
            for (auto& [key, batch] : batches) {
                const auto [server_id, eta] = key;
                sched_.schedule(eta, event_kind::service_complete, server_id,
                                static_cast<double>(batch.size()),
                                [this, server_id, batch](const event_record& ev) {
                                    deliver_to_server(ev.slot, server_id, batch);
                                });
            }
        }
        for (auto& s : servers_) {
            auto served = s.node->service_step(slot);
            for (const auto& sp : served) {
                auto& f = flow_by_id(sp.pkt.flow_id);
                f.delivered += 1;
                ++result_.served_packets;
                s.window_served += sp.pkt.size;
                if (slot >= static_cast<long>(cfg_.warmup_windows * cfg_.window)) {
                    f.e2e_delay_sum += static_cast<double>(slot - sp.pkt.arrival_slot);
                    f.e2e_delay_cnt += 1;
                    delay_sum_by_class_[sp.pkt.qs_id] += static_cast<double>(slot - sp.pkt.arrival_slot);
                    delay_cnt_by_class_[sp.pkt.qs_id] += 1;
                }
            }
        }
    }

    void deliver_to_server(long slot, int server_id, const std::vector<served_packet>& batch) {
        auto& s = server_by_id(server_id);
        for (const auto& sp : batch) {
            packet p = sp.pkt;
            // Transport delay (balancer wait + transit) is the jitter basis:
            // it is the part of the path the studied methods actually manage.
            if (slot >= static_cast<long>(cfg_.warmup_windows * cfg_.window)) {
                auto& f = flow_by_id(p.flow_id);
                f.delays.push_back(static_cast<double>(slot - p.arrival_slot));
            }
            // Deadline continues from the original arrival; expired-in-flight
            // packets are purged by the server's next service step.
            s.window_received += p.size;
            s.node->enqueue(p, *eject_rng_);
        }
    }

    // --- window machinery ----------------------------------------------------

    void on_window_boundary(long slot) {
        const long widx = (slot + 1) / static_cast<long>(cfg_.window) - 1;
        const bool warm = widx < static_cast<long>(cfg_.warmup_windows);

        // 1. metrics snapshot.
        double win_offered = 0.0, win_lost = 0.0;
        for (auto& port : ports_) {
            auto stats = port.node->snapshot_window();
            for (auto& [qs, st] : stats) {
                win_offered += st.received;
                win_lost += st.lost();
                if (!warm) {
                    class_received_[qs] += st.received;
                    class_lost_[qs] += st.lost();
                }
                log_metrics(widx, "port:" + std::to_string(port.link_id), qs, st);
            }
        }
        // Memory load per server: work-in-flight commitment (arrival rate times
        // the per-unit memory demand of the class).  Instantaneous backlog is
        // too noisy near zero to compare servers against each other.
        std::map<int, double> committed_ram;
        for (const auto& f : flows_) {
            if (f.window_counts.empty()) continue;
            double lam = std::accumulate(f.window_counts.begin(), f.window_counts.end(), 0.0) /
                         static_cast<double>(f.window_counts.size());
            committed_ram[f.server] += lam * f.cls->cls.mu_qs.ram;
        }
        std::vector<node_load> loads;
        for (auto& s : servers_) {
            auto stats = s.node->snapshot_window();
            for (auto& [qs, st] : stats) {
                win_lost += st.lost();
                if (!warm) class_lost_[qs] += st.lost();
                log_metrics(widx, topo_.nodes[static_cast<std::size_t>(s.node_id)].name, qs, st);
            }
            const double w = static_cast<double>(cfg_.window);
            s.measured.cpu = std::clamp(s.window_served / (s.cfg.capacity.cpu * w), 0.0, 1.0);
            s.measured.net = std::clamp(s.window_received / (s.cfg.capacity.net * w), 0.0, 1.0);
            s.measured.ram = std::clamp(committed_ram[s.node_id] / s.cfg.capacity.ram, 0.0, 1.0);
            loads.push_back(node_load{s.node_id, s.measured});
            s.window_received = 0.0;
            s.window_served = 0.0;
        }
        if (!warm) {
            offered_total_ += win_offered;
            lost_total_ += win_lost;
            utilization_accum_ += std::clamp(win_offered / (static_cast<double>(cfg_.window) * current_capacity_), 0.0, 1.0);
            imbalance_accum_ += system_imbalance(loads, widx).system_imbalance;
            ++measured_windows_;
            for (const auto& l : loads) {
                auto& m = server_util_accum_[l.server_id];
                m.cpu += l.util.cpu;
                m.net += l.util.net;
                m.ram += l.util.ram;
            }
        }
        measured_loads_ = loads;

        // 2. per-flow signatures for the balancer and routing.
        for (auto& f : flows_) {
            traffic_trace chunk;
            chunk.slots = f.window_counts;
            try {
                f.last_sig = signature(chunk);
                f.has_sig = true;
            } catch (const std::invalid_argument&) {
                f.has_sig = false;  // sticky: keep previous assignment/signature
            }
            std::fill(f.window_counts.begin(), f.window_counts.end(), 0.0);
        }

        // 3. capacity controller, one instance per port (= per queue), each
        // with its share of the node-level floors and ceilings.
        if (cfg_.methods.capacity_control && table_ != nullptr) {
            // The table is calibrated for its own loss target.  When the run
            // asks for a stricter one, size each port as if it carried
            // proportionally more traffic rather than recalibrating.
            const double margin =
                std::max(1.0, table_->grid().loss_target / cfg_.loss_target);
            for (auto& p : ports_) {
                traffic_trace arr;
                arr.slots = p.window_counts;
                if (margin > 1.0)
                    for (auto& v : arr.slots) v *= margin;
                // The controller reasons in table space, where the buffer is
                // the backlog carried across slots; the node's waiting room
                // additionally holds one slot of drain.  Translate on the way
                // in and out.
                control_limits lim;
                lim.buffer_floor = std::max(0.0, buffer_floor_ * p.weight - p.capacity);
                lim.buffer_ceiling = cfg_.balancer_node.buffer_ceiling * p.weight;
                if (std::isfinite(lim.buffer_ceiling))
                    lim.buffer_ceiling = std::max(0.0, lim.buffer_ceiling - p.capacity);
                lim.capacity_floor = capacity_floor_ * p.weight;
                lim.capacity_ceiling = cfg_.balancer_node.capacity_ceiling * p.weight;
                const double fluid_buffer = std::max(0.0, p.buffer - p.capacity);
                auto d = control_step(*table_, arr, fluid_buffer, p.capacity, lim, widx);
                if (d.recommended_capacity > p.capacity) {
                    current_capacity_ += d.recommended_capacity - p.capacity;
                    p.capacity = d.recommended_capacity;
                    p.node->resize_capacity(p.capacity);
                    graph_.link_by_id(p.link_id).capacity = p.capacity;
                }
                const double want_buffer = d.recommended_buffer + p.capacity;
                if (want_buffer > p.buffer) {
                    current_buffer_ += want_buffer - p.buffer;
                    p.buffer = want_buffer;
                    p.node->resize_buffer(p.buffer);
                }
                log_control(d);
            }
        }
        for (auto& p : ports_) std::fill(p.window_counts.begin(), p.window_counts.end(), 0.0);
    }

    void on_rebalance(long slot) {
        const long widx = (slot + 1) / static_cast<long>(cfg_.window) - 1;
        // Feedback correction: each flow carries a persistent multiplier that
        // tracks how far its server's measured utilization deviated from the
        // forecast, so reserved demands converge toward observed usage.
        if (!forecast_.empty()) {
            for (const auto& s : servers_) {
                auto it = forecast_.find(s.node_id);
                if (it == forecast_.end()) continue;
                double ratio = 1.0;
                bool seen = false;
                auto fold = [&ratio, &seen](double measured, double fc) {
                    if (fc > 0.02) {
                        ratio = std::max(seen ? ratio : 0.0, measured / fc);
                        seen = true;
                    }
                };
                fold(s.measured.cpu, it->second.cpu);
                fold(s.measured.net, it->second.net);
                fold(s.measured.ram, it->second.ram);
                if (!seen) continue;
                // Inflate-only: measured utilization sits below forecast when
                // upstream losses starve a server, and shrinking demands on
                // that evidence would stack flows onto the lossy path.
                ratio = std::clamp(ratio, 0.5, 2.0);
                for (auto& f : flows_)
                    if (f.server == s.node_id)
                        f.demand_multiplier = std::clamp(f.demand_multiplier * ratio, 1.0, 2.0);
                forecast_error_log_ += std::abs(s.measured.cpu - it->second.cpu) +
                                       std::abs(s.measured.net - it->second.net) +
                                       std::abs(s.measured.ram - it->second.ram);
            }
        }

        std::vector<balancer_flow> bflows;
        std::vector<server_capacity> caps;
        for (const auto& s : servers_) caps.push_back(server_capacity{s.node_id, s.cfg.capacity});
        for (auto& f : flows_) {
            if (!f.has_sig) continue;  // sticky fallback
            balancer_flow bf;
            bf.flow_id = f.demand.flow_id;
            bf.qs_id = f.qs_id;
            bf.priority = f.cls->cls.priority;
            bf.demand = resource_demand(f.last_sig, f.cls->cls, table_);
            bf.demand.cpu *= f.demand_multiplier;
            bf.demand.net *= f.demand_multiplier;
            bf.demand.ram *= f.demand_multiplier;
            bflows.push_back(bf);
        }
        double before = system_imbalance(measured_loads_, widx).system_imbalance;
        auto outcome = assign_flows(bflows, caps, {}, widx);
        forecast_.clear();
        for (const auto& l : outcome.forecast) forecast_[l.server_id] = l.util;

        // Hysteresis: only adopt the fresh assignment when its forecast beats
        // keeping the current one by a clear margin, so near-ties never flap.
        std::vector<resource_vector> keep(caps.size());
        for (const auto& bf : bflows) {
            const auto& f = flow_by_id(bf.flow_id);
            for (std::size_t si = 0; si < caps.size(); ++si)
                if (caps[si].server_id == f.server) detail::add(keep[si], bf.demand);
        }
        const double keep_score = system_imbalance(detail::project(caps, keep), widx).system_imbalance;
        // Only migrate for a clear win; estimator noise otherwise swaps
        // near-tied flows every window and the path churn shows up as jitter.
        // The absolute term matters once the system is nearly balanced, where
        // a 10% relative gap is within estimator noise.
        const bool adopt =
            outcome.forecast_imbalance < keep_score - std::max(0.1 * keep_score, 0.02);
        for (const auto& fa : outcome.assignments) {
            auto& f = flow_by_id(fa.flow_id);
            if (adopt && f.server != fa.server_id) {
                f.server = fa.server_id;
                ++result_.flow_moves;
                route_flow(f, cfg_.methods.fractal_routing);
            }
            log_balancer(widx, fa, before, outcome.forecast_imbalance);
        }
        if (!adopt) {
            // The reserved forecast must describe the kept placement.
            forecast_.clear();
            auto kept_loads = detail::project(caps, keep);
            for (const auto& l : kept_loads) forecast_[l.server_id] = l.util;
        }
    }

    void on_announcement(long slot) {
        // Dominant carried flow per link drives the cost refresh.
        std::map<int, link_signature> per_link;
        std::map<int, double> dominant_bw;
        for (const auto& f : flows_) {
            if (!f.has_sig) continue;
            for (int lid : f.path_links) {
                auto it = dominant_bw.find(lid);
                if (it == dominant_bw.end() || f.demand.bandwidth > it->second) {
                    dominant_bw[lid] = f.demand.bandwidth;
                    // Window estimates can exceed 1 on strongly bursty input;
                    // the cost rule treats everything above 0.9 alike.
                    per_link[lid] = link_signature{std::clamp(f.last_sig.hurst_H, 0.01, 1.0),
                                                   std::max(f.last_sig.sigma_var, 0.0)};
                }
            }
        }
        refresh_costs(graph_, per_link, cfg_.c0);
        // Re-route every flow on the refreshed costs (future packets only).
        for (auto& f : flows_) release_route(f);
        std::vector<traffic_demand> demands;
        for (const auto& f : flows_) {
            traffic_demand d = f.demand;
            d.dst = f.server;
            demands.push_back(d);
        }
        // Path selection runs on a scratch copy; adopt_route owns the real
        // allocation bookkeeping (via the ledger) on graph_.
        topology scratch = graph_;
        auto outcome = route_flows(scratch, demands);
        for (std::size_t i = 0; i < flows_.size(); ++i) {
            auto& f = flows_[i];
            const auto& r = outcome.routes[i];
            if (r.routed && !r.path_links.empty()) {
                // Flap damping: switching paths perturbs the per-port load the
                // capacity controller sized, so demand a clear cost win first.
                if (!f.path_links.empty() && r.path_links != f.path_links) {
                    double old_cost = path_cost(graph_, f.path_links);
                    if (!(r.cost < 0.95 * old_cost)) {
                        adopt_route(f, f.path_links, old_cost, slot);
                        continue;
                    }
                }
                adopt_route(f, r.path_links, r.cost, slot);
            } else {
                // No feasible path at current costs: keep the previous path
                // (its allocation was already released; re-allocate it).
                adopt_route(f, f.path_links, 0.0, slot);
            }
        }
    }

    // --- routing helpers -----------------------------------------------------

    void route_flow(detail::flow_state& f, bool respect_capacity) {
        release_route(f);
        std::optional<std::vector<int>> path;
        if (respect_capacity) {
            path = detail::least_cost_path(graph_, topo_.balancer_node, f.server, f.demand.bandwidth);
        }
        if (!path) path = detail::least_cost_path(graph_, topo_.balancer_node, f.server, 0.0);
        if (!path || path->empty())
            throw std::runtime_error("scenario: no path from balancer to server " +
                                     topo_.nodes[static_cast<std::size_t>(f.server)].name);
        adopt_route(f, *path, 0.0, sched_.current_slot());
    }

    void release_route(detail::flow_state& f) {
        if (f.ledger_key < 0) return;
        const auto& a = ledger_.release(f.ledger_key);
        for (const auto& [lid, bw] : a.link_bandwidth) graph_.link_by_id(lid).allocated -= bw;
        f.ledger_key = -1;
    }

    void adopt_route(detail::flow_state& f, const std::vector<int>& path, double cost, long slot) {
        f.path_links = path;
        f.port_link = path.empty() ? ports_.front().link_id : path.front();
        resource_ledger::allocation a;
        for (int lid : path) {
            a.link_bandwidth.emplace_back(lid, f.demand.bandwidth);
            graph_.link_by_id(lid).allocated += f.demand.bandwidth;
        }
        a.server_id = f.server;
        f.ledger_key = next_ledger_key_++;
        ledger_.allocate(f.ledger_key, a);
        log_routing(slot, f, cost);
    }

    // --- finalization ----------------------------------------------------------

    void finalize() {
        for (auto& f : flows_) release_route(f);
        result_.ledger_imbalance = ledger_.imbalance();
        result_.final_buffer = current_buffer_;
        result_.final_capacity = current_capacity_;
        const double mw0 = std::max(1.0, static_cast<double>(measured_windows_));
        for (const auto& [sid, acc] : server_util_accum_)
            result_.mean_server_util[sid] =
                resource_vector{acc.cpu / mw0, acc.net / mw0, acc.ram / mw0};

        report_row row;
        row.method_label = cfg_.methods.label();
        const double mw = std::max(1.0, static_cast<double>(measured_windows_));
        row.utilization = utilization_accum_ / mw;
        row.loss_pct = offered_total_ > 0.0 ? 100.0 * lost_total_ / offered_total_ : 0.0;
        row.imbalance = imbalance_accum_ / mw;

        double jitter_sum = 0.0;
        int jitter_flows = 0;
        for (const auto& f : flows_) {
            flow_summary fs;
            fs.flow_id = f.demand.flow_id;
            fs.qs_id = f.cls->cls.qs_id;
            fs.final_server = f.server;
            fs.delivered = f.delivered;
            if (f.e2e_delay_cnt > 0)
                fs.mean_delay_ms =
                    cfg_.slot_duration_ms * f.e2e_delay_sum / static_cast<double>(f.e2e_delay_cnt);
            auto j = compute_jitter(f.delays);
            if (j) {
                fs.jitter_ms = cfg_.slot_duration_ms * *j;
                jitter_sum += *j;
                ++jitter_flows;
            }
            if (!f.delays.empty()) {
                std::vector<double> sorted = f.delays;
                std::sort(sorted.begin(), sorted.end());
                fs.transport_p99_ms =
                    cfg_.slot_duration_ms * sorted[sorted.size() * 99 / 100];
                fs.transport_max_ms = cfg_.slot_duration_ms * sorted.back();
            }
            result_.flows.push_back(fs);
        }
        row.jitter = jitter_flows > 0 ? cfg_.slot_duration_ms * jitter_sum / jitter_flows : 0.0;

        for (const auto& c : cfg_.classes) {
            class_compliance cc;
            double rec = class_received_.count(c.cls.qs_id) ? class_received_[c.cls.qs_id] : 0.0;
            double lost = class_lost_.count(c.cls.qs_id) ? class_lost_[c.cls.qs_id] : 0.0;
            cc.loss_fraction = rec > 0.0 ? lost / rec : 0.0;
            cc.loss_ok = cc.loss_fraction <= c.cls.l_qs;
            if (delay_cnt_by_class_.count(c.cls.qs_id) && delay_cnt_by_class_[c.cls.qs_id] > 0) {
                cc.mean_delay = delay_sum_by_class_[c.cls.qs_id] /
                                static_cast<double>(delay_cnt_by_class_[c.cls.qs_id]);
                cc.delay_ok = *cc.mean_delay <= c.cls.tau_qs;
            }
            if (!cc.loss_ok) ++row.qos_violations;
            if (!cc.delay_ok) ++row.qos_violations;
            row.per_class[c.cls.qs_id] = cc;
        }
        result_.row = row;
        if (!sched_.counters_balance())
            throw std::logic_error("scenario: event counters out of balance");
    }

    void check_conservation() {
        double worst = 0.0;
        for (const auto& p : ports_) worst = std::max(worst, p.node->conservation_error());
        for (const auto& s : servers_) worst = std::max(worst, s.node->conservation_error());
        result_.conservation_error = std::max(result_.conservation_error, worst);
    }

    // --- logging ---------------------------------------------------------------

    void log_metrics(long widx, const std::string& node, int qs, const window_class_stats& st) {
        char buf[256];
        auto mw = st.mean_wait();
        std::snprintf(buf, sizeof buf, "%ld,%s,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%s", widx,
                      node.c_str(), qs, st.received, st.served, st.dropped + st.ejected_out,
                      st.ejected_out, st.expired, mw ? std::to_string(*mw).c_str() : "na");
        result_.logs.metrics.emplace_back(buf);
    }

    void log_control(const control_decision& d) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%ld,%.10g,%.10g,%.10g,%.10g,%d,%d", d.window_index,
                      d.current_buffer, d.current_capacity, d.recommended_buffer,
                      d.recommended_capacity, static_cast<int>(d.action),
                      d.table_saturated ? 1 : 0);
        result_.logs.control.emplace_back(buf);
    }

    void log_balancer(long widx, const flow_assignment& fa, double before, double after) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%ld,%d,%d,%s,%.10g,%.10g,%.10g,%.10g,%.10g", widx, fa.flow_id,
                      fa.qs_id, topo_.nodes[static_cast<std::size_t>(fa.server_id)].name.c_str(),
                      fa.reserved.cpu, fa.reserved.net, fa.reserved.ram, before, after);
        result_.logs.balancer.emplace_back(buf);
    }

    void log_routing(long slot, const detail::flow_state& f, double cost) {
        std::string links;
        for (int lid : f.path_links) {
            if (!links.empty()) links += '|';
            links += std::to_string(lid);
        }
        char buf[256];
        std::snprintf(buf, sizeof buf, "%ld,%d,%s,%.10g,%.10g", slot, f.demand.flow_id, links.c_str(),
                      f.demand.bandwidth, cost);
        result_.logs.routing.emplace_back(buf);
    }

    // --- lookups ---------------------------------------------------------------

    detail::port_state& port_by_link(int link_id) {
        for (auto& p : ports_)
            if (p.link_id == link_id) return p;
        return ports_.front();
    }
    detail::flow_state& flow_by_id(int flow_id) {
        for (auto& f : flows_)
            if (f.demand.flow_id == flow_id) return f;
        throw std::logic_error("scenario: unknown flow id");
    }
    detail::server_state& server_by_id(int node_id) {
        for (auto& s : servers_)
            if (s.node_id == node_id) return s;
        throw std::logic_error("scenario: unknown server id");
    }

    scenario_config cfg_;
    scenario_topology topo_;
    const calibration_table* table_;
    std::uint64_t seed_;

    topology graph_;
    std::vector<detail::port_state> ports_;
    std::vector<detail::server_state> servers_;
    std::vector<detail::flow_state> flows_;
    scheduler sched_;
    std::unique_ptr<rng_stream> eject_rng_;
    resource_ledger ledger_;
    long next_ledger_key_ = 0;

    std::vector<node_load> measured_loads_;
    std::map<int, resource_vector> server_util_accum_;
    std::map<int, resource_vector> forecast_;
    double forecast_error_log_ = 0.0;

    double total_capacity_ = 0.0;
    double total_lambda_ = 0.0;
    double current_buffer_ = 0.0;
    double current_capacity_ = 0.0;
    double buffer_floor_ = 0.0;
    double capacity_floor_ = 0.0;

    double offered_total_ = 0.0;
    double lost_total_ = 0.0;
    double utilization_accum_ = 0.0;
    double imbalance_accum_ = 0.0;
    long measured_windows_ = 0;
    std::map<int, double> class_received_;
    std::map<int, double> class_lost_;
    std::map<int, double> delay_sum_by_class_;
    std::map<int, long> delay_cnt_by_class_;

    run_result result_;
};

// ---------------------------------------------------------------------------
// Entry points.

inline run_result run_scenario(const scenario_config& cfg, std::uint64_t seed,
                               const calibration_table* table) {
    cfg.validate();
    scenario_topology topo = load_topology_file(cfg.topology_path);
    scenario_engine engine(cfg, topo, table, seed);
    return engine.run();
}

// Average of per-seed rows (metrics are means over seeds; violations summed).
inline report_row average_rows(const std::vector<report_row>& rows) {
    if (rows.empty()) throw std::invalid_argument("average_rows: empty");
    report_row out = rows.front();
    if (rows.size() == 1) return out;
    auto acc = [&rows](auto get) {
        double s = 0.0;
        for (const auto& r : rows) s += get(r);
        return s / static_cast<double>(rows.size());
    };
    out.utilization = acc([](const report_row& r) { return r.utilization; });
    out.loss_pct = acc([](const report_row& r) { return r.loss_pct; });
    out.jitter = acc([](const report_row& r) { return r.jitter; });
    out.imbalance = acc([](const report_row& r) { return r.imbalance; });
    out.qos_violations = 0;
    for (const auto& r : rows) out.qos_violations += r.qos_violations;
    for (auto& [qs, cc] : out.per_class) {
        double lf = 0.0;
        bool all_loss_ok = true, all_delay_ok = true;
        for (const auto& r : rows) {
            lf += r.per_class.at(qs).loss_fraction;
            all_loss_ok = all_loss_ok && r.per_class.at(qs).loss_ok;
            all_delay_ok = all_delay_ok && r.per_class.at(qs).delay_ok;
        }
        cc.loss_fraction = lf / static_cast<double>(rows.size());
        cc.loss_ok = all_loss_ok;
        cc.delay_ok = all_delay_ok;
    }
    return out;
}

struct comparison_result {
    std::vector<report_row> rows;                      // averaged, one per method combo
    std::vector<std::vector<report_row>> per_seed;     // [combo][seed]
    std::vector<run_result> sample_runs;               // first seed of each combo
};

// The four-way comparison: each method alone, then all three together, on
// identical traffic (same seeds, same named streams).
inline comparison_result compare_methods(const scenario_config& base, const calibration_table* table) {
    std::vector<method_toggles> combos = {
        {true, false, false}, {false, true, false}, {false, false, true}, {true, true, true}};
    comparison_result out;
    for (const auto& m : combos) {
        scenario_config cfg = base;
        cfg.methods = m;
        std::vector<report_row> rows;
        for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
            run_result r = run_scenario(cfg, cfg.seeds[si], table);
            rows.push_back(r.row);
            if (si == 0) {
                r.logs = run_logs{};  // keep the sample light
                out.sample_runs.push_back(std::move(r));
            }
        }
        out.per_seed.push_back(rows);
        out.rows.push_back(average_rows(rows));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report serialization (byte-stable).

inline std::string report_csv(const std::vector<report_row>& rows) {
    std::string s = "method,utilization,loss_pct,jitter,imbalance,qos_violations\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g,%d\n", r.method_label.c_str(),
                      r.utilization, r.loss_pct, r.jitter, r.imbalance, r.qos_violations);
        s += buf;
    }
    return s;
}

inline std::string report_json(const std::vector<report_row>& rows) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json row;
        row["method"] = r.method_label;
        char buf[64];
        auto num = [&buf](double v) {
            std::snprintf(buf, sizeof buf, "%.10g", v);
            return std::stod(buf);
        };
        row["utilization"] = num(r.utilization);
        row["loss_pct"] = num(r.loss_pct);
        row["jitter"] = num(r.jitter);
        row["imbalance"] = num(r.imbalance);
        row["qos_violations"] = r.qos_violations;
        nlohmann::ordered_json pc = nlohmann::ordered_json::object();
        for (const auto& [qs, cc] : r.per_class) {
            nlohmann::ordered_json c;
            c["loss_fraction"] = num(cc.loss_fraction);
            c["loss_ok"] = cc.loss_ok;
            if (cc.mean_delay) c["mean_delay"] = num(*cc.mean_delay);
            c["delay_ok"] = cc.delay_ok;
            pc[std::to_string(qs)] = c;
        }
        row["classes"] = pc;
        j.push_back(row);
    }
    return j.dump(2) + "\n";
}

}  // namespace fqos
