#pragma once

// Queueing node with per-class limited queues and a priority eject
// mechanism: one shared buffer pool holding per-class FIFO queues, plus a
// displaced-packet storage area served after all class queues.  Arriving
// higher-priority packets may displace queued lower-priority ones into
// storage (or out of the system when storage is full).  Service is strict
// priority, FIFO within class; expired packets are purged and counted as
// losses.  All work is conserved exactly: received = served + dropped +
// ejected-out + expired + still-queued, per class, at every slot.

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rng.hpp"

namespace fqos {

struct resource_vector {
    double cpu = 0.0;
    double net = 0.0;
    double ram = 0.0;

    void validate() const {
        if (cpu < 0.0 || net < 0.0 || ram < 0.0)
            throw std::invalid_argument("resource_vector: components must be >= 0");
    }
};

struct service_class {
    int qs_id = 0;
    int priority = 0;       // lower value = higher priority
    double tau_qs = 1.0;    // max permitted mean delay (slots)
    double l_qs = 0.01;     // max permitted loss fraction
    resource_vector mu_qs;  // resource demand per unit of work

    void validate() const {
        if (!(tau_qs > 0.0)) throw std::invalid_argument("service_class: tau_qs must be > 0");
        if (!(l_qs > 0.0 && l_qs < 1.0))
            throw std::invalid_argument("service_class: l_qs must be in (0,1)");
        mu_qs.validate();
    }
};

struct packet {
    int qs_id = 0;
    double size = 1.0;       // work-units
    long arrival_slot = 0;
    long deadline_slot = 0;  // lifetime bound; expired when current slot > deadline
    int flow_id = -1;
};

enum class admission { queued, ejected_other, dropped };

struct served_packet {
    packet pkt;
    long service_slot = 0;
    long wait = 0;  // service_slot - arrival_slot
};

// Per-class counters, cumulative work-units.
struct class_counters {
    double received = 0.0;
    double served = 0.0;
    double dropped = 0.0;      // rejected on arrival
    double ejected_out = 0.0;  // displaced out of the system (victim-class loss)
    double expired = 0.0;      // lifetime ran out in queue or storage
    double moved_to_storage = 0.0;  // displaced but kept (not a loss)
};

struct window_class_stats {
    double received = 0.0;
    double served = 0.0;
    double dropped = 0.0;
    double ejected_out = 0.0;
    double expired = 0.0;
    long served_packets = 0;
    double wait_sum = 0.0;  // over packets served in the window

    double lost() const { return dropped + ejected_out + expired; }
    // Loss fraction; zero traffic reports zero loss with the no_traffic flag.
    double loss_coefficient(bool* no_traffic = nullptr) const {
        if (received <= 0.0) {
            if (no_traffic) *no_traffic = true;
            return 0.0;
        }
        if (no_traffic) *no_traffic = false;
        return lost() / received;
    }
    std::optional<double> mean_wait() const {
        if (served_packets == 0) return std::nullopt;
        return wait_sum / static_cast<double>(served_packets);
    }
};

class queue_node {
  public:
    queue_node(std::vector<service_class> classes, double buffer_capacity,
               double storage_capacity, double service_capacity, double p_eject = 1.0)
        : buffer_capacity_(buffer_capacity),
          storage_capacity_(storage_capacity),
          service_capacity_(service_capacity),
          p_eject_(p_eject) {
        if (classes.empty()) throw std::invalid_argument("queue_node: need >= 1 service class");
        if (!(buffer_capacity >= 0.0) || !(storage_capacity >= 0.0) || !(service_capacity > 0.0))
            throw std::invalid_argument("queue_node: capacities must be nonnegative, service > 0");
        if (!(p_eject >= 0.0 && p_eject <= 1.0))
            throw std::invalid_argument("queue_node: p_eject must be in [0,1]");
        for (const auto& c : classes) {
            c.validate();
            if (!classes_.emplace(c.qs_id, c).second)
                throw std::invalid_argument("queue_node: duplicate qs_id");
        }
        // Service order: ascending priority value (0 first).
        for (const auto& [id, c] : classes_) service_order_.push_back(id);
        std::sort(service_order_.begin(), service_order_.end(), [&](int a, int b) {
            int pa = classes_.at(a).priority, pb = classes_.at(b).priority;
            if (pa != pb) return pa < pb;
            return a < b;
        });
        for (int id : service_order_) {
            queues_[id];
            counters_[id];
            window_[id];
            queued_work_[id] = 0.0;
            storage_work_[id] = 0.0;
        }
    }

    double buffer_capacity() const { return buffer_capacity_; }
    double service_capacity() const { return service_capacity_; }
    double storage_capacity() const { return storage_capacity_; }
    double queued_work_total() const { return total_queued_; }
    double storage_work_total() const { return total_storage_; }
    const std::map<int, service_class>& classes() const { return classes_; }

    // Dynamic resizing.  Lowering the buffer below current occupancy is
    // legal: admissions stop until occupancy drains below the new bound.
    void resize_buffer(double new_capacity) {
        if (!(new_capacity >= 0.0)) throw std::invalid_argument("resize_buffer: negative capacity");
        buffer_capacity_ = new_capacity;
    }
    void resize_capacity(double new_capacity) {
        if (!(new_capacity > 0.0)) throw std::invalid_argument("resize_capacity: capacity must be > 0");
        service_capacity_ = new_capacity;
    }

    admission enqueue(const packet& pkt, rng_stream& rng) {
        const auto cls = classes_.find(pkt.qs_id);
        if (cls == classes_.end()) throw std::invalid_argument("enqueue: unknown service class");
        if (!(pkt.size > 0.0)) throw std::invalid_argument("enqueue: packet size must be > 0");
        if (pkt.deadline_slot < pkt.arrival_slot)
            throw std::invalid_argument("enqueue: deadline before arrival");

        auto& wc = window_[pkt.qs_id];
        counters_[pkt.qs_id].received += pkt.size;
        wc.received += pkt.size;

        if (total_queued_ + pkt.size <= buffer_capacity_) {
            push_to_queue(pkt);
            return admission::queued;
        }

        // Buffer full: try to displace strictly-lower-priority queued work,
        // lowest priority class first, most recently queued packet first.
        const int arriving_priority = cls->second.priority;
        bool displaced_any = false;
        for (auto it = service_order_.rbegin(); it != service_order_.rend(); ++it) {
            const int victim_class = *it;
            if (classes_.at(victim_class).priority <= arriving_priority) break;
            auto& vq = queues_[victim_class];
            while (!vq.empty() && total_queued_ + pkt.size > buffer_capacity_) {
                if (!rng.bernoulli(p_eject_)) return finish_drop(pkt);
                packet victim = vq.back();
                vq.pop_back();
                queued_work_[victim_class] -= victim.size;
                total_queued_ -= victim.size;
                displaced_any = true;
                if (total_storage_ + victim.size <= storage_capacity_) {
                    storage_.push_back(victim);
                    storage_work_[victim_class] += victim.size;
                    total_storage_ += victim.size;
                    counters_[victim_class].moved_to_storage += victim.size;
                } else {
                    counters_[victim_class].ejected_out += victim.size;
                    window_[victim_class].ejected_out += victim.size;
                }
            }
            if (total_queued_ + pkt.size <= buffer_capacity_) break;
        }
        if (total_queued_ + pkt.size <= buffer_capacity_) {
            push_to_queue(pkt);
            return displaced_any ? admission::ejected_other : admission::queued;
        }
        return finish_drop(pkt);
    }

    // One slot of service: purge expired work, then serve up to
    // service_capacity work-units in strict priority order (FIFO within
    // class), storage last.  A head-of-line packet that does not fit stops
    // service entirely so priority dominance is never violated.
    std::vector<served_packet> service_step(long slot) {
        purge_expired(slot);
        std::vector<served_packet> out;
        double budget = service_capacity_;
        bool blocked = false;
        for (int id : service_order_) {
            auto& q = queues_[id];
            while (!q.empty()) {
                if (q.front().size > budget + 1e-12) {
                    blocked = true;
                    break;
                }
                packet p = q.front();
                q.pop_front();
                queued_work_[id] -= p.size;
                total_queued_ -= p.size;
                budget -= p.size;
                record_served(p, slot, out);
            }
            if (blocked) break;
        }
        if (!blocked) {
            while (!storage_.empty() && storage_.front().size <= budget + 1e-12) {
                packet p = storage_.front();
                storage_.pop_front();
                storage_work_[p.qs_id] -= p.size;
                total_storage_ -= p.size;
                budget -= p.size;
                record_served(p, slot, out);
            }
        }
        return out;
    }

    const class_counters& counters(int qs_id) const { return counters_.at(qs_id); }

    // Closes the current measurement window: returns per-class stats and
    // resets the window accumulators.
    std::map<int, window_class_stats> snapshot_window() {
        std::map<int, window_class_stats> out = window_;
        for (auto& [id, w] : window_) w = window_class_stats{};
        return out;
    }

    // Work-conservation identity, exact for unit-size packets:
    // received = served + dropped + ejected_out + expired + queued + in-storage.
    double conservation_error() const {
        double worst = 0.0;
        for (const auto& [id, c] : counters_) {
            double lhs = c.received;
            double rhs = c.served + c.dropped + c.ejected_out + c.expired +
                         queued_work_.at(id) + storage_work_.at(id);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        return worst;
    }

  private:
    void push_to_queue(const packet& pkt) {
        queues_[pkt.qs_id].push_back(pkt);
        queued_work_[pkt.qs_id] += pkt.size;
        total_queued_ += pkt.size;
    }

    admission finish_drop(const packet& pkt) {
        counters_[pkt.qs_id].dropped += pkt.size;
        window_[pkt.qs_id].dropped += pkt.size;
        return admission::dropped;
    }

    void record_served(const packet& p, long slot, std::vector<served_packet>& out) {
        counters_[p.qs_id].served += p.size;
        auto& wc = window_[p.qs_id];
        wc.served += p.size;
        wc.served_packets += 1;
        wc.wait_sum += static_cast<double>(slot - p.arrival_slot);
        out.push_back(served_packet{p, slot, slot - p.arrival_slot});
    }

    void purge_expired(long slot) {
        for (int id : service_order_) {
            auto& q = queues_[id];
            std::deque<packet> keep;
            for (const packet& p : q) {
                if (p.deadline_slot < slot) {
                    counters_[id].expired += p.size;
                    window_[id].expired += p.size;
                    queued_work_[id] -= p.size;
                    total_queued_ -= p.size;
                } else {
                    keep.push_back(p);
                }
            }
            q.swap(keep);
        }
        std::deque<packet> keep;
        for (const packet& p : storage_) {
            if (p.deadline_slot < slot) {
                counters_[p.qs_id].expired += p.size;
                window_[p.qs_id].expired += p.size;
                storage_work_[p.qs_id] -= p.size;
                total_storage_ -= p.size;
            } else {
                keep.push_back(p);
            }
        }
        storage_.swap(keep);
    }

    std::map<int, service_class> classes_;
    std::vector<int> service_order_;  // ascending priority value
    std::map<int, std::deque<packet>> queues_;
    std::deque<packet> storage_;
    std::map<int, double> queued_work_;
    std::map<int, double> storage_work_;
    double total_queued_ = 0.0;
    double total_storage_ = 0.0;
    double buffer_capacity_;
    double storage_capacity_;
    double service_capacity_;
    double p_eject_;
    std::map<int, class_counters> counters_;
    std::map<int, window_class_stats> window_;
};

// Resource allocate/release bookkeeping with the single-transition release
// flag: each allocation (one flow assignment epoch) is released exactly
// once; the outstanding sum must return to zero by run end.
class resource_ledger {
  public:
    struct allocation {
        std::vector<std::pair<int, double>> link_bandwidth;  // (link id, Netx)
        int server_id = -1;
        resource_vector server_reserved;
        bool released = false;  // the release flag: false = 0, true = 1
    };

    void allocate(long key, allocation a) {
        if (entries_.count(key)) throw std::invalid_argument("resource_ledger: duplicate allocation key");
        for (const auto& [link, bw] : a.link_bandwidth) {
            (void)link;
            if (!(bw >= 0.0)) throw std::invalid_argument("resource_ledger: negative bandwidth");
            outstanding_bandwidth_ += bw;
        }
        outstanding_server_.cpu += a.server_reserved.cpu;
        outstanding_server_.net += a.server_reserved.net;
        outstanding_server_.ram += a.server_reserved.ram;
        entries_.emplace(key, std::move(a));
    }

    // Returns the released allocation so the caller can credit its pools.
    const allocation& release(long key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw std::invalid_argument("resource_ledger: unknown allocation key");
        if (it->second.released)
            throw std::logic_error("resource_ledger: double release (flag already set)");
        it->second.released = true;
        for (const auto& [link, bw] : it->second.link_bandwidth) {
            (void)link;
            outstanding_bandwidth_ -= bw;
        }
        outstanding_server_.cpu -= it->second.server_reserved.cpu;
        outstanding_server_.net -= it->second.server_reserved.net;
        outstanding_server_.ram -= it->second.server_reserved.ram;
        return it->second;
    }

    bool is_released(long key) const {
        auto it = entries_.find(key);
        return it != entries_.end() && it->second.released;
    }

    double outstanding_bandwidth() const { return outstanding_bandwidth_; }
    const resource_vector& outstanding_server() const { return outstanding_server_; }

    // Sum of still-held allocations, recomputed from the entries rather than
    // from running sums so that a fully released ledger is exactly zero.
    double imbalance() const {
        double held = 0.0;
        for (const auto& [key, a] : entries_) {
            (void)key;
            if (a.released) continue;
            for (const auto& [link, bw] : a.link_bandwidth) {
                (void)link;
                held += bw;
            }
            held += a.server_reserved.cpu + a.server_reserved.net + a.server_reserved.ram;
        }
        return held;
    }

    std::size_t size() const { return entries_.size(); }

  private:
    std::map<long, allocation> entries_;
    double outstanding_bandwidth_ = 0.0;
    resource_vector outstanding_server_;
};

}  // namespace fqos
