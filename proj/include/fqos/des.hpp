#pragma once

// Discrete-slot simulation kernel: clock, totally ordered event queue, and
// bookkeeping counters.  Single-threaded per run; determinism comes from the
// (slot, sequence) total order with sequence assigned at scheduling time.

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace fqos {

enum class event_kind { arrival, service_complete, window_boundary, announcement, rebalance };

inline const char* to_string(event_kind k) {
    switch (k) {
        case event_kind::arrival: return "arrival";
        case event_kind::service_complete: return "service_complete";
        case event_kind::window_boundary: return "window_boundary";
        case event_kind::announcement: return "announcement";
        case event_kind::rebalance: return "rebalance";
    }
    return "?";
}

struct event_record {
    long slot = 0;
    std::uint64_t sequence = 0;  // within-slot tiebreak, globally unique
    event_kind kind = event_kind::arrival;
    int entity = -1;             // entity reference, meaning owned by the handler
    double detail = 0.0;         // free-form payload slot for logs
};

struct sim_clock {
    long current_slot = 0;
    double slot_duration = 1.0;
};

class scheduler {
  public:
    using handler = std::function<void(const event_record&)>;

    explicit scheduler(double slot_duration = 1.0) { clock_.slot_duration = slot_duration; }

    const sim_clock& clock() const { return clock_; }
    long current_slot() const { return clock_.current_slot; }

    // Returns the event's sequence number (acknowledgment + cancellation handle).
    std::uint64_t schedule(long slot, event_kind kind, int entity, double detail, handler fn) {
        if (slot < clock_.current_slot)
            throw std::invalid_argument("scheduler: cannot schedule into the past");
        pending_entry e;
        e.rec.slot = slot;
        e.rec.sequence = next_sequence_++;
        e.rec.kind = kind;
        e.rec.entity = entity;
        e.rec.detail = detail;
        e.fn = std::move(fn);
        const std::uint64_t handle = e.rec.sequence;
        queue_.push(std::move(e));
        ++scheduled_;
        return handle;
    }

    // Marks an event as cancelled; it is discarded (not executed) when reached.
    void cancel(std::uint64_t sequence) {
        if (sequence >= next_sequence_) throw std::invalid_argument("scheduler: unknown event");
        cancelled_set_.insert(sequence);
    }

    // Executes all events with slot < bound in (slot, sequence) order, then
    // advances the clock to bound.
    void run_until(long bound) {
        if (bound < clock_.current_slot)
            throw std::invalid_argument("scheduler: run_until into the past");
        while (!queue_.empty() && queue_.top().rec.slot < bound) {
            pending_entry e = queue_.top();
            queue_.pop();
            clock_.current_slot = e.rec.slot;
            auto it = cancelled_set_.find(e.rec.sequence);
            if (it != cancelled_set_.end()) {
                cancelled_set_.erase(it);
                ++cancelled_;
                continue;
            }
            ++executed_;
            if (log_) log_->push_back(e.rec);
            e.fn(e.rec);
        }
        clock_.current_slot = bound;
    }

    bool empty() const { return queue_.empty(); }

    // Counters: scheduled = executed + cancelled + pending, checked in tests.
    std::uint64_t scheduled_count() const { return scheduled_; }
    std::uint64_t executed_count() const { return executed_; }
    std::uint64_t cancelled_count() const { return cancelled_; }
    std::uint64_t pending_count() const { return queue_.size(); }

    bool counters_balance() const {
        return scheduled_ == executed_ + cancelled_ + pending_count();
    }

    // Optional structured event log for debugging.
    void attach_log(std::vector<event_record>* log) { log_ = log; }

  private:
    struct pending_entry {
        event_record rec;
        handler fn;
    };
    struct later {
        bool operator()(const pending_entry& a, const pending_entry& b) const {
            if (a.rec.slot != b.rec.slot) return a.rec.slot > b.rec.slot;
            return a.rec.sequence > b.rec.sequence;
        }
    };

    sim_clock clock_;
    std::priority_queue<pending_entry, std::vector<pending_entry>, later> queue_;
    std::uint64_t next_sequence_ = 0;
    std::uint64_t scheduled_ = 0, executed_ = 0, cancelled_ = 0;
    std::unordered_set<std::uint64_t> cancelled_set_;
    std::vector<event_record>* log_ = nullptr;
};

}  // namespace fqos
