#include "catch_amalgamated.hpp"

#include <fqos/des.hpp>

#include <string>
#include <vector>

using namespace fqos;

// ============================================================================
// Helper: record execution order as "<slot>:<entity>" strings
// ============================================================================

static scheduler::handler tracer(std::vector<std::string>& out) {
    return [&out](const event_record& e) {
        out.push_back(std::to_string(e.slot) + ":" + std::to_string(e.entity));
    };
}

// ============================================================================
// Ordering
// ============================================================================

TEST_CASE("events run in slot order regardless of scheduling order", "[des][order]") {
    scheduler sched;
    std::vector<std::string> seen;
    sched.schedule(5, event_kind::arrival, 1, 0.0, tracer(seen));
    sched.schedule(2, event_kind::arrival, 2, 0.0, tracer(seen));
    sched.schedule(9, event_kind::arrival, 3, 0.0, tracer(seen));
    sched.schedule(2, event_kind::arrival, 4, 0.0, tracer(seen));

    sched.run_until(10);
    REQUIRE(seen == std::vector<std::string>{"2:2", "2:4", "5:1", "9:3"});
    REQUIRE(sched.current_slot() == 10);
}

TEST_CASE("same-slot events run in scheduling (sequence) order", "[des][order]") {
    scheduler sched;
    std::vector<std::string> seen;
    for (int i = 0; i < 6; ++i) sched.schedule(3, event_kind::service_complete, i, 0.0, tracer(seen));
    sched.run_until(4);
    REQUIRE(seen == std::vector<std::string>{"3:0", "3:1", "3:2", "3:3", "3:4", "3:5"});
}

TEST_CASE("run_until executes strictly below the bound", "[des][order]") {
    scheduler sched;
    std::vector<std::string> seen;
    sched.schedule(4, event_kind::arrival, 1, 0.0, tracer(seen));
    sched.schedule(5, event_kind::arrival, 2, 0.0, tracer(seen));

    sched.run_until(5);
    REQUIRE(seen == std::vector<std::string>{"4:1"});
    REQUIRE(sched.current_slot() == 5);
    REQUIRE(sched.pending_count() == 1);

    sched.run_until(6);
    REQUIRE(seen == std::vector<std::string>{"4:1", "5:2"});
}

TEST_CASE("handlers may schedule follow-up events during a run", "[des][order]") {
    scheduler sched;
    std::vector<std::string> seen;
    sched.schedule(1, event_kind::arrival, 0, 0.0, [&](const event_record& e) {
        seen.push_back("first");
        // Same-slot follow-up is legal and must still run before slot 2.
        sched.schedule(e.slot, event_kind::service_complete, 0, 0.0,
                       [&](const event_record&) { seen.push_back("second"); });
        sched.schedule(e.slot + 3, event_kind::service_complete, 0, 0.0,
                       [&](const event_record&) { seen.push_back("third"); });
    });
    sched.run_until(10);
    REQUIRE(seen == std::vector<std::string>{"first", "second", "third"});
    REQUIRE(sched.empty());
}

// ============================================================================
// Cancellation
// ============================================================================

TEST_CASE("cancelled events are discarded, not executed", "[des][cancel]") {
    scheduler sched;
    std::vector<std::string> seen;
    sched.schedule(1, event_kind::arrival, 1, 0.0, tracer(seen));
    auto h = sched.schedule(2, event_kind::arrival, 2, 0.0, tracer(seen));
    sched.schedule(3, event_kind::arrival, 3, 0.0, tracer(seen));
    sched.cancel(h);

    sched.run_until(10);
    REQUIRE(seen == std::vector<std::string>{"1:1", "3:3"});
    REQUIRE(sched.cancelled_count() == 1);
    REQUIRE(sched.executed_count() == 2);
}

TEST_CASE("cancelling an unknown handle throws", "[des][cancel][error]") {
    scheduler sched;
    REQUIRE_THROWS_AS(sched.cancel(42), std::invalid_argument);
}

// ============================================================================
// Counters
// ============================================================================

TEST_CASE("scheduled = executed + cancelled + pending at every stage", "[des][counters]") {
    scheduler sched;
    std::vector<std::string> seen;
    std::vector<std::uint64_t> handles;
    for (int i = 0; i < 10; ++i)
        handles.push_back(sched.schedule(i, event_kind::arrival, i, 0.0, tracer(seen)));
    REQUIRE(sched.counters_balance());
    REQUIRE(sched.pending_count() == 10);

    sched.cancel(handles[7]);
    sched.cancel(handles[8]);
    REQUIRE(sched.counters_balance());  // cancellation is counted on execution reach

    sched.run_until(5);
    REQUIRE(sched.counters_balance());
    REQUIRE(sched.executed_count() == 5);

    sched.run_until(100);
    REQUIRE(sched.counters_balance());
    REQUIRE(sched.scheduled_count() == 10);
    REQUIRE(sched.executed_count() == 8);
    REQUIRE(sched.cancelled_count() == 2);
    REQUIRE(sched.pending_count() == 0);
    REQUIRE(sched.empty());
}

// ============================================================================
// Clock discipline
// ============================================================================

TEST_CASE("scheduling into the past throws", "[des][error]") {
    scheduler sched;
    sched.schedule(3, event_kind::arrival, 0, 0.0, [](const event_record&) {});
    sched.run_until(5);
    REQUIRE(sched.current_slot() == 5);
    REQUIRE_THROWS_AS(sched.schedule(4, event_kind::arrival, 0, 0.0, [](const event_record&) {}),
                      std::invalid_argument);
    // Scheduling exactly at the current slot is allowed.
    REQUIRE_NOTHROW(sched.schedule(5, event_kind::arrival, 0, 0.0, [](const event_record&) {}));
}

TEST_CASE("run_until into the past throws", "[des][error]") {
    scheduler sched;
    sched.run_until(7);
    REQUIRE_THROWS_AS(sched.run_until(6), std::invalid_argument);
}

TEST_CASE("slot duration is carried by the clock", "[des][clock]") {
    scheduler sched(0.25);
    REQUIRE(sched.clock().slot_duration == Catch::Approx(0.25));
    REQUIRE(sched.clock().current_slot == 0);
}

// ============================================================================
// Event log
// ============================================================================

TEST_CASE("attached log records executed events only, in order", "[des][log]") {
    scheduler sched;
    std::vector<event_record> log;
    sched.attach_log(&log);
    sched.schedule(2, event_kind::window_boundary, 5, 1.5, [](const event_record&) {});
    auto h = sched.schedule(1, event_kind::rebalance, 6, 0.0, [](const event_record&) {});
    sched.cancel(h);
    sched.run_until(10);

    REQUIRE(log.size() == 1);
    REQUIRE(log[0].slot == 2);
    REQUIRE(log[0].kind == event_kind::window_boundary);
    REQUIRE(log[0].entity == 5);
    REQUIRE(log[0].detail == Catch::Approx(1.5));
}

TEST_CASE("event kinds have printable names", "[des][log]") {
    REQUIRE(std::string(to_string(event_kind::arrival)) == "arrival");
    REQUIRE(std::string(to_string(event_kind::service_complete)) == "service_complete");
    REQUIRE(std::string(to_string(event_kind::window_boundary)) == "window_boundary");
    REQUIRE(std::string(to_string(event_kind::announcement)) == "announcement");
    REQUIRE(std::string(to_string(event_kind::rebalance)) == "rebalance");
}
