#pragma once

// Per-slot workload series: the universal currency between generators,
// estimators, and the simulator.  One value per time slot, work-units per
// slot, never negative.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fqos {

struct traffic_trace {
    std::vector<double> slots;        // work-units per slot, all >= 0
    double slot_duration = 1.0;       // time units per slot
    std::optional<int> origin_class;  // service class id, when attributable

    std::size_t size() const { return slots.size(); }
    double operator[](std::size_t i) const { return slots[i]; }

    double mean() const {
        if (slots.empty()) throw std::invalid_argument("traffic_trace: empty trace has no mean");
        double s = 0.0;
        for (double v : slots) s += v;
        return s / static_cast<double>(slots.size());
    }

    void validate() const {
        if (slots.empty()) throw std::invalid_argument("traffic_trace: length must be >= 1");
        if (!(slot_duration > 0.0)) throw std::invalid_argument("traffic_trace: slot_duration must be > 0");
        for (double v : slots)
            if (!(v >= 0.0)) throw std::invalid_argument("traffic_trace: negative slot value");
    }
};

// CSV round-trip: header "slot_index,value", one row per slot.  The header
// line is required on import.
inline void write_trace_csv(const traffic_trace& t, std::ostream& out) {
    out << "slot_index,value\n";
    for (std::size_t i = 0; i < t.slots.size(); ++i) {
        out << i << ',';
        // Max-precision round-trip so re-analysis of an exported trace is exact.
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", t.slots[i]);
        out << buf << '\n';
    }
}

inline void write_trace_csv(const traffic_trace& t, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    write_trace_csv(t, f);
}

inline traffic_trace read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("trace csv: empty file");
    // Tolerate a UTF-8 BOM and trailing CR.
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "slot_index,value")
        throw std::runtime_error("trace csv: missing required header 'slot_index,value'");
    traffic_trace t;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("trace csv: malformed row " + std::to_string(row));
        std::size_t idx = 0;
        double val = 0.0;
        try {
            idx = std::stoull(line.substr(0, comma));
            val = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw std::runtime_error("trace csv: unparsable row " + std::to_string(row));
        }
        if (idx != row)
            throw std::runtime_error("trace csv: slot_index gap at row " + std::to_string(row));
        if (!(val >= 0.0))
            throw std::runtime_error("trace csv: negative value at row " + std::to_string(row));
        t.slots.push_back(val);
        ++row;
    }
    t.validate();
    return t;
}

inline traffic_trace read_trace_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open trace csv: " + path);
    return read_trace_csv(f);
}

}  // namespace fqos
