#pragma once

// Adaptive buffering / channel-capacity control.
//
// The dependencies buffer = f(Net, lambda, H, sigma_var) and
// Net = phi(Q_w, lambda, H, sigma_var) are empirical: `calibrate` sweeps a
// (rho, H, sigma_var) grid, and for each cell binary-searches the smallest
// buffer whose mean loss over seed replications stays at or below the loss
// target.  The probe is a fluid single-server queue (work in, spill above
// buffer+capacity, capacity drained per slot), which is the exact envelope
// of the unit-packet node and ~100x faster.  Cells are independent and may
// be computed in parallel; results depend only on cell coordinates + seeds.
//
// Queries interpolate linearly in rho over bilinear (H, sigma_var) planes;
// the same composition is used by the forward lookup and the inverse so the
// round-trip property holds to float precision.  Saturated cells (target
// unreachable, or rho >= 1) poison any interpolation that touches them: the
// caller must grow capacity instead.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "estimators.hpp"
#include "generator.hpp"
#include "rng.hpp"
#include "trace.hpp"

namespace fqos {

// Loss fraction of a fluid queue: per-slot work x, fixed drain `capacity`,
// spill above buffer+capacity is lost.
inline double fluid_loss_fraction(const std::vector<double>& x, double capacity, double buffer) {
    double q = 0.0, lost = 0.0, total = 0.0;
    const double top = buffer + capacity;
    for (double v : x) {
        total += v;
        q += v;
        if (q > top) {
            lost += q - top;
            q = top;
        }
        q = std::max(q - capacity, 0.0);
    }
    return total > 0.0 ? lost / total : 0.0;
}

struct calibration_grid {
    std::vector<double> rho{0.3, 0.5, 0.7, 0.8, 0.9, 0.95};
    std::vector<double> hurst{0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> sigma_var{0.5, 1.0, 2.0, 3.0, 4.0};
    int seeds = 10;
    double loss_target = 0.01;
    std::size_t probe_slots = 16384;
    int cascade_depth = 10;       // canonical burst scale: one block = one window
    double envelope_cv = 0.25;
    double max_buffer_norm = 4096.0;  // probe ceiling, buffer per unit mean rate
    std::size_t window = 1024;
    std::uint64_t master_seed = 20260814;

    void validate() const {
        if (rho.empty() || hurst.empty() || sigma_var.empty())
            throw std::invalid_argument("calibration_grid: axes must be non-empty");
        if (!(loss_target > 0.0 && loss_target <= 0.2))
            throw std::invalid_argument("calibration_grid: loss_target must be in (0, 0.2]");
        if (seeds < 1) throw std::invalid_argument("calibration_grid: seeds must be >= 1");
        auto sorted = [](const std::vector<double>& v) {
            for (std::size_t i = 1; i < v.size(); ++i)
                if (!(v[i] > v[i - 1])) return false;
            return true;
        };
        if (!sorted(rho) || !sorted(hurst) || !sorted(sigma_var))
            throw std::invalid_argument("calibration_grid: axes must be strictly increasing");
        for (double h : hurst)
            if (!(h > 0.0 && h < 1.0))
                throw std::invalid_argument("calibration_grid: H axis must lie in (0,1)");
    }
};

struct calibration_cell {
    double buffer_norm = 0.0;  // minimal buffer per unit mean rate
    bool saturated = false;    // loss target unreachable at the probe ceiling
};

struct buffer_query_result {
    double buffer = 0.0;       // work-units (buffer_norm * lambda)
    double buffer_norm = 0.0;
    bool saturated = false;
    bool clamped = false;      // some coordinate was outside the grid
};

struct capacity_query_result {
    double net = 0.0;          // smallest capacity whose required buffer fits
    bool at_boundary = false;  // clamped to the table's utilization range
};

class calibration_table {
  public:
    calibration_table() = default;

    static calibration_table calibrate(const calibration_grid& grid, unsigned workers = 0) {
        grid.validate();
        calibration_table t;
        t.grid_ = grid;
        const std::size_t n = grid.rho.size() * grid.hurst.size() * grid.sigma_var.size();
        t.cells_.assign(n, calibration_cell{});
        if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
        workers = std::min<unsigned>(workers, static_cast<unsigned>(n));

        auto work = [&t, &grid](std::size_t begin, std::size_t end) {
            for (std::size_t idx = begin; idx < end; ++idx)
                t.cells_[idx] = calibrate_cell(grid, t.coords(idx));
        };
        if (workers <= 1) {
            work(0, n);
        } else {
            std::vector<std::future<void>> futs;
            const std::size_t chunk = (n + workers - 1) / workers;
            for (unsigned w = 0; w < workers; ++w) {
                std::size_t b = w * chunk;
                std::size_t e = std::min(n, b + chunk);
                if (b >= e) break;
                futs.push_back(std::async(std::launch::async, work, b, e));
            }
            for (auto& f : futs) f.get();
        }
        t.make_isotonic();
        return t;
    }

    const calibration_grid& grid() const { return grid_; }

    const calibration_cell& cell(std::size_t ir, std::size_t ih, std::size_t is) const {
        return cells_[index(ir, ih, is)];
    }

    // f(Net, lambda, H, sigma_var): interpolated minimal buffer.
    buffer_query_result required_buffer(double net, double lambda, double hurst, double sigma_var) const {
        require_loaded();
        if (!(net > 0.0)) throw std::invalid_argument("required_buffer: Net must be > 0");
        if (!(lambda >= 0.0)) throw std::invalid_argument("required_buffer: lambda must be >= 0");
        buffer_query_result r;
        if (lambda >= net) {  // at or beyond saturation by definition
            r.saturated = true;
            return r;
        }
        if (lambda == 0.0) return r;  // no traffic needs no buffer
        const double rho = lambda / net;
        auto norm = interpolate_norm(rho, hurst, sigma_var);
        r.buffer_norm = norm.value;
        r.saturated = norm.saturated;
        r.clamped = norm.clamped;
        r.buffer = norm.saturated ? 0.0 : norm.value * lambda;
        return r;
    }

    // phi(Q_w, lambda, H, sigma_var): smallest Net whose required buffer fits
    // inside Q_w, found by inverting the piecewise-linear rho profile.
    capacity_query_result required_capacity(double q_w, double lambda, double hurst, double sigma_var) const {
        require_loaded();
        if (!(q_w > 0.0)) throw std::invalid_argument("required_capacity: Q_w must be > 0");
        if (!(lambda > 0.0)) throw std::invalid_argument("required_capacity: lambda must be > 0");
        const double target_norm = q_w / lambda;
        const auto& rho_axis = grid_.rho;

        // Profile of interpolated norms along the rho axis at (H, sigma_var).
        std::vector<double> prof(rho_axis.size());
        std::vector<bool> sat(rho_axis.size());
        for (std::size_t i = 0; i < rho_axis.size(); ++i) {
            auto v = plane_norm(i, hurst, sigma_var);
            prof[i] = v.value;
            sat[i] = v.saturated;
        }

        capacity_query_result r;
        if (sat[0] || prof[0] > target_norm) {
            // Even the lowest tabulated utilization needs more buffer: return
            // the most generous capacity the table can justify, flagged.
            r.net = lambda / rho_axis.front();
            r.at_boundary = true;
            return r;
        }
        double best_rho = rho_axis.front();
        for (std::size_t i = 0; i + 1 < rho_axis.size(); ++i) {
            if (sat[i + 1] || prof[i + 1] > target_norm) {
                if (!sat[i + 1] && prof[i + 1] > prof[i]) {
                    double f = (target_norm - prof[i]) / (prof[i + 1] - prof[i]);
                    double rho_star = rho_axis[i] + f * (rho_axis[i + 1] - rho_axis[i]);
                    // Guard against rounding pushing past the feasibility edge.
                    while (rho_star > rho_axis[i] &&
                           interpolate_norm(rho_star, hurst, sigma_var).value > target_norm)
                        rho_star = std::nextafter(rho_star, rho_axis[i]);
                    best_rho = std::max(best_rho, rho_star);
                } else {
                    best_rho = std::max(best_rho, rho_axis[i]);
                }
                r.net = lambda / best_rho;
                return r;
            }
            best_rho = rho_axis[i + 1];
        }
        // Fits everywhere the table covers: cannot justify utilization beyond
        // the grid, so report the grid's top.
        r.net = lambda / rho_axis.back();
        return r;
    }

    bool is_isotonic() const {
        auto leq = [&](std::size_t a, std::size_t b) {
            // saturated counts as +infinity
            if (cells_[a].saturated) return cells_[b].saturated;
            if (cells_[b].saturated) return true;
            return cells_[a].buffer_norm <= cells_[b].buffer_norm;
        };
        const std::size_t nr = grid_.rho.size(), nh = grid_.hurst.size(), ns = grid_.sigma_var.size();
        for (std::size_t ir = 0; ir < nr; ++ir)
            for (std::size_t ih = 0; ih < nh; ++ih)
                for (std::size_t is = 0; is < ns; ++is) {
                    if (ir + 1 < nr && !leq(index(ir, ih, is), index(ir + 1, ih, is))) return false;
                    if (ih + 1 < nh && !leq(index(ir, ih, is), index(ir, ih + 1, is))) return false;
                    if (is + 1 < ns && !leq(index(ir, ih, is), index(ir, ih, is + 1))) return false;
                }
        return true;
    }

    // CSV with the fixed header plus a JSON metadata sidecar at path + ".json".
    void save(const std::string& csv_path) const {
        require_loaded();
        std::ofstream f(csv_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open for writing: " + csv_path);
        f << "rho,H,sigma_var,buffer_norm,saturated\n";
        char buf[256];
        for (std::size_t ir = 0; ir < grid_.rho.size(); ++ir)
            for (std::size_t ih = 0; ih < grid_.hurst.size(); ++ih)
                for (std::size_t is = 0; is < grid_.sigma_var.size(); ++is) {
                    const auto& c = cells_[index(ir, ih, is)];
                    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", grid_.rho[ir],
                                  grid_.hurst[ih], grid_.sigma_var[is], c.buffer_norm,
                                  c.saturated ? 1 : 0);
                    f << buf;
                }
        std::ofstream m(csv_path + ".json", std::ios::binary);
        if (!m) throw std::runtime_error("cannot open for writing: " + csv_path + ".json");
        std::snprintf(buf, sizeof buf,
                      "{\n  \"version\": 1,\n  \"loss_target\": %.17g,\n  \"seeds\": %d,\n"
                      "  \"window\": %zu,\n  \"probe_slots\": %zu,\n  \"cascade_depth\": %d,\n"
                      "  \"envelope_cv\": %.17g,\n  \"max_buffer_norm\": %.17g,\n  \"master_seed\": %llu\n}\n",
                      grid_.loss_target, grid_.seeds, grid_.window, grid_.probe_slots,
                      grid_.cascade_depth, grid_.envelope_cv, grid_.max_buffer_norm,
                      static_cast<unsigned long long>(grid_.master_seed));
        m << buf;
    }

    static calibration_table load(const std::string& csv_path) {
        std::ifstream f(csv_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open calibration table: " + csv_path);
        std::string line;
        if (!std::getline(f, line)) throw std::runtime_error("calibration table: empty file");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != "rho,H,sigma_var,buffer_norm,saturated")
            throw std::runtime_error("calibration table: unexpected header");
        struct row {
            double rho, h, s, norm;
            bool sat;
        };
        std::vector<row> rows;
        while (std::getline(f, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            row r{};
            int sat_int = 0;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%d", &r.rho, &r.h, &r.s, &r.norm, &sat_int) != 5)
                throw std::runtime_error("calibration table: malformed row: " + line);
            r.sat = sat_int != 0;
            rows.push_back(r);
        }
        calibration_table t;
        auto collect = [&rows](auto get) {
            std::vector<double> axis;
            for (const auto& r : rows) axis.push_back(get(r));
            std::sort(axis.begin(), axis.end());
            axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
            return axis;
        };
        t.grid_.rho = collect([](const row& r) { return r.rho; });
        t.grid_.hurst = collect([](const row& r) { return r.h; });
        t.grid_.sigma_var = collect([](const row& r) { return r.s; });
        const std::size_t n = t.grid_.rho.size() * t.grid_.hurst.size() * t.grid_.sigma_var.size();
        if (rows.size() != n)
            throw std::runtime_error("calibration table: rows do not form a full grid");
        t.cells_.assign(n, calibration_cell{});
        std::vector<bool> seen(n, false);
        auto find = [](const std::vector<double>& axis, double v) {
            auto it = std::lower_bound(axis.begin(), axis.end(), v);
            if (it == axis.end() || *it != v) throw std::runtime_error("calibration table: stray axis value");
            return static_cast<std::size_t>(it - axis.begin());
        };
        for (const auto& r : rows) {
            std::size_t idx = t.index(find(t.grid_.rho, r.rho), find(t.grid_.hurst, r.h),
                                      find(t.grid_.sigma_var, r.s));
            if (seen[idx]) throw std::runtime_error("calibration table: duplicate cell");
            seen[idx] = true;
            t.cells_[idx] = calibration_cell{r.norm, r.sat};
        }
        t.load_sidecar(csv_path + ".json");
        return t;
    }

    struct norm_result {
        double value = 0.0;
        bool saturated = false;
        bool clamped = false;
    };

    // Linear in rho over bilinear (H, sigma_var) planes; coordinates outside
    // the grid clamp to the boundary and set the flag.
    norm_result interpolate_norm(double rho, double hurst, double sigma_var) const {
        require_loaded();
        norm_result out;
        auto [i0, i1, fr, cl] = bracket(grid_.rho, rho);
        out.clamped = cl;
        auto lo = plane_norm(i0, hurst, sigma_var);
        auto hi = plane_norm(i1, hurst, sigma_var);
        out.clamped = out.clamped || lo.clamped || hi.clamped;
        if (lo.saturated || hi.saturated) {
            // Interpolating against a saturated plane has no defined value.
            out.saturated = fr > 0.0 || lo.saturated;
            if (!out.saturated) out.value = lo.value;
            return out;
        }
        out.value = lo.value + fr * (hi.value - lo.value);
        return out;
    }

  private:
    struct bracket_result {
        std::size_t i0, i1;
        double frac;
        bool clamped;
    };

    static bracket_result bracket(const std::vector<double>& axis, double v) {
        if (axis.size() == 1) return {0, 0, 0.0, v != axis[0]};
        if (v <= axis.front()) return {0, 0, 0.0, v < axis.front()};
        if (v >= axis.back())
            return {axis.size() - 1, axis.size() - 1, 0.0, v > axis.back()};
        std::size_t hi = static_cast<std::size_t>(
            std::upper_bound(axis.begin(), axis.end(), v) - axis.begin());
        std::size_t lo = hi - 1;
        double f = (v - axis[lo]) / (axis[hi] - axis[lo]);
        return {lo, hi, f, false};
    }

    // Bilinear (H, sigma_var) interpolation within one rho plane.
    norm_result plane_norm(std::size_t ir, double hurst, double sigma_var) const {
        auto bh = bracket(grid_.hurst, hurst);
        auto bs = bracket(grid_.sigma_var, sigma_var);
        norm_result out;
        out.clamped = bh.clamped || bs.clamped;
        const calibration_cell* c00 = &cells_[index(ir, bh.i0, bs.i0)];
        const calibration_cell* c01 = &cells_[index(ir, bh.i0, bs.i1)];
        const calibration_cell* c10 = &cells_[index(ir, bh.i1, bs.i0)];
        const calibration_cell* c11 = &cells_[index(ir, bh.i1, bs.i1)];
        for (const auto* c : {c00, c01, c10, c11}) {
            if (c->saturated) {
                out.saturated = true;
                return out;
            }
        }
        double v0 = c00->buffer_norm + bs.frac * (c01->buffer_norm - c00->buffer_norm);
        double v1 = c10->buffer_norm + bs.frac * (c11->buffer_norm - c10->buffer_norm);
        out.value = v0 + bh.frac * (v1 - v0);
        return out;
    }

    std::size_t index(std::size_t ir, std::size_t ih, std::size_t is) const {
        return (ir * grid_.hurst.size() + ih) * grid_.sigma_var.size() + is;
    }

    struct cell_coords {
        std::size_t ir, ih, is;
    };
    cell_coords coords(std::size_t idx) const {
        const std::size_t ns = grid_.sigma_var.size();
        const std::size_t nh = grid_.hurst.size();
        return {idx / (nh * ns), (idx / ns) % nh, idx % ns};
    }

    static calibration_cell calibrate_cell(const calibration_grid& grid, cell_coords cc) {
        const double rho = grid.rho[cc.ir];
        const double hurst = grid.hurst[cc.ih];
        const double sigma_var = grid.sigma_var[cc.is];
        calibration_cell cell;
        if (rho >= 1.0) {
            // An overloaded queue has unbounded backlog: saturated by definition.
            cell.saturated = true;
            cell.buffer_norm = grid.max_buffer_norm;
            return cell;
        }

        // Cell identity seeds derive from the coordinates' values, so grid
        // reordering or extension never changes an existing cell's result.
        std::uint64_t cell_seed = grid.master_seed;
        for (double v : {rho, hurst, sigma_var}) {
            std::uint64_t bits;
            static_assert(sizeof bits == sizeof v);
            std::memcpy(&bits, &v, sizeof bits);
            cell_seed = splitmix64(cell_seed ^ bits);
        }

        const double capacity = 1.0 / rho;  // probe at unit mean rate
        double weight = solve_cascade_weight(sigma_var, grid.envelope_cv, grid.cascade_depth);
        std::vector<std::vector<double>> traces;
        traces.reserve(static_cast<std::size_t>(grid.seeds));
        for (int k = 0; k < grid.seeds; ++k) {
            generator_spec spec;
            spec.target_H = hurst;
            spec.target_intensity = 1.0;
            spec.cascade_depth = weight > 0.5 ? grid.cascade_depth : 0;
            spec.cascade_weight = weight > 0.5 ? weight : 0.5;
            spec.length = grid.probe_slots;
            spec.envelope_cv = grid.envelope_cv;
            spec.seed = splitmix64(cell_seed + static_cast<std::uint64_t>(k));
            traces.push_back(compose_traffic(spec).slots);
        }
        auto mean_loss = [&](double buffer) {
            double acc = 0.0;
            for (const auto& x : traces) acc += fluid_loss_fraction(x, capacity, buffer);
            return acc / static_cast<double>(traces.size());
        };
        if (mean_loss(grid.max_buffer_norm) > grid.loss_target) {
            cell.saturated = true;
            cell.buffer_norm = grid.max_buffer_norm;
            return cell;
        }
        double lo = 0.0, hi = grid.max_buffer_norm;
        if (mean_loss(0.0) <= grid.loss_target) {
            cell.buffer_norm = 0.0;
            return cell;
        }
        for (int iter = 0; iter < 25; ++iter) {
            double mid = 0.5 * (lo + hi);
            if (mean_loss(mid) <= grid.loss_target)
                hi = mid;
            else
                lo = mid;
        }
        cell.buffer_norm = hi;
        return cell;
    }

    // Smallest monotone envelope: running max along each axis in turn, with
    // saturation as +infinity (it propagates upward along every axis).
    void make_isotonic() {
        const std::size_t nr = grid_.rho.size(), nh = grid_.hurst.size(), ns = grid_.sigma_var.size();
        auto lift = [&](std::size_t from, std::size_t to) {
            auto& a = cells_[from];
            auto& b = cells_[to];
            if (a.saturated) {
                b.saturated = true;
                b.buffer_norm = std::max(b.buffer_norm, a.buffer_norm);
            } else if (!b.saturated) {
                b.buffer_norm = std::max(b.buffer_norm, a.buffer_norm);
            }
        };
        for (std::size_t ih = 0; ih < nh; ++ih)
            for (std::size_t is = 0; is < ns; ++is)
                for (std::size_t ir = 1; ir < nr; ++ir) lift(index(ir - 1, ih, is), index(ir, ih, is));
        for (std::size_t ir = 0; ir < nr; ++ir)
            for (std::size_t is = 0; is < ns; ++is)
                for (std::size_t ih = 1; ih < nh; ++ih) lift(index(ir, ih - 1, is), index(ir, ih, is));
        for (std::size_t ir = 0; ir < nr; ++ir)
            for (std::size_t ih = 0; ih < nh; ++ih)
                for (std::size_t is = 1; is < ns; ++is) lift(index(ir, ih, is - 1), index(ir, ih, is));
    }

    void load_sidecar(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) return;  // sidecar is advisory; CSV alone is usable
        std::stringstream ss;
        ss << f.rdbuf();
        const std::string s = ss.str();
        auto grab = [&s](const char* key, double fallback) {
            auto pos = s.find(std::string("\"") + key + "\"");
            if (pos == std::string::npos) return fallback;
            pos = s.find(':', pos);
            if (pos == std::string::npos) return fallback;
            return std::stod(s.substr(pos + 1));
        };
        grid_.loss_target = grab("loss_target", grid_.loss_target);
        grid_.seeds = static_cast<int>(grab("seeds", grid_.seeds));
        grid_.window = static_cast<std::size_t>(grab("window", static_cast<double>(grid_.window)));
        grid_.probe_slots = static_cast<std::size_t>(grab("probe_slots", static_cast<double>(grid_.probe_slots)));
        grid_.cascade_depth = static_cast<int>(grab("cascade_depth", grid_.cascade_depth));
        grid_.envelope_cv = grab("envelope_cv", grid_.envelope_cv);
        grid_.max_buffer_norm = grab("max_buffer_norm", grid_.max_buffer_norm);
        grid_.master_seed = static_cast<std::uint64_t>(grab("master_seed", static_cast<double>(grid_.master_seed)));
    }

    void require_loaded() const {
        if (cells_.empty()) throw std::logic_error("calibration_table: not loaded");
    }

    calibration_grid grid_;
    std::vector<calibration_cell> cells_;
};

enum class control_action { none, grow_buffer, grow_capacity, both };

struct control_limits {
    double buffer_floor = 0.0;
    double buffer_ceiling = std::numeric_limits<double>::infinity();
    double capacity_floor = 0.0;
    double capacity_ceiling = std::numeric_limits<double>::infinity();
};

struct control_decision {
    long window_index = 0;
    fractal_signature sig;
    double current_buffer = 0.0;
    double current_capacity = 0.0;
    double recommended_buffer = 0.0;
    double recommended_capacity = 0.0;
    control_action action = control_action::none;
    bool estimator_failed = false;
    bool table_saturated = false;
};

// One monitoring step: estimate the window's signature, look up the required
// buffer at the current capacity, fall back to capacity growth when the
// table saturates or the buffer would exceed its ceiling.  Grow-only.
inline control_decision control_step(const calibration_table& table, const traffic_trace& window_arrivals,
                                     double current_buffer, double current_capacity,
                                     const control_limits& limits, long window_index) {
    control_decision d;
    d.window_index = window_index;
    d.current_buffer = current_buffer;
    d.current_capacity = current_capacity;
    d.recommended_buffer = current_buffer;
    d.recommended_capacity = current_capacity;
    try {
        d.sig = signature(window_arrivals);
    } catch (const std::invalid_argument&) {
        d.estimator_failed = true;
        return d;
    }
    const double lambda = d.sig.intensity_lambda;
    if (!(lambda > 0.0)) return d;

    double want_buffer = current_buffer;
    double want_capacity = current_capacity;
    auto rb = table.required_buffer(current_capacity, lambda, d.sig.hurst_H, d.sig.sigma_var);
    bool need_capacity = rb.saturated || (!rb.saturated && rb.buffer > limits.buffer_ceiling);
    d.table_saturated = rb.saturated;
    if (!need_capacity) {
        want_buffer = std::max(want_buffer, rb.buffer);
    } else {
        const double q_for_inverse = std::min(
            std::max(current_buffer, limits.buffer_floor) > 0.0 ? std::max(current_buffer, limits.buffer_floor)
                                                                : limits.buffer_ceiling,
            limits.buffer_ceiling);
        if (q_for_inverse > 0.0 && std::isfinite(q_for_inverse)) {
            auto rc = table.required_capacity(q_for_inverse, lambda, d.sig.hurst_H, d.sig.sigma_var);
            want_capacity = std::max(want_capacity, std::min(rc.net, limits.capacity_ceiling));
        } else {
            want_capacity = limits.capacity_ceiling;
        }
        // With capacity granted, re-derive the buffer at the new operating point.
        auto rb2 = table.required_buffer(want_capacity, lambda, d.sig.hurst_H, d.sig.sigma_var);
        if (!rb2.saturated) want_buffer = std::max(want_buffer, std::min(rb2.buffer, limits.buffer_ceiling));
    }
    d.recommended_buffer = std::min(std::max(want_buffer, current_buffer), std::max(limits.buffer_ceiling, current_buffer));
    d.recommended_capacity =
        std::min(std::max(want_capacity, current_capacity), std::max(limits.capacity_ceiling, current_capacity));

    const bool grow_b = d.recommended_buffer > current_buffer;
    const bool grow_c = d.recommended_capacity > current_capacity;
    d.action = grow_b && grow_c   ? control_action::both
               : grow_b           ? control_action::grow_buffer
               : grow_c           ? control_action::grow_capacity
                                  : control_action::none;
    return d;
}

}  // namespace fqos
