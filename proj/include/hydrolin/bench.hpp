#pragma once

// Linear-model fidelity benchmark: for every (operating point, guide-vane step)
// pair, simulate the nonlinear plant and its linearization through the same
// step and compare torque and head in a transient and a steady-state window.

#include "hydrolin/circuit.hpp"
#include "hydrolin/curves.hpp"
#include "hydrolin/equilibrium.hpp"
#include "hydrolin/error.hpp"
#include "hydrolin/linearize.hpp"
#include "hydrolin/sim.hpp"
#include "hydrolin/text.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace hydrolin {

struct GridCell {
    double y0 = 0.0;
    double dy = 0.0;
    std::size_t y_index = 0;
    std::size_t dy_index = 0;
};

struct ExperimentGrid {
    std::vector<double> y_points;   // 0.2 .. 1.0 step 0.1
    std::vector<double> dy_points;  // -0.5 .. 0.5 step 0.025
    double y_min = 0.0;
    double y_max = 1.0;
    std::vector<GridCell> cells;    // feasible cells, y0 outer, dy inner

    std::size_t cells_at(double y0) const {
        return static_cast<std::size_t>(std::count_if(
            cells.begin(), cells.end(), [&](const GridCell& c) { return c.y0 == y0; }));
    }
};

inline ExperimentGrid build_grid(const PlantConfig& cfg) {
    ExperimentGrid g;
    g.y_min = cfg.y_min;
    g.y_max = cfg.y_max;
    for (int i = 2; i <= 10; ++i) g.y_points.push_back(i / 10.0);
    for (int k = -20; k <= 20; ++k) g.dy_points.push_back(k / 40.0);
    constexpr double tol = 1e-9;
    for (std::size_t i = 0; i < g.y_points.size(); ++i)
        for (std::size_t k = 0; k < g.dy_points.size(); ++k) {
            const double y1 = g.y_points[i] + g.dy_points[k];
            if (y1 >= cfg.y_min - tol && y1 <= cfg.y_max + tol)
                g.cells.push_back({g.y_points[i], g.dy_points[k], i, k});
        }
    return g;
}

// (reference - estimate) / norm, pointwise.
inline std::vector<double> error_series(std::span<const double> estimate,
                                        std::span<const double> reference, double norm) {
    if (estimate.size() != reference.size())
        throw ConfigError("error_series: series lengths differ (" +
                          std::to_string(estimate.size()) + " vs " +
                          std::to_string(reference.size()) + ")");
    if (!(norm > 0.0)) throw ConfigError("error_series: normalization must be positive");
    std::vector<double> e(estimate.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = (reference[i] - estimate[i]) / norm;
    return e;
}

// Same, after checking that both series share a time base.
inline std::vector<double> error_series(std::span<const double> t_estimate,
                                        std::span<const double> estimate,
                                        std::span<const double> t_reference,
                                        std::span<const double> reference, double norm) {
    if (t_estimate.size() != t_reference.size())
        throw ConfigError("error_series: time bases differ in length");
    for (std::size_t i = 0; i < t_estimate.size(); ++i)
        if (std::abs(t_estimate[i] - t_reference[i]) > 1e-9 * std::max(1.0, std::abs(t_reference[i])))
            throw ConfigError("error_series: time bases are misaligned at sample " +
                              std::to_string(i));
    return error_series(estimate, reference, norm);
}

// Mean of |e| over the samples with t in [t0, tf].
inline double mae(std::span<const double> t, std::span<const double> e, double t0, double tf) {
    if (t.size() != e.size()) throw ConfigError("mae: time and error series differ in length");
    constexpr double tol = 1e-9;
    if (t.empty() || t0 < t.front() - tol || tf > t.back() + tol || tf < t0)
        throw ConfigError("mae: window [" + std::to_string(t0) + ", " + std::to_string(tf) +
                          "] not within the series span");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t0 - tol && t[i] <= tf + tol) {
            sum += std::abs(e[i]);
            ++count;
        }
    if (count == 0) throw ConfigError("mae: empty window");
    return sum / static_cast<double>(count);
}

struct BenchOptions {
    double dt = 1e-3;
    double horizon = 500.0;         // s, simulated time after the step
    double transient_window = 350.0;
    double steady_window = 50.0;    // final seconds of the run
    double sample_period = 0.01;    // s between recorded samples
    double settle_threshold = 1e-3; // normalized residual counted as steady
    unsigned threads = 1;
    DiffSteps steps;

    void validate() const {
        if (!(dt > 0.0)) throw ConfigError("bench: dt must be positive");
        if (!(transient_window > 0.0 && transient_window <= horizon))
            throw ConfigError("bench: transient window must lie within the horizon");
        if (!(steady_window > 0.0 && steady_window <= horizon))
            throw ConfigError("bench: steady window must lie within the horizon");
        if (!(sample_period >= dt)) throw ConfigError("bench: sample period below dt");
    }

    std::size_t record_every() const {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(sample_period / dt)));
    }
};

struct ExperimentResult {
    double y0 = 0.0;
    double dy = 0.0;
    double mae_T_tr = std::numeric_limits<double>::quiet_NaN();
    double mae_T_ss = std::numeric_limits<double>::quiet_NaN();
    double mae_H_tr = std::numeric_limits<double>::quiet_NaN();
    double mae_H_ss = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
    // Normalized nonlinear residual when the steady window opens.
    double settle_residual = std::numeric_limits<double>::quiet_NaN();

    bool ok() const { return status == "ok"; }
};

// Error fields of one simulated cell pair.
struct CellComparison {
    Trajectory nonlinear;
    Trajectory linear;
};

inline const std::vector<double>& head_series(const Trajectory& traj, HeadSignal s) {
    return s == HeadSignal::penstock_average ? traj.head_avg : traj.H_t;
}

// Runs one cell given its operating point and linear model.
inline ExperimentResult run_cell(const PlantConfig& cfg, const CharacteristicCurveSet& curves,
                                 const OperatingPoint& op, const LinearStateSpace& lin,
                                 const GridCell& cell, const BenchOptions& opts,
                                 CellComparison* keep = nullptr) {
    ExperimentResult r;
    r.y0 = cell.y0;
    r.dy = cell.dy;
    StepSchedule step;
    step.y_before = op.y0;
    step.y_after = op.y0 + cell.dy;
    step.t_step = 0.0;
    step.T_el = op.T_t0;
    if (cfg.kind == TurbineKind::kaplan) step.cam = cfg.on_cam;
    // Clamp round-off at the edges of the operating range.
    step.y_after = std::clamp(step.y_after, cfg.y_min, cfg.y_max);

    SimOptions so;
    so.dt = opts.dt;
    so.t_end = opts.horizon;
    so.record_every = opts.record_every();
    so.store_states = true;

    try {
        const Trajectory nl = simulate_nonlinear(cfg, curves, op.x0, step, so);
        so.store_states = false;
        const Trajectory ln = simulate_linear(lin, op.x0, linear_schedule(lin, step), so);

        const double t0 = step.t_step;
        const double tf = t0 + opts.transient_window;
        const double ss_end = nl.t.back();
        const double ss_start = ss_end - opts.steady_window;
        const auto eT = error_series(ln.t, ln.T_t, nl.t, nl.T_t, cfg.rated.T_n);
        const auto eH = error_series(ln.t, head_series(ln, cfg.head_output), nl.t,
                                     head_series(nl, cfg.head_output), cfg.rated.H_n);
        r.mae_T_tr = mae(nl.t, eT, t0, tf);
        r.mae_T_ss = mae(nl.t, eT, ss_start, ss_end);
        r.mae_H_tr = mae(nl.t, eH, t0, tf);
        r.mae_H_ss = mae(nl.t, eH, ss_start, ss_end);

        // Steadiness check at the first sample of the steady window.
        const auto it = std::lower_bound(nl.t.begin(), nl.t.end(), ss_start - 1e-9);
        const std::size_t idx = std::min<std::size_t>(it - nl.t.begin(), nl.t.size() - 1);
        const PlantInputs in = step(nl.t[idx]);
        r.settle_residual = normalized_residual(
            cfg, nonlinear_rhs(cfg, curves, nl.states[idx], in.y,
                               cfg.kind == TurbineKind::kaplan ? std::optional<double>(in.beta)
                                                               : std::nullopt,
                               in.T_el));
        if (keep) {
            keep->nonlinear = nl;
            keep->linear = ln;
        }
    } catch (const Error& e) {
        r.status = std::string("error: ") + e.what();
    }
    return r;
}

struct OperatingModel {
    double y0 = 0.0;
    std::optional<OperatingPoint> op;
    std::optional<LinearStateSpace> lin;
    std::string error;
};

inline OperatingModel prepare_operating_point(const PlantConfig& cfg,
                                              const CharacteristicCurveSet& curves, double y0,
                                              const DiffSteps& steps) {
    OperatingModel m;
    m.y0 = y0;
    try {
        const std::optional<double> beta =
            cfg.kind == TurbineKind::kaplan ? std::optional<double>(on_cam(*cfg.on_cam, y0))
                                            : std::nullopt;
        m.op = find_equilibrium(cfg, curves, y0, beta, cfg.N_sync);
        m.lin = linearize(cfg, curves, *m.op, steps);
    } catch (const Error& e) {
        m.error = std::string("error: ") + e.what();
    }
    return m;
}

// Order of results follows grid.cells regardless of the thread count.
inline std::vector<ExperimentResult> run_benchmark(const PlantConfig& cfg,
                                                   const CharacteristicCurveSet& curves,
                                                   const ExperimentGrid& grid,
                                                   const BenchOptions& opts) {
    opts.validate();
    // Systemic problems fail the whole run rather than every cell.
    SimOptions probe;
    probe.dt = opts.dt;
    probe.t_end = opts.horizon;
    probe.validate(cfg);
    std::vector<OperatingModel> models;
    for (double y0 : grid.y_points)
        models.push_back(prepare_operating_point(cfg, curves, y0, opts.steps));

    std::vector<ExperimentResult> results(grid.cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.cells.size(); i = next++) {
            const GridCell& cell = grid.cells[i];
            const OperatingModel& m = models[cell.y_index];
            if (!m.op || !m.lin) {
                ExperimentResult r;
                r.y0 = cell.y0;
                r.dy = cell.dy;
                r.status = m.error;
                results[i] = r;
                continue;
            }
            results[i] = run_cell(cfg, curves, *m.op, *m.lin, cell, opts);
        }
    };
    const unsigned threads = std::max(1u, opts.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return results;
}

// --- results CSV -----------------------------------------------------------

inline constexpr const char* results_header = "y0,dy,mae_T_tr,mae_T_ss,mae_H_tr,mae_H_ss,status";

inline std::string csv_safe(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

inline void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& results) {
    out << results_header << '\n';
    for (const auto& r : results)
        out << format_double(r.y0) << ',' << format_double(r.dy) << ','
            << format_double(r.mae_T_tr) << ',' << format_double(r.mae_T_ss) << ','
            << format_double(r.mae_H_tr) << ',' << format_double(r.mae_H_ss) << ','
            << csv_safe(r.status) << '\n';
}

inline std::vector<ExperimentResult> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != results_header)
        throw ConfigError("results csv: header must be '" + std::string(results_header) + "'");
    std::vector<ExperimentResult> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv(trim(line));
        if (f.size() != 7)
            throw ConfigError("results csv:" + std::to_string(line_no) + ": expected 7 fields");
        ExperimentResult r;
        double* slots[6] = {&r.y0, &r.dy, &r.mae_T_tr, &r.mae_T_ss, &r.mae_H_tr, &r.mae_H_ss};
        for (int i = 0; i < 6; ++i)
            if (!parse_double(f[i], *slots[i]))
                throw ConfigError("results csv:" + std::to_string(line_no) + ": bad number '" +
                                  f[i] + "'");
        r.status = f[6];
        out.push_back(r);
    }
    return out;
}

// --- heatmaps ---------------------------------------------------------------

// One metric laid out as step change (rows) x guide-vane opening (columns);
// infeasible or failed cells are NaN.
struct Heatmap {
    std::string metric;
    std::vector<double> dy;
    std::vector<double> y0;
    std::vector<std::vector<double>> values;  // [dy][y0]
};

inline std::vector<std::string> metric_names() {
    return {"mae_T_tr", "mae_T_ss", "mae_H_tr", "mae_H_ss"};
}

inline double metric_value(const ExperimentResult& r, const std::string& metric) {
    if (metric == "mae_T_tr") return r.mae_T_tr;
    if (metric == "mae_T_ss") return r.mae_T_ss;
    if (metric == "mae_H_tr") return r.mae_H_tr;
    if (metric == "mae_H_ss") return r.mae_H_ss;
    throw ConfigError("unknown metric '" + metric + "'");
}

inline Heatmap build_heatmap(const ExperimentGrid& grid, const std::vector<ExperimentResult>& results,
                             const std::string& metric) {
    Heatmap h;
    h.metric = metric;
    h.dy = grid.dy_points;
    h.y0 = grid.y_points;
    h.values.assign(h.dy.size(),
                    std::vector<double>(h.y0.size(), std::numeric_limits<double>::quiet_NaN()));
    for (std::size_t i = 0; i < grid.cells.size() && i < results.size(); ++i) {
        const GridCell& c = grid.cells[i];
        if (results[i].ok()) h.values[c.dy_index][c.y_index] = metric_value(results[i], metric);
    }
    return h;
}

inline void write_heatmap_csv(std::ostream& out, const Heatmap& h) {
    out << "dy\\y0";
    for (double y : h.y0) out << ',' << format_double(y);
    out << '\n';
    for (std::size_t r = 0; r < h.dy.size(); ++r) {
        out << format_double(h.dy[r]);
        for (double v : h.values[r]) out << ',' << (std::isnan(v) ? std::string() : format_double(v));
        out << '\n';
    }
}

inline Heatmap read_heatmap_csv(std::istream& in, std::string metric = {}) {
    Heatmap h;
    h.metric = std::move(metric);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("heatmap csv: empty input");
    const auto head = split_csv(trim(line));
    if (head.empty() || head[0] != "dy\\y0") throw ConfigError("heatmap csv: bad header");
    for (std::size_t i = 1; i < head.size(); ++i) {
        double v = 0.0;
        if (!parse_double(head[i], v)) throw ConfigError("heatmap csv: bad y0 label");
        h.y0.push_back(v);
    }
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto f = split_csv(trim(line));
        if (f.size() != head.size()) throw ConfigError("heatmap csv: ragged row");
        double dy = 0.0;
        if (!parse_double(f[0], dy)) throw ConfigError("heatmap csv: bad dy label");
        h.dy.push_back(dy);
        std::vector<double> row;
        for (std::size_t i = 1; i < f.size(); ++i) {
            double v = std::numeric_limits<double>::quiet_NaN();
            if (!f[i].empty() && !parse_double(f[i], v))
                throw ConfigError("heatmap csv: bad value '" + f[i] + "'");
            row.push_back(v);
        }
        h.values.push_back(std::move(row));
    }
    return h;
}

// SVG rendering of a heatmap read back from its CSV.
inline std::string render_heatmap_svg(const Heatmap& h) {
    constexpr int cell_w = 48;
    constexpr int cell_h = 12;
    constexpr int left = 70;
    constexpr int top = 40;
    const int width = left + cell_w * static_cast<int>(h.y0.size()) + 120;
    const int height = top + cell_h * static_cast<int>(h.dy.size()) + 50;
    double vmax = 0.0;
    for (const auto& row : h.values)
        for (double v : row)
            if (!std::isnan(v)) vmax = std::max(vmax, v);
    if (vmax <= 0.0) vmax = 1.0;
    auto colour = [&](double v) {
        // white -> dark blue
        const double s = std::clamp(v / vmax, 0.0, 1.0);
        const int r = static_cast<int>(255 * (1.0 - 0.85 * s));
        const int g = static_cast<int>(255 * (1.0 - 0.65 * s));
        const int b = static_cast<int>(255 * (1.0 - 0.25 * s));
        char buf[16];
        std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
        return std::string(buf);
    };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"sans-serif\" font-size=\"9\">\n";
    svg << "<text x=\"" << left << "\" y=\"16\" font-size=\"12\">" << h.metric
        << " (max " << format_fixed(vmax, 4) << " pu)</text>\n";
    // rows top-down from +dy to -dy
    for (std::size_t r = 0; r < h.dy.size(); ++r) {
        const std::size_t src = h.dy.size() - 1 - r;
        const int y = top + static_cast<int>(r) * cell_h;
        svg << "<text x=\"" << left - 6 << "\" y=\"" << y + cell_h - 3
            << "\" text-anchor=\"end\">" << format_fixed(h.dy[src], 3) << "</text>\n";
        for (std::size_t c = 0; c < h.y0.size(); ++c) {
            const double v = h.values[src][c];
            const int x = left + static_cast<int>(c) * cell_w;
            svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w
                << "\" height=\"" << cell_h << "\" fill=\""
                << (std::isnan(v) ? std::string("#dddddd") : colour(v)) << "\"/>\n";
        }
    }
    const int axis_y = top + cell_h * static_cast<int>(h.dy.size()) + 14;
    for (std::size_t c = 0; c < h.y0.size(); ++c)
        svg << "<text x=\"" << left + static_cast<int>(c) * cell_w + cell_w / 2 << "\" y=\""
            << axis_y << "\" text-anchor=\"middle\">" << format_fixed(h.y0[c], 1) << "</text>\n";
    svg << "<text x=\"" << left + cell_w * static_cast<int>(h.y0.size()) / 2 << "\" y=\""
        << axis_y + 16 << "\" text-anchor=\"middle\">guide vane opening y0 (pu)</text>\n";
    svg << "<text x=\"14\" y=\"" << top + cell_h * static_cast<int>(h.dy.size()) / 2
        << "\" transform=\"rotate(-90 14 " << top + cell_h * static_cast<int>(h.dy.size()) / 2
        << ")\" text-anchor=\"middle\">step change dy (pu)</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

// --- statistics -------------------------------------------------------------

// Average ranks (1-based), ties share the mean rank.
inline std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

// Spearman rank correlation (Pearson correlation of average ranks).
inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("spearman: need paired samples");
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace hydrolin
