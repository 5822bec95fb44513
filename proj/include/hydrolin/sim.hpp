#pragma once

// Fixed-step RK4 time integration of the nonlinear and linearized plant.

#include "hydrolin/circuit.hpp"
#include "hydrolin/curves.hpp"
#include "hydrolin/error.hpp"
#include "hydrolin/linearize.hpp"
#include "hydrolin/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace hydrolin {

struct SimOptions {
    double dt = 1e-3;
    double t_end = 1.0;
    std::size_t record_every = 1;
    bool store_states = true;

    std::size_t steps() const {
        return static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
    }
    std::size_t samples() const { return steps() / record_every + 1; }

    void validate() const {
        if (!(dt > 0.0)) throw ConfigError("sim: dt must be positive");
        if (!(t_end >= dt)) throw ConfigError("sim: t_end must be at least dt");
        if (record_every < 1) throw ConfigError("sim: record_every must be >= 1");
    }

    // Adds the wave-resolution bound dt <= dx / (2a).
    void validate(const PlantConfig& cfg) const {
        validate();
        const double bound = 0.5 * cfg.dx() / cfg.a;
        if (dt > bound)
            throw ConfigError("sim: dt=" + std::to_string(dt) + " exceeds the wave-resolution "
                              "bound dx/(2a)=" + std::to_string(bound));
    }
};

inline double default_dt(const PlantConfig& cfg) { return std::min(1e-3, 0.2 * cfg.dx() / cfg.a); }

struct Trajectory {
    std::vector<double> t;
    std::vector<Vector> states;   // empty when states are not stored
    std::vector<double> H_t;
    std::vector<double> T_t;
    std::vector<double> head_avg;

    std::size_t size() const { return t.size(); }

    void reserve(std::size_t n, bool with_states) {
        t.reserve(n);
        H_t.reserve(n);
        T_t.reserve(n);
        head_avg.reserve(n);
        if (with_states) states.reserve(n);
    }
};

// Classic 4th-order Runge-Kutta with a fixed step. rhs(t, x, dxdt) works on
// raw buffers of length x.size(); observe(step, t, x) is called for step 0 and
// every `record_every` steps after that.
template <class Rhs, class Observer>
void integrate_rk4(Rhs&& rhs, Vector& x, double dt, std::size_t steps, std::size_t record_every,
                   Observer&& observe) {
    const Eigen::Index m = x.size();
    Vector k1(m), k2(m), k3(m), k4(m), tmp(m);
    observe(std::size_t{0}, 0.0, x);
    for (std::size_t step = 0; step < steps; ++step) {
        const double t = static_cast<double>(step) * dt;
        rhs(t, x.data(), k1.data());
        tmp = x + (0.5 * dt) * k1;
        rhs(t + 0.5 * dt, tmp.data(), k2.data());
        tmp = x + (0.5 * dt) * k2;
        rhs(t + 0.5 * dt, tmp.data(), k3.data());
        tmp = x + dt * k3;
        rhs(t + dt, tmp.data(), k4.data());
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((step + 1) % record_every == 0)
            observe(step + 1, static_cast<double>(step + 1) * dt, x);
    }
}

// Plant inputs as a function of time.
using InputSchedule = std::function<PlantInputs(double)>;

// Guide-vane step from y_before to y_after at t_step. With a positive
// rate limit (pu/s) the change is a ramp; otherwise it is instantaneous. The
// blade pitch follows the on-cam table when one is given.
struct StepSchedule {
    double y_before = 0.0;
    double y_after = 0.0;
    double t_step = 0.0;
    double T_el = 0.0;
    std::optional<OnCamTable> cam;
    double rate_limit = 0.0;

    double y(double t) const {
        if (t < t_step) return y_before;
        if (rate_limit > 0.0) {
            const double travel = rate_limit * (t - t_step);
            const double dy = y_after - y_before;
            return std::abs(dy) <= travel ? y_after : y_before + std::copysign(travel, dy);
        }
        return y_after;
    }

    PlantInputs operator()(double t) const {
        const double yy = y(t);
        return {yy, cam ? on_cam(*cam, yy) : 0.0, T_el};
    }
};

inline Trajectory simulate_nonlinear(const PlantConfig& cfg, const CharacteristicCurveSet& curves,
                                     const Vector& x_init, const InputSchedule& inputs,
                                     const SimOptions& opts) {
    opts.validate(cfg);
    const StateLayout s(cfg);
    if (static_cast<std::size_t>(x_init.size()) != s.size())
        throw ConfigError("simulate_nonlinear: initial state has the wrong dimension");
    const CircuitCoefficients k = CircuitCoefficients::from(cfg);
    Trajectory traj;
    traj.reserve(opts.samples(), opts.store_states);

    double t_now = 0.0;
    auto rhs = [&](double t, const double* x, double* dxdt) {
        t_now = t;
        nonlinear_rhs_into(cfg, k, curves, x, inputs(t), dxdt);
    };
    auto observe = [&](std::size_t, double t, const Vector& x) {
        t_now = t;
        const TurbineState ts = turbine_at(curves, x.data(), s.n, inputs(t));
        traj.t.push_back(t);
        traj.H_t.push_back(ts.head);
        traj.T_t.push_back(ts.torque);
        traj.head_avg.push_back(mean_penstock_head(x.data(), s.n));
        if (opts.store_states) traj.states.push_back(x);
    };
    Vector x = x_init;
    try {
        integrate_rk4(rhs, x, opts.dt, opts.steps(), opts.record_every, observe);
    } catch (const DomainError& e) {
        throw SimulationError("nonlinear simulation left the curve domain at t=" +
                                  std::to_string(t_now) + " (Q_t=" + std::to_string(x(s.n)) +
                                  ", N=" + std::to_string(speed_rpm(x, s)) + " rpm): " + e.what(),
                              t_now);
    }
    return traj;
}

// Linear-model inputs as a function of time.
using LinearInputSchedule = std::function<Vector(double)>;

// Linear-model counterpart of a StepSchedule with the boundary values held at
// those of the operating point.
inline LinearInputSchedule linear_schedule(const LinearStateSpace& lin, const StepSchedule& step) {
    return [&lin, step](double t) {
        const PlantInputs in = step(t);
        return lin.input(in.y, in.beta, lin.H_r, lin.H_d, step.T_el);
    };
}

namespace detail {

// Compressed-row copy of a dense matrix, exact zeros dropped.
struct CsrMatrix {
    std::vector<std::size_t> row_start;
    std::vector<std::size_t> col;
    std::vector<double> val;

    explicit CsrMatrix(const Matrix& m) {
        row_start.push_back(0);
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                if (m(i, j) != 0.0) {
                    col.push_back(static_cast<std::size_t>(j));
                    val.push_back(m(i, j));
                }
            row_start.push_back(col.size());
        }
    }

    void multiply_add(const double* x, const double* bias, double* out) const {
        for (std::size_t i = 0; i + 1 < row_start.size(); ++i) {
            double acc = bias[i];
            for (std::size_t p = row_start[i]; p < row_start[i + 1]; ++p) acc += val[p] * x[col[p]];
            out[i] = acc;
        }
    }
};

}  // namespace detail

// RK4 on dx/dt = At x + Bt u(t). Head and torque series are the Taylor
// reconstructions; head_avg is the mean of the penstock heads of the state.
inline Trajectory simulate_linear(const LinearStateSpace& lin, const Vector& x_init,
                                  const LinearInputSchedule& inputs, const SimOptions& opts) {
    opts.validate();
    if (static_cast<std::size_t>(x_init.size()) != lin.state_size() ||
        static_cast<std::size_t>(lin.A_tilde.rows()) != lin.state_size())
        throw ConfigError("simulate_linear: state dimension mismatch");
    const detail::CsrMatrix A(lin.A_tilde);
    const std::size_t n = lin.n;
    Trajectory traj;
    traj.reserve(opts.samples(), opts.store_states);

    // B u only changes when the schedule does; cache on the last input seen.
    Vector last_u;
    Vector bu = Vector::Zero(x_init.size());
    auto forcing = [&](double t) -> const Vector& {
        Vector u = inputs(t);
        if (static_cast<std::size_t>(u.size()) != lin.input_size())
            throw ConfigError("simulate_linear: input vector has the wrong size");
        if (last_u.size() != u.size() || u != last_u) {
            bu.noalias() = lin.B_tilde * u;
            last_u = std::move(u);
        }
        return bu;
    };
    auto rhs = [&](double t, const double* x, double* dxdt) {
        A.multiply_add(x, forcing(t).data(), dxdt);
    };
    auto observe = [&](std::size_t, double t, const Vector& x) {
        forcing(t);
        traj.t.push_back(t);
        traj.H_t.push_back(lin.head(x.data(), last_u));
        traj.T_t.push_back(lin.torque(x.data(), last_u));
        traj.head_avg.push_back(mean_penstock_head(x.data(), n));
        if (opts.store_states) traj.states.push_back(x);
    };
    Vector x = x_init;
    integrate_rk4(rhs, x, opts.dt, opts.steps(), opts.record_every, observe);
    return traj;
}

// Columns: t, Q_1..Q_{n+1}, h_1..h_n, omega, H_t, T_t, head_avg. h_k is the
// mid-element head h_{k+1/2}.
inline std::string trajectory_header(std::size_t n) {
    std::string h = "t";
    for (std::size_t i = 1; i <= n + 1; ++i) h += ",Q_" + std::to_string(i);
    for (std::size_t k = 1; k <= n; ++k) h += ",h_" + std::to_string(k);
    return h + ",omega,H_t,T_t,head_avg";
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::size_t n) {
    if (traj.states.size() != traj.size())
        throw ConfigError("write_trajectory_csv: trajectory was recorded without states");
    out << trajectory_header(n) << '\n';
    for (std::size_t r = 0; r < traj.size(); ++r) {
        out << format_double(traj.t[r]);
        for (Eigen::Index i = 0; i < traj.states[r].size(); ++i)
            out << ',' << format_double(traj.states[r](i));
        out << ',' << format_double(traj.H_t[r]) << ',' << format_double(traj.T_t[r]) << ','
            << format_double(traj.head_avg[r]) << '\n';
    }
}

inline Trajectory read_trajectory_csv(std::istream& in, std::size_t& n_out) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("trajectory csv: empty input");
    const auto header = split_csv(trim(line));
    // 1 + (n+1) + n + 1 + 3 columns
    if (header.size() < 8 || (header.size() - 6) % 2 != 0)
        throw ConfigError("trajectory csv: unexpected column count");
    const std::size_t n = (header.size() - 6) / 2;
    if (header != split_csv(trajectory_header(n)))
        throw ConfigError("trajectory csv: header does not match the documented layout");
    Trajectory traj;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = trim(line);
        if (row.empty()) continue;
        const auto f = split_csv(row);
        if (f.size() != header.size())
            throw ConfigError("trajectory csv:" + std::to_string(line_no) + ": wrong field count");
        std::vector<double> v(f.size());
        for (std::size_t i = 0; i < f.size(); ++i)
            if (!parse_double(f[i], v[i]))
                throw ConfigError("trajectory csv:" + std::to_string(line_no) + ": bad number");
        traj.t.push_back(v[0]);
        Vector x(2 * n + 2);
        for (std::size_t i = 0; i < 2 * n + 2; ++i) x(i) = v[1 + i];
        traj.states.push_back(std::move(x));
        traj.H_t.push_back(v[2 * n + 3]);
        traj.T_t.push_back(v[2 * n + 4]);
        traj.head_avg.push_back(v[2 * n + 5]);
    }
    n_out = n;
    return traj;
}

}  // namespace hydrolin
