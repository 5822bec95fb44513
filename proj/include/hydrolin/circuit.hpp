#pragma once

// Equivalent-circuit plant model: penstock discretized into n RLC elements,
// a turbine head source at the downstream end, and the rotor.
//
// State layout (dimension 2n+2):
//
//   [ Q_1 ... Q_{n+1} | h_{3/2} ... h_{n+1/2} | omega ]
//
// Q_1 flows from the reservoir into the first mid-element node through a
// half-element branch (inductance L/2, resistance R/2). Q_2..Q_n are interior
// branches joining two mid-element nodes (full L, R). Q_{n+1} is the turbine
// discharge and flows through the downstream half-element branch into the
// turbine inlet node, whose head is H_t + H_d. Heads are piezometric heads in
// metres of water; omega is in rad/s.

#include "hydrolin/curves.hpp"
#include "hydrolin/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace hydrolin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double rpm_per_rad_s = 60.0 / (2.0 * std::numbers::pi);

// Which head series the benchmark compares.
enum class HeadSignal { penstock_average, turbine };

inline const char* to_string(HeadSignal s) {
    return s == HeadSignal::penstock_average ? "penstock_average" : "turbine";
}

struct PlantConfig {
    std::string name;
    TurbineKind kind = TurbineKind::francis;
    double H_r = 0.0;      // reservoir head, m
    double H_d = 0.0;      // downstream head, m
    double length = 0.0;   // penstock length, m
    int n = 0;             // number of penstock elements
    double D = 0.0;        // pipe diameter, m
    double A = 0.0;        // pipe cross-section, m^2
    double lambda = 0.0;   // Darcy-Weisbach friction coefficient
    double a = 0.0;        // wave speed, m/s
    double g = 9.81;       // m/s^2
    double J = 0.0;        // rotating inertia, kg m^2
    RatedValues rated;
    double y_min = 0.2;
    double y_max = 1.0;
    double N_sync = 0.0;   // synchronous speed used for operating points, rpm
    std::optional<OnCamTable> on_cam;  // Kaplan only
    HeadSignal head_output = HeadSignal::penstock_average;

    std::size_t state_size() const { return 2 * static_cast<std::size_t>(n) + 2; }
    double dx() const { return length / n; }

    // Every violated invariant, as "field: message" strings.
    std::vector<std::string> issues() const {
        std::vector<std::string> out;
        auto positive = [&](double v, const char* field) {
            if (!(std::isfinite(v) && v > 0.0)) out.push_back(std::string(field) + ": must be > 0");
        };
        if (n < 1) out.push_back("penstock.elements: n ≥ 1 required (got " + std::to_string(n) + ")");
        positive(H_r, "reservoir_head");
        positive(H_d, "downstream_head");
        positive(length, "penstock.length");
        positive(D, "penstock.diameter");
        positive(A, "penstock.area");
        positive(lambda, "penstock.friction");
        positive(a, "penstock.wave_speed");
        positive(g, "gravity");
        positive(J, "inertia");
        positive(N_sync, "synchronous_speed");
        if (!(H_r - H_d > 0.0)) out.push_back("reservoir_head: net head H_r - H_d must be > 0");
        if (!(y_min >= 0.0 && y_min < y_max && y_max <= 1.0))
            out.push_back("guide_vane_range: 0 <= y_min < y_max <= 1 required");
        try {
            rated.validate();
        } catch (const ConfigError& e) {
            out.emplace_back(e.what());
        }
        if (kind == TurbineKind::kaplan) {
            if (!on_cam) {
                out.push_back("on_cam: required for Kaplan plants");
            } else {
                try {
                    on_cam->validate();
                    if (!(on_cam->y_points.front() <= y_min && on_cam->y_points.back() >= y_max))
                        out.push_back("on_cam: table must cover the guide vane range");
                } catch (const ConfigError& e) {
                    out.emplace_back(e.what());
                }
            }
        }
        return out;
    }

    void validate() const {
        const auto problems = issues();
        if (problems.empty()) return;
        std::string msg = "invalid plant config '" + name + "':";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
};

struct RlcParams {
    double R = 0.0;   // s/m^2
    double L = 0.0;   // s^2/m^2
    double C = 0.0;   // m^2
    double dx = 0.0;  // m
};

inline RlcParams rlc_params(const PlantConfig& cfg, double Q) {
    const double dx = cfg.dx();
    return {cfg.lambda * std::abs(Q) * dx / (2.0 * cfg.g * cfg.D * cfg.A * cfg.A),
            dx / (cfg.g * cfg.A), cfg.g * cfg.A * dx / (cfg.a * cfg.a), dx};
}

// Index map of the state vector. Element numbering is 1-based as in the
// circuit description.
struct StateLayout {
    std::size_t n = 0;

    explicit StateLayout(std::size_t elements) : n(elements) {}
    explicit StateLayout(const PlantConfig& cfg) : n(static_cast<std::size_t>(cfg.n)) {}

    std::size_t size() const { return 2 * n + 2; }
    std::size_t discharge(std::size_t i) const { return i - 1; }  // Q_i, i = 1..n+1
    std::size_t turbine_discharge() const { return n; }
    std::size_t head(std::size_t k) const { return n + k; }        // h_{k+1/2}, k = 1..n
    std::size_t omega() const { return 2 * n + 1; }
};

// Constants of the circuit equations, precomputed once per plant.
struct CircuitCoefficients {
    std::size_t n = 0;
    double L = 0.0;
    double C = 0.0;
    double R_per_Q = 0.0;  // R(Q) = R_per_Q * |Q|
    double inv_J = 0.0;

    static CircuitCoefficients from(const PlantConfig& cfg) {
        const RlcParams unit = rlc_params(cfg, 1.0);
        return {static_cast<std::size_t>(cfg.n), unit.L, unit.C, unit.R, 1.0 / cfg.J};
    }
};

// Boundary inputs u = [H_r, H_t + H_d, T_t - T_el].
struct BoundaryInputs {
    double reservoir_head = 0.0;
    double turbine_inlet_head = 0.0;
    double torque_imbalance = 0.0;
};

// dx/dt = A(x) x + B u written out element by element. When `frozen_flows` is
// given, friction uses R evaluated at those discharges instead of the current
// ones (the frozen-resistance model used for linearization).
inline void circuit_rhs(const CircuitCoefficients& k, const double* x, const BoundaryInputs& u,
                        double* dxdt, const double* frozen_flows = nullptr) {
    const std::size_t n = k.n;
    const double* Q = x;
    const double* h = x + n + 1;  // h[0] = h_{3/2}
    const double* Rq = frozen_flows ? frozen_flows : x;
    const double inv_L = 1.0 / k.L;
    const double inv_C = 1.0 / k.C;
    auto damping = [&](std::size_t i) { return k.R_per_Q * std::abs(Rq[i]) * inv_L * Q[i]; };

    dxdt[0] = 2.0 * inv_L * (u.reservoir_head - h[0]) - damping(0);
    for (std::size_t i = 1; i < n; ++i) dxdt[i] = inv_L * (h[i - 1] - h[i]) - damping(i);
    dxdt[n] = 2.0 * inv_L * (h[n - 1] - u.turbine_inlet_head) - damping(n);
    for (std::size_t j = 0; j < n; ++j) dxdt[n + 1 + j] = inv_C * (Q[j] - Q[j + 1]);
    dxdt[2 * n + 1] = k.inv_J * u.torque_imbalance;
}

// State matrix A(x); friction evaluated at the discharges of x.
inline Matrix assemble_A(const PlantConfig& cfg, const Vector& x) {
    const StateLayout s(cfg);
    if (static_cast<std::size_t>(x.size()) != s.size())
        throw ConfigError("assemble_A: state has dimension " + std::to_string(x.size()) +
                          ", expected " + std::to_string(s.size()));
    const std::size_t n = s.n;
    const RlcParams p = rlc_params(cfg, 0.0);
    Matrix A = Matrix::Zero(s.size(), s.size());
    for (std::size_t i = 1; i <= n + 1; ++i) {
        const auto row = s.discharge(i);
        A(row, row) = -rlc_params(cfg, x(row)).R / p.L;
    }
    A(s.discharge(1), s.head(1)) = -2.0 / p.L;
    for (std::size_t i = 2; i <= n; ++i) {
        A(s.discharge(i), s.head(i - 1)) = 1.0 / p.L;
        A(s.discharge(i), s.head(i)) = -1.0 / p.L;
    }
    A(s.discharge(n + 1), s.head(n)) = 2.0 / p.L;
    for (std::size_t k = 1; k <= n; ++k) {
        A(s.head(k), s.discharge(k)) = 1.0 / p.C;
        A(s.head(k), s.discharge(k + 1)) = -1.0 / p.C;
    }
    return A;
}

// Input matrix B for u = [H_r, H_t + H_d, T_t - T_el].
inline Matrix assemble_B(const PlantConfig& cfg) {
    const StateLayout s(cfg);
    const RlcParams p = rlc_params(cfg, 0.0);
    Matrix B = Matrix::Zero(s.size(), 3);
    B(s.discharge(1), 0) = 2.0 / p.L;
    B(s.turbine_discharge(), 1) = -2.0 / p.L;
    B(s.omega(), 2) = 1.0 / cfg.J;
    return B;
}

struct PlantInputs {
    double y = 0.0;
    double beta = 0.0;   // ignored for Francis
    double T_el = 0.0;   // electrical torque, N m
};

inline double speed_rpm(const Vector& x, const StateLayout& s) {
    return x(s.omega()) * rpm_per_rad_s;
}

inline double mean_penstock_head(const double* x, std::size_t n) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += x[n + 1 + j];
    return sum / static_cast<double>(n);
}

// Turbine head and torque at the state x for the given inputs.
inline TurbineState turbine_at(const CharacteristicCurveSet& curves, const double* x,
                               std::size_t n, const PlantInputs& in) {
    return turbine_state(curves, x[n], x[2 * n + 1] * rpm_per_rad_s, in.y, in.beta);
}

// Nonlinear right-hand side into a caller-provided buffer.
inline TurbineState nonlinear_rhs_into(const PlantConfig& cfg, const CircuitCoefficients& k,
                                       const CharacteristicCurveSet& curves, const double* x,
                                       const PlantInputs& in, double* dxdt,
                                       const double* frozen_flows = nullptr) {
    const TurbineState t = turbine_at(curves, x, k.n, in);
    circuit_rhs(k, x, {cfg.H_r, t.head + cfg.H_d, t.torque - in.T_el}, dxdt, frozen_flows);
    return t;
}

inline Vector nonlinear_rhs(const PlantConfig& cfg, const CharacteristicCurveSet& curves,
                            const Vector& x, double y, std::optional<double> beta, double T_el) {
    const StateLayout s(cfg);
    if (static_cast<std::size_t>(x.size()) != s.size())
        throw ConfigError("nonlinear_rhs: state dimension mismatch");
    const PlantInputs in{y, detail::pitch_or_throw(curves, beta), T_el};
    Vector out(x.size());
    nonlinear_rhs_into(cfg, CircuitCoefficients::from(cfg), curves, x.data(), in, out.data());
    return out;
}

// Right-hand side with friction frozen at the discharges of x_ref.
inline Vector frozen_rhs(const PlantConfig& cfg, const CharacteristicCurveSet& curves,
                         const Vector& x, const Vector& x_ref, const PlantInputs& in) {
    Vector out(x.size());
    nonlinear_rhs_into(cfg, CircuitCoefficients::from(cfg), curves, x.data(), in, out.data(),
                       x_ref.data());
    return out;
}

// Stored hydraulic energy: each branch carries its own inductance (L/2 for
// the two terminal half-element branches, L for interior ones).
inline double circuit_energy(const PlantConfig& cfg, const Vector& x) {
    const StateLayout s(cfg);
    const RlcParams p = rlc_params(cfg, 0.0);
    double e = 0.0;
    for (std::size_t i = 1; i <= s.n + 1; ++i) {
        const double Lb = (i == 1 || i == s.n + 1) ? 0.5 * p.L : p.L;
        e += 0.5 * Lb * x(s.discharge(i)) * x(s.discharge(i));
    }
    for (std::size_t k = 1; k <= s.n; ++k) e += 0.5 * p.C * x(s.head(k)) * x(s.head(k));
    return e;
}

}  // namespace hydrolin
