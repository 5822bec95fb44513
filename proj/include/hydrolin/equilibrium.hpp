#pragma once

#include "hydrolin/circuit.hpp"
#include "hydrolin/curves.hpp"
#include "hydrolin/error.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

namespace hydrolin {

// Steady operating point of the nonlinear plant.
struct OperatingPoint {
    double y0 = 0.0;
    double beta0 = 0.0;  // Kaplan only
    double N0 = 0.0;     // rpm
    double Q_t0 = 0.0;   // m^3/s
    Vector x0;
    double H_t0 = 0.0;   // m
    double T_t0 = 0.0;   // N m; also the electrical torque holding the rotor
};

// Infinity norm of the right-hand side with each row scaled to per-unit:
// discharge rows as head imbalance over H_n, head rows as flow imbalance over
// Q_bep, the rotor row as torque imbalance over T_n.
inline double normalized_residual(const PlantConfig& cfg, const Vector& rhs) {
    const StateLayout s(cfg);
    const RlcParams p = rlc_params(cfg, 0.0);
    double worst = 0.0;
    for (std::size_t i = 1; i <= s.n + 1; ++i)
        worst = std::max(worst, std::abs(rhs(s.discharge(i))) * p.L / cfg.rated.H_n);
    for (std::size_t k = 1; k <= s.n; ++k)
        worst = std::max(worst, std::abs(rhs(s.head(k))) * p.C / cfg.rated.Q_bep);
    worst = std::max(worst, std::abs(rhs(s.omega())) * cfg.J / cfg.rated.T_n);
    return worst;
}

inline constexpr double equilibrium_tolerance = 1e-9;

namespace detail {

// Static head balance H_r - H_d - losses(Q) - H_t(Q) at fixed speed and opening.
struct StaticBalance {
    const PlantConfig& cfg;
    const CharacteristicCurveSet& curves;
    double N;
    double y;
    double beta;

    double losses(double Q) const { return cfg.n * rlc_params(cfg, Q).R * Q; }

    double operator()(double Q) const {
        return cfg.H_r - cfg.H_d - losses(Q) - turbine_state(curves, Q, N, y, beta).head;
    }
};

}  // namespace detail

// Steady state with all discharges equal, heads from the static balance and the
// rotor held at N_target by an electrical torque equal to the turbine torque.
// The discharge is found by a safeguarded Newton iteration inside the bracket
// of the first sign change of the static balance over the curve domain.
inline OperatingPoint find_equilibrium(const PlantConfig& cfg,
                                       const CharacteristicCurveSet& curves, double y,
                                       std::optional<double> beta, double N_target) {
    if (!(N_target > 0.0)) throw DomainError("find_equilibrium: target speed must be positive");
    if (!(y >= cfg.y_min - 1e-12 && y <= cfg.y_max + 1e-12))
        throw DomainError("find_equilibrium: guide vane opening " + std::to_string(y) +
                          " outside operating range");
    const double b = detail::pitch_or_throw(curves, beta);
    const RatedValues& r = curves.rated();
    const detail::StaticBalance f{cfg, curves, N_target, y, b};

    const DomainBox box = curves.domain();
    const double n_pu = N_target / r.N_bep;
    const double theta_lo = std::max(box.theta_min, 0.0);
    const double theta_hi = std::min(box.theta_max, 0.5 * std::numbers::pi);
    if (!(theta_lo < theta_hi))
        throw InfeasibleOperatingPoint("find_equilibrium: curve domain has no turbine quadrant");
    const double q_cap = 100.0 * r.Q_bep;
    auto flow_at = [&](double theta) {
        return std::min(q_cap, r.Q_bep * n_pu * std::tan(theta));
    };
    const PolarPoint probe{theta_lo, y, b};
    if (!curves.contains({0.5 * (theta_lo + theta_hi), y, b}) || !curves.contains(probe))
        throw InfeasibleOperatingPoint("find_equilibrium: opening outside curve domain " +
                                       describe(probe, curves.kind()));

    // Scan for the first +/- sign change; the theta_hi end is pulled in slightly
    // so the probe stays strictly inside the domain.
    constexpr int scan = 200;
    const double q_lo_all = flow_at(theta_lo);
    const double q_hi_all = flow_at(theta_hi - 1e-9 * (theta_hi - theta_lo));
    double lo = q_lo_all;
    double f_lo = f(lo);
    double hi = 0.0;
    double f_hi = 0.0;
    bool bracketed = false;
    for (int i = 1; i <= scan && !bracketed; ++i) {
        const double q = q_lo_all + (q_hi_all - q_lo_all) * i / scan;
        const double fq = f(q);
        if (f_lo > 0.0 && fq <= 0.0) {
            hi = q;
            f_hi = fq;
            bracketed = true;
        } else {
            lo = q;
            f_lo = fq;
        }
    }
    if (!bracketed)
        throw InfeasibleOperatingPoint("find_equilibrium: no head balance root inside curve "
                                       "domain at y=" + std::to_string(y));

    // Safeguarded Newton: fall back to bisection whenever the step leaves the bracket.
    double Q = (f_hi == 0.0) ? hi : lo - f_lo * (hi - lo) / (f_hi - f_lo);
    double fQ = f(Q);
    const double f_tol = 1e-13 * cfg.rated.H_n;
    constexpr int max_iter = 200;
    int iter = 0;
    for (; iter < max_iter && std::abs(fQ) > f_tol; ++iter) {
        if (fQ > 0.0) {
            lo = Q;
        } else {
            hi = Q;
        }
        const double h = 1e-7 * r.Q_bep;
        const double df = (f(std::min(Q + h, hi)) - f(std::max(Q - h, lo))) /
                          (std::min(Q + h, hi) - std::max(Q - h, lo));
        double next = (df < 0.0) ? Q - fQ / df : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - Q) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(Q)) {
            Q = next;
            fQ = f(Q);
            break;
        }
        Q = next;
        fQ = f(Q);
    }
    if (iter == max_iter)
        throw ConvergenceError("find_equilibrium: Newton iteration did not converge", fQ);

    const StateLayout s(cfg);
    const RlcParams p = rlc_params(cfg, Q);
    OperatingPoint op;
    op.y0 = y;
    op.beta0 = b;
    op.Q_t0 = Q;
    op.x0 = Vector::Zero(s.size());
    for (std::size_t i = 1; i <= s.n + 1; ++i) op.x0(s.discharge(i)) = Q;
    double h = cfg.H_r - 0.5 * p.R * Q;
    for (std::size_t k = 1; k <= s.n; ++k) {
        op.x0(s.head(k)) = h;
        h -= p.R * Q;
    }
    op.x0(s.omega()) = N_target / rpm_per_rad_s;
    // Re-derive the speed from the stored state so the rotor row balances exactly.
    op.N0 = op.x0(s.omega()) * rpm_per_rad_s;
    const TurbineState t = turbine_state(curves, Q, op.N0, y, b);
    op.H_t0 = t.head;
    op.T_t0 = t.torque;

    const Vector rhs = nonlinear_rhs(cfg, curves, op.x0, y, b, op.T_t0);
    const double res = normalized_residual(cfg, rhs);
    if (!(res <= equilibrium_tolerance))
        throw ConvergenceError("find_equilibrium: residual " + std::to_string(res) +
                                   " above tolerance",
                               res);
    return op;
}

}  // namespace hydrolin
