#pragma once

// Linear time-invariant plant models around an operating point.
//
// Friction is frozen at R(Q_i0) and the turbine head/torque are replaced by
// their first-order Taylor expansions in (Q_t, N, y[, beta]), with partials
// taken by finite differences on the characteristic curves. The resulting
// model is
//
//   dx/dt = At x + Bt u,   u = [H_r, y, (beta), c_H + H_d, c_T - T_el]
//
// where c_H, c_T collect the constant terms of the Taylor expansions.

#include "hydrolin/circuit.hpp"
#include "hydrolin/curves.hpp"
#include "hydrolin/equilibrium.hpp"
#include "hydrolin/error.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace hydrolin {

// (f(x0 + eps) - f(x0 - eps)) / (2 eps)
template <class F>
double central_diff(F&& f, double x0, double eps) {
    return (f(x0 + eps) - f(x0 - eps)) / (2.0 * eps);
}

// Finite-difference steps. Q and N steps are relative to Q_bep and N_bep.
struct DiffSteps {
    double Q_rel = 1e-3;
    double N_rel = 1e-3;
    double y = 1e-3;
    double beta = 1e-3;
};

enum class DiffScheme { central, forward, backward };

inline const char* to_string(DiffScheme s) {
    switch (s) {
        case DiffScheme::central: return "central";
        case DiffScheme::forward: return "forward";
        case DiffScheme::backward: return "backward";
    }
    return "?";
}

enum class TurbineVariable { Q, N, y, beta };

inline const char* to_string(TurbineVariable v) {
    switch (v) {
        case TurbineVariable::Q: return "Q";
        case TurbineVariable::N: return "N";
        case TurbineVariable::y: return "y";
        case TurbineVariable::beta: return "beta";
    }
    return "?";
}

struct Partial {
    double head = 0.0;
    double torque = 0.0;
    double eps = 0.0;
    DiffScheme scheme = DiffScheme::central;
};

// Partials of turbine head and torque at the operating point. Units: head in
// m per (m^3/s | rpm | pu), torque in N m per the same.
struct DerivativeBundle {
    Partial Q;
    Partial N;
    Partial y;
    Partial beta;  // zero for Francis

    double dH_dQ() const { return Q.head; }
    double dH_dN() const { return N.head; }
    double dH_dy() const { return y.head; }
    double dH_dbeta() const { return beta.head; }
    double dT_dQ() const { return Q.torque; }
    double dT_dN() const { return N.torque; }
    double dT_dy() const { return y.torque; }
    double dT_dbeta() const { return beta.torque; }
};

namespace detail {

struct TurbineArgs {
    double Q, N, y, beta;

    double& operator[](TurbineVariable v) {
        switch (v) {
            case TurbineVariable::Q: return Q;
            case TurbineVariable::N: return N;
            case TurbineVariable::y: return y;
            default: return beta;
        }
    }

    PolarPoint polar(const RatedValues& r) const {
        return {polar_angle(Q / r.Q_bep, N / r.N_bep), y, beta};
    }
};

// One partial derivative. Central differences when both probes stay in the
// interpolation cell of the operating point; on tabulated curves a probe that
// crosses a grid plane (or the grid edge) is dropped in favour of a one-sided
// difference inside the cell. A probe leaving an analytic domain shrinks eps
// once before giving up.
inline Partial probe_partial(const CharacteristicCurveSet& curves, const TurbineArgs& at,
                             TurbineVariable var, double eps) {
    const RatedValues& r = curves.rated();
    const bool tabulated = curves.tabulated() != nullptr;
    const PolarPoint p0 = at.polar(r);
    auto eval = [&](const TurbineArgs& a) {
        return turbine_state(curves, a.Q, a.N, a.y, a.beta);
    };
    for (int attempt = 0; attempt < 2; ++attempt, eps *= 0.5) {
        TurbineArgs plus = at;
        TurbineArgs minus = at;
        plus[var] += eps;
        minus[var] -= eps;
        const PolarPoint pp = plus.polar(r);
        const PolarPoint pm = minus.polar(r);
        const bool in_plus = curves.same_cell(p0, pp);
        const bool in_minus = curves.same_cell(p0, pm);
        if (in_plus && in_minus) {
            const TurbineState a = eval(plus);
            const TurbineState b = eval(minus);
            return {(a.head - b.head) / (2.0 * eps), (a.torque - b.torque) / (2.0 * eps), eps,
                    DiffScheme::central};
        }
        if (tabulated && (in_plus || in_minus)) {
            const TurbineState c = eval(at);
            if (in_plus) {
                const TurbineState a = eval(plus);
                return {(a.head - c.head) / eps, (a.torque - c.torque) / eps, eps,
                        DiffScheme::forward};
            }
            const TurbineState b = eval(minus);
            return {(c.head - b.head) / eps, (c.torque - b.torque) / eps, eps,
                    DiffScheme::backward};
        }
    }
    throw DomainError(std::string("derivative_bundle: probes for d/d") + to_string(var) +
                      " leave the curve domain around " + describe(p0, curves.kind()));
}

}  // namespace detail

inline DerivativeBundle derivative_bundle(const CharacteristicCurveSet& curves,
                                          const OperatingPoint& op, const DiffSteps& steps = {}) {
    const RatedValues& r = curves.rated();
    if (!(steps.Q_rel > 0.0 && steps.N_rel > 0.0 && steps.y > 0.0 && steps.beta > 0.0))
        throw ConfigError("derivative_bundle: finite-difference steps must be positive");
    const detail::TurbineArgs at{op.Q_t0, op.N0, op.y0,
                                 curves.kind() == TurbineKind::kaplan ? op.beta0 : 0.0};
    DerivativeBundle d;
    d.Q = detail::probe_partial(curves, at, TurbineVariable::Q, steps.Q_rel * r.Q_bep);
    d.N = detail::probe_partial(curves, at, TurbineVariable::N, steps.N_rel * r.N_bep);
    d.y = detail::probe_partial(curves, at, TurbineVariable::y, steps.y);
    if (curves.kind() == TurbineKind::kaplan)
        d.beta = detail::probe_partial(curves, at, TurbineVariable::beta, steps.beta);
    return d;
}

struct LinearStateSpace {
    TurbineKind kind = TurbineKind::francis;
    std::size_t n = 0;
    Matrix A_tilde;
    Matrix B_tilde;
    std::vector<std::string> input_names;
    double c_H = 0.0;  // primed (beta-inclusive) variant for Kaplan
    double c_T = 0.0;
    OperatingPoint op;
    DerivativeBundle derivs;
    // Boundary values at the operating point.
    double H_r = 0.0;
    double H_d = 0.0;
    double T_el = 0.0;

    std::size_t input_size() const { return kind == TurbineKind::kaplan ? 5 : 4; }
    std::size_t state_size() const { return 2 * n + 2; }

    // Input vector for the given boundary values and controls.
    Vector input(double y, double beta, double reservoir_head, double downstream_head,
                 double electrical_torque) const {
        Vector u(input_size());
        std::size_t i = 0;
        u(i++) = reservoir_head;
        u(i++) = y;
        if (kind == TurbineKind::kaplan) u(i++) = beta;
        u(i++) = c_H + downstream_head;
        u(i++) = c_T - electrical_torque;
        return u;
    }

    Vector nominal_input() const { return input(op.y0, op.beta0, H_r, H_d, T_el); }

    double control_y(const Vector& u) const { return u(1); }
    double control_beta(const Vector& u) const {
        return kind == TurbineKind::kaplan ? u(2) : 0.0;
    }

    // Taylor-expanded turbine head and torque at state x and input u.
    double head(const double* x, const Vector& u) const {
        const double N = x[2 * n + 1] * rpm_per_rad_s;
        return derivs.dH_dQ() * x[n] + derivs.dH_dN() * N + derivs.dH_dy() * control_y(u) +
               derivs.dH_dbeta() * control_beta(u) + c_H;
    }
    double torque(const double* x, const Vector& u) const {
        const double N = x[2 * n + 1] * rpm_per_rad_s;
        return derivs.dT_dQ() * x[n] + derivs.dT_dN() * N + derivs.dT_dy() * control_y(u) +
               derivs.dT_dbeta() * control_beta(u) + c_T;
    }
};

namespace detail {

inline LinearStateSpace assemble_linear(const PlantConfig& cfg,
                                        const CharacteristicCurveSet& curves,
                                        const OperatingPoint& op, const DiffSteps& steps,
                                        bool with_pitch) {
    const StateLayout s(cfg);
    if (static_cast<std::size_t>(op.x0.size()) != s.size())
        throw ConfigError("linearize: operating point state has the wrong dimension");
    const double res = normalized_residual(
        cfg, nonlinear_rhs(cfg, curves, op.x0, op.y0,
                           with_pitch ? std::optional<double>(op.beta0) : std::nullopt,
                           op.T_t0));
    if (!(res <= 1e3 * equilibrium_tolerance))
        throw InfeasibleOperatingPoint("linearize: operating point is not an equilibrium "
                                       "(normalized residual " + std::to_string(res) + ")");

    LinearStateSpace lin;
    lin.kind = with_pitch ? TurbineKind::kaplan : TurbineKind::francis;
    lin.n = s.n;
    lin.op = op;
    lin.derivs = derivative_bundle(curves, op, steps);
    lin.H_r = cfg.H_r;
    lin.H_d = cfg.H_d;
    lin.T_el = op.T_t0;
    const DerivativeBundle& d = lin.derivs;

    const Matrix B = assemble_B(cfg);
    const auto B1 = B.col(0);
    const auto B2 = B.col(1);
    const auto B3 = B.col(2);

    // At = A(x0) + B2 [dH_dQ dH_dN] M + B3 [dT_dQ dT_dN] M; the N column of M
    // carries the rad/s -> rpm factor.
    lin.A_tilde = assemble_A(cfg, op.x0);
    lin.A_tilde.col(s.turbine_discharge()) += B2 * d.dH_dQ() + B3 * d.dT_dQ();
    lin.A_tilde.col(s.omega()) += (B2 * d.dH_dN() + B3 * d.dT_dN()) * rpm_per_rad_s;

    lin.B_tilde = Matrix::Zero(s.size(), lin.input_size());
    std::size_t c = 0;
    lin.B_tilde.col(c++) = B1;
    lin.B_tilde.col(c++) = B2 * d.dH_dy() + B3 * d.dT_dy();
    if (with_pitch) lin.B_tilde.col(c++) = B2 * d.dH_dbeta() + B3 * d.dT_dbeta();
    lin.B_tilde.col(c++) = B2;
    lin.B_tilde.col(c++) = B3;

    lin.c_H = op.H_t0 - d.dH_dQ() * op.Q_t0 - d.dH_dN() * op.N0 - d.dH_dy() * op.y0;
    lin.c_T = op.T_t0 - d.dT_dQ() * op.Q_t0 - d.dT_dN() * op.N0 - d.dT_dy() * op.y0;
    if (with_pitch) {
        lin.c_H -= d.dH_dbeta() * op.beta0;
        lin.c_T -= d.dT_dbeta() * op.beta0;
        lin.input_names = {"H_r", "y", "beta", "c_H + H_d", "c_T - T_el"};
    } else {
        lin.input_names = {"H_r", "y", "c_H + H_d", "c_T - T_el"};
    }
    return lin;
}

}  // namespace detail

inline LinearStateSpace linearize_francis(const PlantConfig& cfg,
                                          const CharacteristicCurveSet& curves,
                                          const OperatingPoint& op, const DiffSteps& steps = {}) {
    if (curves.kind() != TurbineKind::francis)
        throw ConfigError("linearize_francis: curve set is not a Francis set");
    return detail::assemble_linear(cfg, curves, op, steps, false);
}

inline LinearStateSpace linearize_kaplan(const PlantConfig& cfg,
                                         const CharacteristicCurveSet& curves,
                                         const OperatingPoint& op, const DiffSteps& steps = {}) {
    if (curves.kind() != TurbineKind::kaplan)
        throw ConfigError("linearize_kaplan: curve set is not a Kaplan set");
    return detail::assemble_linear(cfg, curves, op, steps, true);
}

inline LinearStateSpace linearize(const PlantConfig& cfg, const CharacteristicCurveSet& curves,
                                  const OperatingPoint& op, const DiffSteps& steps = {}) {
    return curves.kind() == TurbineKind::kaplan ? linearize_kaplan(cfg, curves, op, steps)
                                                : linearize_francis(cfg, curves, op, steps);
}

}  // namespace hydrolin
