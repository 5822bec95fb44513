#pragma once

// Turbine characteristic curves in polar form.
//
// A curve set stores the two dimensionless surfaces
//
//   WH(theta, y[, beta]) = (H_t / H_bep) / (q^2 + n^2)
//   WB(theta, y[, beta]) = (T_t / T_n)   / (q^2 + n^2)
//
// with q = Q_t / Q_bep, n = N / N_bep and theta = atan2(q, n). Francis machines
// depend on the guide-vane opening y only; Kaplan machines additionally on the
// blade pitch beta. Both y and beta are in pu of travel.
//
// Three surface backends are supported: a rectangular grid with multilinear
// interpolation (measured hill charts), the built-in synthetic closed form, and
// an arbitrary analytic callable (used by tests to build special surfaces).

#include "hydrolin/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace hydrolin {

enum class TurbineKind { francis, kaplan };

inline const char* to_string(TurbineKind kind) {
    return kind == TurbineKind::francis ? "francis" : "kaplan";
}

struct RatedValues {
    double Q_bep = 0.0;  // m^3/s
    double N_bep = 0.0;  // rpm
    double H_bep = 0.0;  // m
    double T_n = 0.0;    // N m
    double H_n = 0.0;    // m
    double D_n = 0.0;    // m

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(std::isfinite(v) && v > 0.0))
                throw ConfigError(std::string("rated.") + name + " must be strictly positive");
        };
        positive(Q_bep, "Q_bep");
        positive(N_bep, "N_bep");
        positive(H_bep, "H_bep");
        positive(T_n, "T_n");
        positive(H_n, "H_n");
        positive(D_n, "D_n");
    }
};

struct UnitVariables {
    double N11 = 0.0;
    double Q11 = 0.0;
    double T11 = 0.0;
};

// Similarity-scaled speed, discharge and torque factors. The torque argument is
// optional; T11 is zero when it is omitted.
inline UnitVariables unit_variables(double Q_t, double N, double H_t, double D_n,
                                    double T_t = 0.0) {
    if (!(H_t > 0.0)) throw DomainError("unit_variables: turbine head must be positive");
    if (!(D_n > 0.0)) throw DomainError("unit_variables: reference diameter must be positive");
    const double sqrt_h = std::sqrt(H_t);
    return {N * D_n / sqrt_h, Q_t / (D_n * D_n * sqrt_h), T_t / (D_n * D_n * H_t)};
}

// Polar angle of the per-unit operating point, in (-pi, pi].
inline double polar_angle(double q_norm, double n_norm) {
    if (q_norm == 0.0 && n_norm == 0.0)
        throw DomainError("polar_angle: degenerate origin (zero discharge and zero speed)");
    return std::atan2(q_norm, n_norm);
}

struct PolarPoint {
    double theta = 0.0;
    double y = 0.0;
    double beta = 0.0;  // ignored by Francis surfaces
};

struct SurfaceValues {
    double wh = 0.0;
    double wb = 0.0;
};

// Strictly increasing grid coordinates along one axis.
class GridAxis {
public:
    GridAxis() = default;

    GridAxis(std::vector<double> nodes, std::string name)
        : nodes_(std::move(nodes)), name_(std::move(name)) {
        if (nodes_.size() < 2)
            throw ConfigError("grid axis '" + name_ + "' needs at least 2 nodes");
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (!std::isfinite(nodes_[i]))
                throw ConfigError("grid axis '" + name_ + "' has a non-finite node");
            if (i > 0 && !(nodes_[i] > nodes_[i - 1]))
                throw ConfigError("grid axis '" + name_ + "' must be strictly increasing");
        }
    }

    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::string& name() const noexcept { return name_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    double front() const { return nodes_.front(); }
    double back() const { return nodes_.back(); }
    double operator[](std::size_t i) const { return nodes_[i]; }

    bool contains(double x) const { return x >= nodes_.front() && x <= nodes_.back(); }

    // Interpolation cell i such that nodes[i] <= x <= nodes[i+1]. A point on an
    // interior node belongs to the cell above it; the last node to the last cell.
    std::size_t cell(double x) const {
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - nodes_.begin());
        if (i == 0) return 0;
        return std::min(i - 1, nodes_.size() - 2);
    }

    // Local coordinate of x inside cell i, in [0, 1].
    double fraction(std::size_t i, double x) const {
        return (x - nodes_[i]) / (nodes_[i + 1] - nodes_[i]);
    }

private:
    std::vector<double> nodes_;
    std::string name_;
};

// Axis whose nodes include `anchor` exactly, spaced by `step`, covering
// [lo, hi]. Nodes are generated as anchor + k*step so the anchor is bit-exact.
inline GridAxis axis_through(double anchor, double step, double lo, double hi, std::string name) {
    if (!(step > 0.0) || !(lo <= anchor && anchor <= hi))
        throw ConfigError("axis_through: anchor must lie in [lo, hi] and step must be positive");
    const auto k_lo = static_cast<long>(std::floor((lo - anchor) / step + 1e-9));
    const auto k_hi = static_cast<long>(std::ceil((hi - anchor) / step - 1e-9));
    std::vector<double> nodes;
    for (long k = k_lo; k <= k_hi; ++k)
        nodes.push_back(k == 0 ? anchor : anchor + static_cast<double>(k) * step);
    return GridAxis(std::move(nodes), std::move(name));
}

struct DomainBox {
    double theta_min = 0.0;
    double theta_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
    double beta_min = 0.0;
    double beta_max = 0.0;

    bool contains(const PolarPoint& p, TurbineKind kind) const {
        const bool in = p.theta >= theta_min && p.theta <= theta_max && p.y >= y_min &&
                        p.y <= y_max;
        if (kind == TurbineKind::francis) return in;
        return in && p.beta >= beta_min && p.beta <= beta_max;
    }
};

inline std::string describe(const PolarPoint& p, TurbineKind kind) {
    std::string s = "(theta=" + std::to_string(p.theta) + ", y=" + std::to_string(p.y);
    if (kind == TurbineKind::kaplan) s += ", beta=" + std::to_string(p.beta);
    return s + ")";
}

// Rectangular grid with WH/WB node values stored row-major, theta outermost,
// then y, then beta (Kaplan only).
class TabulatedSurface {
public:
    TabulatedSurface(TurbineKind kind, GridAxis theta, GridAxis y, std::optional<GridAxis> beta,
                     std::vector<double> wh, std::vector<double> wb)
        : kind_(kind),
          theta_(std::move(theta)),
          y_(std::move(y)),
          beta_(std::move(beta)),
          wh_(std::move(wh)),
          wb_(std::move(wb)) {
        if ((kind_ == TurbineKind::kaplan) != beta_.has_value())
            throw ConfigError("a beta axis is required for Kaplan curves and forbidden for Francis");
        const std::size_t expected = theta_.size() * y_.size() * (beta_ ? beta_->size() : 1);
        if (wh_.size() != expected || wb_.size() != expected)
            throw ConfigError("curve value arrays do not match the grid shape (expected " +
                              std::to_string(expected) + " nodes)");
        for (std::size_t i = 0; i < expected; ++i) {
            if (!std::isfinite(wh_[i]) || !std::isfinite(wb_[i]))
                throw ConfigError("curve values must be finite");
            if (!(wh_[i] > 0.0))
                throw ConfigError("WH must be strictly positive on every grid node");
        }
    }

    TurbineKind kind() const noexcept { return kind_; }
    const GridAxis& theta_axis() const noexcept { return theta_; }
    const GridAxis& y_axis() const noexcept { return y_; }
    const std::optional<GridAxis>& beta_axis() const noexcept { return beta_; }
    const std::vector<double>& wh_values() const noexcept { return wh_; }
    const std::vector<double>& wb_values() const noexcept { return wb_; }

    std::size_t index(std::size_t i_theta, std::size_t i_y, std::size_t i_beta = 0) const {
        const std::size_t nb = beta_ ? beta_->size() : 1;
        return (i_theta * y_.size() + i_y) * nb + i_beta;
    }

    bool contains(const PolarPoint& p) const {
        bool in = theta_.contains(p.theta) && y_.contains(p.y);
        if (beta_) in = in && beta_->contains(p.beta);
        return in;
    }

    DomainBox domain() const {
        DomainBox box{theta_.front(), theta_.back(), y_.front(), y_.back(), 0.0, 0.0};
        if (beta_) {
            box.beta_min = beta_->front();
            box.beta_max = beta_->back();
        }
        return box;
    }

    SurfaceValues evaluate(const PolarPoint& p) const {
        if (!contains(p))
            throw DomainError("curve query outside grid " + describe(p, kind_));
        const std::size_t it = theta_.cell(p.theta);
        const std::size_t iy = y_.cell(p.y);
        const double tt = theta_.fraction(it, p.theta);
        const double ty = y_.fraction(iy, p.y);
        const double wt[2] = {1.0 - tt, tt};
        const double wy[2] = {1.0 - ty, ty};
        SurfaceValues out;
        if (!beta_) {
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    const double w = wt[a] * wy[b];
                    const std::size_t k = index(it + a, iy + b);
                    out.wh += w * wh_[k];
                    out.wb += w * wb_[k];
                }
            return out;
        }
        const std::size_t ib = beta_->cell(p.beta);
        const double tb = beta_->fraction(ib, p.beta);
        const double wbeta[2] = {1.0 - tb, tb};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c) {
                    const double w = wt[a] * wy[b] * wbeta[c];
                    const std::size_t k = index(it + a, iy + b, ib + c);
                    out.wh += w * wh_[k];
                    out.wb += w * wb_[k];
                }
        return out;
    }

    // True when `probe` lies in the (closed) interpolation cell of `anchor`, so
    // that a finite difference between them does not straddle a kink plane.
    bool same_cell(const PolarPoint& anchor, const PolarPoint& probe) const {
        if (!contains(probe)) return false;
        auto within = [](const GridAxis& ax, double a, double x) {
            const std::size_t i = ax.cell(a);
            return x >= ax[i] && x <= ax[i + 1];
        };
        bool ok = within(theta_, anchor.theta, probe.theta) && within(y_, anchor.y, probe.y);
        if (beta_) ok = ok && within(*beta_, anchor.beta, probe.beta);
        return ok;
    }

private:
    TurbineKind kind_;
    GridAxis theta_;
    GridAxis y_;
    std::optional<GridAxis> beta_;
    std::vector<double> wh_;
    std::vector<double> wb_;
};

// Parameters of the built-in closed-form curves. In per-unit (q, n) form
//
//   H_t / H_bep = a_h * (alpha n^2 + (1 - alpha) q^2 / kappa^2)
//   T_t / T_n   = a_b * (b q^2 / kappa - (b - 1) q n)
//
// i.e. a speed-driven pressure term plus an orifice term for the head, and an
// Euler-equation shaped torque (swirl from the guide vanes minus runner exit
// swirl). kappa(y, beta) is the relative opening, 1 at the BEP. a_h and a_b
// normalize WH and WB to exactly 1/2 at the BEP.
struct SyntheticCurveParams {
    double head_speed_coeff = 0.4;   // alpha
    double torque_flow_coeff = 2.5;  // b, > 1
    double y_bep = 0.8;
    double beta_bep = 0.0;           // Kaplan only
    double guide_vane_weight = 0.6;  // Kaplan: kappa = ky^w * kb^(1-w)
    double beta_offset = 0.25;       // Kaplan: kb = (beta + off) / (beta_bep + off)
    DomainBox domain{-0.5, 2.0, 0.1, 1.05, 0.0, 1.05};

    void validate(TurbineKind kind) const {
        detail::require(head_speed_coeff > 0.0 && head_speed_coeff < 1.0,
                        "synthetic.head_speed_coeff must lie in (0, 1)");
        detail::require(torque_flow_coeff > 1.0, "synthetic.torque_flow_coeff must exceed 1");
        detail::require(y_bep > 0.0 && y_bep <= 1.0, "synthetic.y_bep must lie in (0, 1]");
        detail::require(domain.theta_min < domain.theta_max && domain.y_min < domain.y_max,
                        "synthetic.domain bounds must be increasing");
        detail::require(domain.y_min > 0.0, "synthetic.domain y_min must be positive");
        if (kind == TurbineKind::kaplan) {
            detail::require(guide_vane_weight > 0.0 && guide_vane_weight <= 1.0,
                            "synthetic.guide_vane_weight must lie in (0, 1]");
            detail::require(beta_offset > 0.0, "synthetic.beta_offset must be positive");
            detail::require(domain.beta_min < domain.beta_max,
                            "synthetic.domain beta bounds must be increasing");
            detail::require(domain.beta_min + beta_offset > 0.0,
                            "synthetic.domain beta_min + beta_offset must be positive");
        }
    }
};

class SyntheticSurface {
public:
    SyntheticSurface(TurbineKind kind, SyntheticCurveParams params)
        : kind_(kind), p_(params) {
        p_.validate(kind_);
        const double s = std::sin(bep_theta());
        const double c = std::cos(bep_theta());
        const double alpha = p_.head_speed_coeff;
        const double b = p_.torque_flow_coeff;
        head_norm_ = 0.5 / (alpha * c * c + (1.0 - alpha) * s * s);
        torque_norm_ = 0.5 / (b * s * s - (b - 1.0) * s * c);
    }

    static double bep_theta() { return std::atan2(1.0, 1.0); }

    TurbineKind kind() const noexcept { return kind_; }
    const SyntheticCurveParams& params() const noexcept { return p_; }
    DomainBox domain() const { return p_.domain; }
    double head_norm() const noexcept { return head_norm_; }
    double torque_norm() const noexcept { return torque_norm_; }

    bool contains(const PolarPoint& p) const { return p_.domain.contains(p, kind_); }

    // Relative opening kappa(y, beta); exactly 1 at (y_bep, beta_bep).
    double opening(double y, double beta) const {
        const double ky = y / p_.y_bep;
        if (kind_ == TurbineKind::francis) return ky;
        const double kb = (beta + p_.beta_offset) / (p_.beta_bep + p_.beta_offset);
        const double w = p_.guide_vane_weight;
        return std::pow(ky, w) * std::pow(kb, 1.0 - w);
    }

    SurfaceValues evaluate(const PolarPoint& p) const {
        if (!contains(p))
            throw DomainError("curve query outside synthetic domain " + describe(p, kind_));
        const double s = std::sin(p.theta);
        const double c = std::cos(p.theta);
        const double kappa = opening(p.y, p.beta);
        const double alpha = p_.head_speed_coeff;
        const double b = p_.torque_flow_coeff;
        return {head_norm_ * (alpha * c * c + (1.0 - alpha) * s * s / (kappa * kappa)),
                torque_norm_ * (b * s * s / kappa - (b - 1.0) * s * c)};
    }

    bool same_cell(const PolarPoint&, const PolarPoint& probe) const { return contains(probe); }

private:
    TurbineKind kind_;
    SyntheticCurveParams p_;
    double head_norm_ = 1.0;
    double torque_norm_ = 1.0;
};

// Arbitrary smooth surface given as a callable.
class AnalyticSurface {
public:
    using Fn = std::function<SurfaceValues(const PolarPoint&)>;

    AnalyticSurface(TurbineKind kind, DomainBox domain, Fn fn)
        : kind_(kind), domain_(domain), fn_(std::move(fn)) {}

    TurbineKind kind() const noexcept { return kind_; }
    DomainBox domain() const { return domain_; }
    bool contains(const PolarPoint& p) const { return domain_.contains(p, kind_); }

    SurfaceValues evaluate(const PolarPoint& p) const {
        if (!contains(p))
            throw DomainError("curve query outside analytic domain " + describe(p, kind_));
        return fn_(p);
    }

    bool same_cell(const PolarPoint&, const PolarPoint& probe) const { return contains(probe); }

private:
    TurbineKind kind_;
    DomainBox domain_;
    Fn fn_;
};

class CharacteristicCurveSet {
public:
    using Surface = std::variant<TabulatedSurface, SyntheticSurface, AnalyticSurface>;

    CharacteristicCurveSet(RatedValues rated, Surface surface)
        : rated_(rated), surface_(std::move(surface)) {
        rated_.validate();
    }

    TurbineKind kind() const {
        return std::visit([](const auto& s) { return s.kind(); }, surface_);
    }
    const RatedValues& rated() const noexcept { return rated_; }
    const Surface& surface() const noexcept { return surface_; }

    const TabulatedSurface* tabulated() const { return std::get_if<TabulatedSurface>(&surface_); }
    const SyntheticSurface* synthetic() const { return std::get_if<SyntheticSurface>(&surface_); }

    DomainBox domain() const {
        return std::visit([](const auto& s) { return s.domain(); }, surface_);
    }
    bool contains(const PolarPoint& p) const {
        return std::visit([&](const auto& s) { return s.contains(p); }, surface_);
    }
    SurfaceValues evaluate(const PolarPoint& p) const {
        return std::visit([&](const auto& s) { return s.evaluate(p); }, surface_);
    }
    bool same_cell(const PolarPoint& anchor, const PolarPoint& probe) const {
        return std::visit([&](const auto& s) { return s.same_cell(anchor, probe); }, surface_);
    }

private:
    RatedValues rated_;
    Surface surface_;
};

namespace detail {

inline double pitch_or_throw(const CharacteristicCurveSet& curves, std::optional<double> beta) {
    if (curves.kind() == TurbineKind::francis) return 0.0;
    if (!beta) throw DomainError("Kaplan curves require a blade pitch");
    return *beta;
}

}  // namespace detail

inline double eval_WH(const CharacteristicCurveSet& curves, double theta, double y,
                      std::optional<double> beta = std::nullopt) {
    return curves.evaluate({theta, y, detail::pitch_or_throw(curves, beta)}).wh;
}

inline double eval_WB(const CharacteristicCurveSet& curves, double theta, double y,
                      std::optional<double> beta = std::nullopt) {
    return curves.evaluate({theta, y, detail::pitch_or_throw(curves, beta)}).wb;
}

// Head and torque of the turbine at one operating point.
struct TurbineState {
    double head = 0.0;    // H_t, m
    double torque = 0.0;  // T_t, N m
    double theta = 0.0;
};

inline TurbineState turbine_state(const CharacteristicCurveSet& curves, double Q_t, double N,
                                  double y, double beta) {
    const RatedValues& r = curves.rated();
    const double q = Q_t / r.Q_bep;
    const double n = N / r.N_bep;
    const double theta = polar_angle(q, n);
    const SurfaceValues w = curves.evaluate({theta, y, beta});
    const double scale = q * q + n * n;
    return {r.H_bep * w.wh * scale, r.T_n * w.wb * scale, theta};
}

inline double turbine_head(const CharacteristicCurveSet& curves, double Q_t, double N, double y,
                           std::optional<double> beta = std::nullopt) {
    return turbine_state(curves, Q_t, N, y, detail::pitch_or_throw(curves, beta)).head;
}

inline double turbine_torque(const CharacteristicCurveSet& curves, double Q_t, double N, double y,
                             std::optional<double> beta = std::nullopt) {
    return turbine_state(curves, Q_t, N, y, detail::pitch_or_throw(curves, beta)).torque;
}

// Efficiency-optimal blade pitch as a function of guide-vane opening.
struct OnCamTable {
    std::vector<double> y_points;
    std::vector<double> beta_points;

    void validate() const {
        detail::require(y_points.size() == beta_points.size(),
                        "on_cam: y and beta tables must have the same length");
        detail::require(y_points.size() >= 2, "on_cam: at least 2 points are required");
        for (std::size_t i = 0; i < y_points.size(); ++i) {
            detail::require(std::isfinite(y_points[i]) && std::isfinite(beta_points[i]),
                            "on_cam: table values must be finite");
            if (i > 0)
                detail::require(y_points[i] > y_points[i - 1],
                                "on_cam: y points must be strictly increasing");
        }
    }
};

inline double on_cam(const OnCamTable& table, double y) {
    const auto& ys = table.y_points;
    if (ys.size() < 2 || !(y >= ys.front() && y <= ys.back()))
        throw DomainError("on_cam: guide vane opening " + std::to_string(y) +
                          " outside table range");
    auto it = std::upper_bound(ys.begin(), ys.end(), y);
    std::size_t i = static_cast<std::size_t>(it - ys.begin());
    i = (i == 0) ? 0 : std::min(i - 1, ys.size() - 2);
    const double t = (y - ys[i]) / (ys[i + 1] - ys[i]);
    if (t == 0.0) return table.beta_points[i];
    if (t == 1.0) return table.beta_points[i + 1];
    return table.beta_points[i] + t * (table.beta_points[i + 1] - table.beta_points[i]);
}

// Samples any curve set onto a rectangular grid.
inline TabulatedSurface tabulate(const CharacteristicCurveSet& source, GridAxis theta, GridAxis y,
                                 std::optional<GridAxis> beta = std::nullopt) {
    const std::size_t nb = beta ? beta->size() : 1;
    std::vector<double> wh;
    std::vector<double> wb;
    wh.reserve(theta.size() * y.size() * nb);
    wb.reserve(theta.size() * y.size() * nb);
    for (double th : theta.nodes())
        for (double yy : y.nodes())
            for (std::size_t k = 0; k < nb; ++k) {
                const SurfaceValues v = source.evaluate({th, yy, beta ? (*beta)[k] : 0.0});
                wh.push_back(v.wh);
                wb.push_back(v.wb);
            }
    return TabulatedSurface(source.kind(), std::move(theta), std::move(y), std::move(beta),
                            std::move(wh), std::move(wb));
}

}  // namespace hydrolin
