#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace hydrolin;

TEST(Equilibrium, LosslessStaticBalance) {
    const PlantConfig c = fixture::small_plant(10, 0.0);
    const auto curves = fixture::synthetic_francis(c.rated);
    for (double y : {0.2, 0.5, 0.9}) {
        const OperatingPoint op = find_equilibrium(c, curves, y, std::nullopt, c.N_sync);
        EXPECT_NEAR(op.H_t0, c.H_r - c.H_d, 1e-12 * c.H_r);
        const StateLayout s(c);
        for (std::size_t k = 1; k <= s.n; ++k) EXPECT_EQ(op.x0(s.head(k)), c.H_r);
    }
}

TEST(Equilibrium, ResidualBelowToleranceOnBundledPlants) {
    for (const char* name : {"francis", "kaplan"}) {
        const Plant p = fixture::bundled(name);
        for (int i = 2; i <= 10; ++i) {
            const double y = i / 10.0;
            std::optional<double> beta;
            if (p.config.kind == TurbineKind::kaplan) beta = on_cam(*p.config.on_cam, y);
            const OperatingPoint op = find_equilibrium(p.config, p.curves, y, beta, p.config.N_sync);
            const Vector r = nonlinear_rhs(p.config, p.curves, op.x0, y, beta, op.T_t0);
            EXPECT_LE(normalized_residual(p.config, r), 1e-9) << name << " y=" << y;
            const StateLayout s(p.config);
            for (std::size_t i = 1; i <= s.n + 1; ++i) EXPECT_EQ(op.x0(s.discharge(i)), op.Q_t0);
            for (std::size_t k = 2; k <= s.n; ++k) EXPECT_LT(op.x0(s.head(k)), op.x0(s.head(k - 1)));
            EXPECT_NEAR(op.N0, p.config.N_sync, 1e-9);
        }
    }
}

TEST(Equilibrium, MatchesBisectionOracle) {
    const Plant p = fixture::bundled("francis");
    const auto turb = oracle::SyntheticPlant::from(p);
    const auto circ = oracle::CircuitOracle::from(p.config);
    const double N = p.config.N_sync, y = 0.9;
    auto balance = [&](double Q) {
        return p.config.H_r - p.config.H_d - p.config.n * circ.Rk * Q * Q - turb.head(Q, N, y);
    };
    const double Q_ref = oracle::bisect(balance, 1.0, 3.0 * p.config.rated.Q_bep);
    const OperatingPoint op = find_equilibrium(p.config, p.curves, y, std::nullopt, N);
    EXPECT_NEAR(op.Q_t0, Q_ref, 1e-11 * Q_ref);
    EXPECT_NEAR(op.H_t0, turb.head(Q_ref, N, y), 1e-9);
    EXPECT_NEAR(op.T_t0, turb.torque(Q_ref, N, y), 1e-9 * p.config.rated.T_n);
}

TEST(Equilibrium, KaplanMatchesBisectionOracle) {
    const Plant p = fixture::bundled("kaplan");
    const auto turb = oracle::SyntheticPlant::from(p);
    const auto circ = oracle::CircuitOracle::from(p.config);
    const double N = p.config.N_sync;
    for (double y : {0.3, 0.65, 1.0}) {
        const double b = oracle::lerp_table(p.config.on_cam->y_points, p.config.on_cam->beta_points, y);
        auto balance = [&](double Q) {
            return p.config.H_r - p.config.H_d - p.config.n * circ.Rk * Q * Q - turb.head(Q, N, y, b);
        };
        const double Q_ref = oracle::bisect(balance, 1.0, 3.0 * p.config.rated.Q_bep);
        const OperatingPoint op = find_equilibrium(p.config, p.curves, y, b, N);
        EXPECT_NEAR(op.Q_t0, Q_ref, 1e-11 * Q_ref);
        EXPECT_NEAR(op.beta0, b, 1e-15);
    }
}

TEST(Equilibrium, Errors) {
    const Plant p = fixture::bundled("francis");
    EXPECT_THROW(find_equilibrium(p.config, p.curves, 0.1, std::nullopt, p.config.N_sync), DomainError);
    EXPECT_THROW(find_equilibrium(p.config, p.curves, 0.5, std::nullopt, 0.0), DomainError);
    // Curve domain that ends before the head balance crosses zero.
    SyntheticCurveParams sp = fixture::francis_params();
    sp.domain.theta_max = 0.2;
    const CharacteristicCurveSet narrow(p.config.rated, SyntheticSurface(TurbineKind::francis, sp));
    EXPECT_THROW(find_equilibrium(p.config, narrow, 0.5, std::nullopt, p.config.N_sync),
                 InfeasibleOperatingPoint);
    const Plant k = fixture::bundled("kaplan");
    EXPECT_THROW(find_equilibrium(k.config, k.curves, 0.5, std::nullopt, k.config.N_sync), DomainError);
}
