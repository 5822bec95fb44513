#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace hydrolin;

namespace {

RatedValues rated() { return {110.0, 1000.0 / 3.0, 88.8, 2.5e6, 90.0, 3.8}; }

TabulatedSurface random_grid(TurbineKind kind, std::uint64_t seed) {
    oracle::Rng rng(seed);
    GridAxis th({-0.3, 0.1, 0.4, 0.9, 1.3}, "theta");
    GridAxis y({0.1, 0.35, 0.7, 1.0}, "y");
    std::optional<GridAxis> b;
    if (kind == TurbineKind::kaplan) b = GridAxis({0.0, 0.5, 1.0}, "beta");
    const std::size_t count = th.size() * y.size() * (b ? b->size() : 1);
    std::vector<double> wh, wb;
    for (std::size_t i = 0; i < count; ++i) {
        wh.push_back(rng.uniform(0.05, 2.0));
        wb.push_back(rng.uniform(-1.0, 1.0));
    }
    return TabulatedSurface(kind, th, y, b, wh, wb);
}

}  // namespace

TEST(UnitVariables, ZeroInputs) {
    const auto u = unit_variables(0.0, 0.0, 1.0, 1.0);
    EXPECT_EQ(u.N11, 0.0);
    EXPECT_EQ(u.Q11, 0.0);
}

TEST(UnitVariables, HandEvaluated) {
    auto u = unit_variables(4.0, 100.0, 4.0, 1.0);
    EXPECT_DOUBLE_EQ(u.N11, 50.0);
    EXPECT_DOUBLE_EQ(u.Q11, 2.0);
    u = unit_variables(1.0, 1.0, 1.0, 2.0);
    EXPECT_DOUBLE_EQ(u.N11, 2.0);
    EXPECT_DOUBLE_EQ(u.Q11, 0.25);
}

TEST(UnitVariables, NonPositiveHeadRejected) {
    EXPECT_THROW(unit_variables(1.0, 1.0, 0.0, 1.0), DomainError);
    EXPECT_THROW(unit_variables(1.0, 1.0, -2.0, 1.0), DomainError);
}

TEST(PolarAngle, Examples) {
    EXPECT_DOUBLE_EQ(polar_angle(1.0, 1.0), std::numbers::pi / 4);
    EXPECT_EQ(polar_angle(0.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(polar_angle(1.0, 0.0), std::numbers::pi / 2);
    EXPECT_THROW(polar_angle(0.0, 0.0), DomainError);
}

TEST(PolarAngle, FirstQuadrantIsPlainArctan) {
    oracle::Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        const double q = rng.uniform(1e-3, 3.0);
        const double n = rng.uniform(1e-3, 3.0);
        EXPECT_NEAR(polar_angle(q, n), std::atan(q / n), 1e-15);
    }
    // pump quadrant stays continuous and in range
    EXPECT_GT(polar_angle(-0.1, 1.0), -std::numbers::pi);
    EXPECT_DOUBLE_EQ(polar_angle(0.0, -1.0), std::numbers::pi);
}

TEST(Interpolation, NodeExactnessFrancisAndKaplan) {
    for (auto kind : {TurbineKind::francis, TurbineKind::kaplan}) {
        const TabulatedSurface s = random_grid(kind, 7);
        const std::size_t nb = s.beta_axis() ? s.beta_axis()->size() : 1;
        for (std::size_t i = 0; i < s.theta_axis().size(); ++i)
            for (std::size_t j = 0; j < s.y_axis().size(); ++j)
                for (std::size_t k = 0; k < nb; ++k) {
                    const PolarPoint p{s.theta_axis()[i], s.y_axis()[j],
                                       s.beta_axis() ? (*s.beta_axis())[k] : 0.0};
                    const auto v = s.evaluate(p);
                    EXPECT_EQ(v.wh, s.wh_values()[s.index(i, j, k)]);
                    EXPECT_EQ(v.wb, s.wb_values()[s.index(i, j, k)]);
                }
    }
}

TEST(Interpolation, CellMidpoint) {
    // corners along theta: (1, 1) at theta=0, (3, 3) at theta=1
    const TabulatedSurface s(TurbineKind::francis, GridAxis({0.0, 1.0}, "theta"),
                             GridAxis({0.0, 1.0}, "y"), std::nullopt, {1, 1, 3, 3}, {1, 1, 3, 3});
    const auto v = s.evaluate({0.5, 0.5, 0.0});
    EXPECT_DOUBLE_EQ(v.wh, 2.0);
    EXPECT_DOUBLE_EQ(v.wb, 2.0);
}

TEST(Interpolation, AffineAlongGridEdges) {
    const TabulatedSurface s = random_grid(TurbineKind::francis, 19);
    oracle::Rng rng(5);
    for (std::size_t j = 0; j < s.y_axis().size(); ++j)
        for (std::size_t i = 0; i + 1 < s.theta_axis().size(); ++i) {
            const double a = s.theta_axis()[i], b = s.theta_axis()[i + 1];
            const double t = rng.uniform(0.0, 1.0);
            const auto mid = s.evaluate({a + t * (b - a), s.y_axis()[j], 0.0});
            const double lo = s.wh_values()[s.index(i, j)], hi = s.wh_values()[s.index(i + 1, j)];
            EXPECT_NEAR(mid.wh, lo + t * (hi - lo), 1e-13);
        }
}

TEST(Interpolation, OutsideGridRejected) {
    const TabulatedSurface s = random_grid(TurbineKind::kaplan, 3);
    EXPECT_THROW(s.evaluate({2.0, 0.5, 0.5}), DomainError);
    EXPECT_THROW(s.evaluate({0.5, 0.05, 0.5}), DomainError);
    EXPECT_THROW(s.evaluate({0.5, 0.5, 1.2}), DomainError);
}

// Bilinear interpolation of the closed-form surface stays within the classic
// bound (h_t^2 max|f_tt| + h_y^2 max|f_yy|) / 8, with the second derivatives
// bounded by dense sampling of the per-unit oracle.
TEST(Interpolation, OffGridAgainstClosedForm) {
    const RatedValues r = rated();
    const CharacteristicCurveSet exact = fixture::synthetic_francis(r);
    const oracle::SyntheticPlant o{r.H_bep, r.T_n, r.Q_bep, r.N_bep, 0.4, 2.5, 0.8};
    auto w = [&](double theta, double y) {
        // (q, n) on the unit circle: q^2 + n^2 = 1
        const double q = std::sin(theta) * r.Q_bep, n = std::cos(theta) * r.N_bep;
        return SurfaceValues{o.head(q, n, y) / r.H_bep, o.torque(q, n, y) / r.T_n};
    };
    const double ht = 0.05, hy = 0.05;
    const TabulatedSurface tab =
        tabulate(exact, axis_through(SyntheticSurface::bep_theta(), ht, 0.0, 1.2, "theta"),
                 axis_through(0.8, hy, 0.3, 1.0, "y"));
    const CharacteristicCurveSet grid(r, tab);

    double ftt_h = 0, fyy_h = 0, ftt_b = 0, fyy_b = 0;
    const double d = 1e-4;
    for (double t = tab.theta_axis().front(); t <= tab.theta_axis().back(); t += 0.005)
        for (double y = tab.y_axis().front() + d; y <= tab.y_axis().back() - d; y += 0.005) {
            const auto c = w(t, y), tp = w(t + d, y), tm = w(t - d, y), yp = w(t, y + d), ym = w(t, y - d);
            ftt_h = std::max(ftt_h, std::abs(tp.wh - 2 * c.wh + tm.wh) / (d * d));
            fyy_h = std::max(fyy_h, std::abs(yp.wh - 2 * c.wh + ym.wh) / (d * d));
            ftt_b = std::max(ftt_b, std::abs(tp.wb - 2 * c.wb + tm.wb) / (d * d));
            fyy_b = std::max(fyy_b, std::abs(yp.wb - 2 * c.wb + ym.wb) / (d * d));
        }
    const double bound_h = 1.05 * (ht * ht * ftt_h + hy * hy * fyy_h) / 8.0;
    const double bound_b = 1.05 * (ht * ht * ftt_b + hy * hy * fyy_b) / 8.0;

    oracle::Rng rng(23);
    for (int i = 0; i < 400; ++i) {
        const double t = rng.uniform(tab.theta_axis().front(), tab.theta_axis().back());
        const double y = rng.uniform(tab.y_axis().front(), tab.y_axis().back());
        const auto ref = w(t, y);
        EXPECT_LE(std::abs(eval_WH(grid, t, y) - ref.wh), bound_h) << t << ", " << y;
        EXPECT_LE(std::abs(eval_WB(grid, t, y) - ref.wb), bound_b) << t << ", " << y;
        EXPECT_NEAR(eval_WH(exact, t, y), ref.wh, 1e-14);
        EXPECT_NEAR(eval_WB(exact, t, y), ref.wb, 1e-14);
    }
}

TEST(Interpolation, InvalidGridsRejected) {
    EXPECT_THROW(GridAxis({1.0}, "x"), ConfigError);
    EXPECT_THROW(GridAxis({0.0, 0.0, 1.0}, "x"), ConfigError);
    EXPECT_THROW(TabulatedSurface(TurbineKind::francis, GridAxis({0, 1}, "t"), GridAxis({0, 1}, "y"),
                                  std::nullopt, {1, 1, 0, 1}, {0, 0, 0, 0}),
                 ConfigError);
    EXPECT_THROW(TabulatedSurface(TurbineKind::francis, GridAxis({0, 1}, "t"), GridAxis({0, 1}, "y"),
                                  std::nullopt, {1, 1, 1}, {0, 0, 0}),
                 ConfigError);
    EXPECT_THROW(TabulatedSurface(TurbineKind::kaplan, GridAxis({0, 1}, "t"), GridAxis({0, 1}, "y"),
                                  std::nullopt, {1, 1, 1, 1}, {0, 0, 0, 0}),
                 ConfigError);
}

TEST(TurbineHead, BestEfficiencyPoint) {
    const RatedValues r = rated();
    const auto curves = fixture::synthetic_francis(r);
    EXPECT_NEAR(turbine_head(curves, r.Q_bep, r.N_bep, 0.8), r.H_bep, 1e-12 * r.H_bep);
    EXPECT_NEAR(turbine_torque(curves, r.Q_bep, r.N_bep, 0.8), r.T_n, 1e-12 * r.T_n);
}

TEST(TurbineHead, HomogeneityOfDegreeTwo) {
    const RatedValues r = rated();
    const auto curves = fixture::synthetic_francis(r);
    EXPECT_NEAR(turbine_head(curves, 2 * r.Q_bep, 2 * r.N_bep, 0.6),
                4 * turbine_head(curves, r.Q_bep, r.N_bep, 0.6), 1e-10);
    EXPECT_NEAR(turbine_torque(curves, 2 * r.Q_bep, 2 * r.N_bep, 0.6),
                4 * turbine_torque(curves, r.Q_bep, r.N_bep, 0.6), 1e-4);
    oracle::Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        const double Q = rng.uniform(10, 150), N = rng.uniform(150, 400), y = rng.uniform(0.2, 1.0);
        const double k = rng.uniform(0.3, 2.0);
        EXPECT_NEAR(turbine_head(curves, k * Q, k * N, y), k * k * turbine_head(curves, Q, N, y),
                    1e-12 * k * k * turbine_head(curves, Q, N, y));
        EXPECT_NEAR(turbine_torque(curves, k * Q, k * N, y), k * k * turbine_torque(curves, Q, N, y),
                    1e-9 * r.T_n * k * k);
    }
}

TEST(TurbineHead, OffBestEfficiencyAgainstClosedForm) {
    const RatedValues r = rated();
    const auto curves = fixture::synthetic_francis(r);
    const oracle::SyntheticPlant o{r.H_bep, r.T_n, r.Q_bep, r.N_bep, 0.4, 2.5, 0.8};
    const double Q = 0.8 * r.Q_bep;
    EXPECT_NEAR(turbine_head(curves, Q, r.N_bep, 0.7), o.head(Q, r.N_bep, 0.7), 1e-12 * r.H_bep);
    EXPECT_NEAR(turbine_torque(curves, Q, r.N_bep, 0.7), o.torque(Q, r.N_bep, 0.7), 1e-12 * r.T_n);
}

TEST(TurbineHead, KaplanAgainstClosedForm) {
    const Plant p = fixture::bundled("kaplan");
    const auto o = oracle::SyntheticPlant::from(p);
    const RatedValues& r = p.curves.rated();
    oracle::Rng rng(41);
    for (int i = 0; i < 200; ++i) {
        const double Q = rng.uniform(0.3, 1.3) * r.Q_bep, N = rng.uniform(0.7, 1.2) * r.N_bep;
        const double y = rng.uniform(0.2, 1.0), b = rng.uniform(0.1, 1.0);
        EXPECT_NEAR(turbine_head(p.curves, Q, N, y, b), o.head(Q, N, y, b), 1e-11 * r.H_bep);
        EXPECT_NEAR(turbine_torque(p.curves, Q, N, y, b), o.torque(Q, N, y, b), 1e-11 * r.T_n);
    }
    EXPECT_THROW(turbine_head(p.curves, r.Q_bep, r.N_bep, 0.5), DomainError);
}

TEST(TurbineHead, PositiveWhereverDefined) {
    const RatedValues r = rated();
    const auto curves = fixture::synthetic_francis(r);
    oracle::Rng rng(43);
    for (int i = 0; i < 1000; ++i) {
        const double th = rng.uniform(-0.5, 2.0), y = rng.uniform(0.1, 1.05);
        EXPECT_GT(eval_WH(curves, th, y), 0.0);
    }
}

TEST(TurbineHead, DegenerateAndOutOfDomainQueries) {
    const RatedValues r = rated();
    const auto curves = fixture::synthetic_francis(r);
    EXPECT_THROW(turbine_head(curves, 0.0, 0.0, 0.5), DomainError);
    EXPECT_THROW(turbine_head(curves, -r.Q_bep, r.N_bep, 0.5), DomainError);  // theta = -pi/4
    EXPECT_THROW(turbine_head(curves, r.Q_bep, r.N_bep, 1.2), DomainError);
}

TEST(OnCam, KnotsMidpointsAndSweep) {
    OnCamTable t{{0.0, 0.25, 0.5, 1.0}, {0.1, 0.2, 0.4, 0.9}};
    EXPECT_EQ(on_cam(t, 0.25), 0.2);
    EXPECT_EQ(on_cam(t, 1.0), 0.9);
    EXPECT_EQ(on_cam(t, 0.0), 0.1);
    EXPECT_NEAR(on_cam(t, 0.375), 0.3, 1e-15);
    for (int i = 0; i <= 10000; ++i) {
        const double y = i / 10000.0;
        EXPECT_NEAR(on_cam(t, y), oracle::lerp_table(t.y_points, t.beta_points, y), 1e-12);
    }
    EXPECT_THROW(on_cam(t, 1.01), DomainError);
    EXPECT_THROW(on_cam(t, -0.01), DomainError);
    OnCamTable bad{{0.0, 0.0}, {0.1, 0.2}};
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(CurveCsv, RoundTripIsBitExact) {
    for (auto kind : {TurbineKind::francis, TurbineKind::kaplan}) {
        const TabulatedSurface s = random_grid(kind, 13);
        std::stringstream ss;
        write_curve_csv(ss, s);
        const TabulatedSurface back = read_curve_csv(ss, kind);
        EXPECT_EQ(back.wh_values(), s.wh_values());
        EXPECT_EQ(back.wb_values(), s.wb_values());
        EXPECT_EQ(back.theta_axis().nodes(), s.theta_axis().nodes());
        EXPECT_EQ(back.y_axis().nodes(), s.y_axis().nodes());
    }
}

TEST(CurveCsv, DeletedRowFailsGridRule) {
    for (auto kind : {TurbineKind::francis, TurbineKind::kaplan}) {
        const TabulatedSurface s = random_grid(kind, 17);
        std::stringstream ss;
        write_curve_csv(ss, s);
        std::string text = ss.str();
        // drop the 6th data row
        std::size_t pos = 0;
        for (int i = 0; i < 6; ++i) pos = text.find('\n', pos) + 1;
        const std::size_t end = text.find('\n', pos) + 1;
        text.erase(pos, end - pos);
        std::istringstream in(text);
        try {
            read_curve_csv(in, kind);
            FAIL() << "non-rectangular grid accepted";
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find("non-rectangular grid"), std::string::npos) << e.what();
        }
    }
}

TEST(CurveCsv, HeaderAndNumberErrors) {
    std::istringstream bad_header("theta,y,WB,WH\n0,0,1,1\n");
    EXPECT_THROW(read_curve_csv(bad_header, TurbineKind::francis), ConfigError);
    std::istringstream bad_num("theta,y,WH,WB\n0,0,x,1\n");
    EXPECT_THROW(read_curve_csv(bad_num, TurbineKind::francis), ConfigError);
}
