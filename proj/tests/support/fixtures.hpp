#pragma once

#include "hydrolin/hydrolin.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>

#ifndef HYDROLIN_CONFIG_DIR
#define HYDROLIN_CONFIG_DIR "configs"
#endif

namespace fixture {

inline hydrolin::Plant bundled(const std::string& name) {
    return hydrolin::load_plant(std::filesystem::path(HYDROLIN_CONFIG_DIR) / (name + ".json"));
}

// Francis-like plant with a configurable number of elements.
inline hydrolin::PlantConfig small_plant(int n, double lambda = 0.012) {
    hydrolin::PlantConfig c;
    c.name = "small";
    c.kind = hydrolin::TurbineKind::francis;
    c.H_r = 100.0;
    c.H_d = 10.0;
    c.length = 500.0;
    c.n = n;
    c.D = 5.5;
    c.A = 0.25 * std::numbers::pi * c.D * c.D;
    c.lambda = lambda;
    c.a = 1200.0;
    c.J = 4.0e6;
    c.rated = {110.0, 1000.0 / 3.0, 88.8, 2.5e6, 90.0, 3.8};
    c.N_sync = 1000.0 / 3.0;
    return c;
}

inline hydrolin::SyntheticCurveParams francis_params() {
    hydrolin::SyntheticCurveParams p;
    p.head_speed_coeff = 0.4;
    p.torque_flow_coeff = 2.5;
    p.y_bep = 0.8;
    return p;
}

inline hydrolin::CharacteristicCurveSet synthetic_francis(const hydrolin::RatedValues& r) {
    return {r, hydrolin::SyntheticSurface(hydrolin::TurbineKind::francis, francis_params())};
}

// WH = k cos^2(theta), WB = k' cos^2(theta): head and torque depend on speed only,
// so at constant speed the turbine acts as an ideal head source.
inline hydrolin::CharacteristicCurveSet ideal_head_source(const hydrolin::RatedValues& r,
                                                          double wh = 0.5, double wb = 0.5) {
    using namespace hydrolin;
    return {r, AnalyticSurface(TurbineKind::francis, DomainBox{-1.5, 1.5, 0.0, 1.1, 0.0, 0.0},
                               [wh, wb](const PolarPoint& p) {
                                   const double c = std::cos(p.theta);
                                   return SurfaceValues{wh * c * c, wb * c * c};
                               })};
}

}  // namespace fixture
