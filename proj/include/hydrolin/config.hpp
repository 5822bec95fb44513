#pragma once

// Plant configuration files (JSON). Layout:
//
// {
//   "name": "francis-87MW",
//   "kind": "francis" | "kaplan",
//   "reservoir_head": 100.0, "downstream_head": 10.0,
//   "penstock": {"length": 500, "elements": 20, "diameter": 5.5,
//                "area": <optional, default pi D^2 / 4>,
//                "friction": 0.012, "wave_speed": 1200},
//   "gravity": 9.81,                         (optional)
//   "inertia": 4.0e6,
//   "synchronous_speed": 333.333,            (rpm)
//   "rated": {"Q_bep": .., "N_bep": .., "H_bep": .., "H_n": .., "D_n": ..,
//             "T_n": .. | "power_MW": ..},
//   "guide_vane_range": [0.2, 1.0],
//   "on_cam": {"y": [...], "beta": [...]},   (Kaplan only)
//   "curves": {"source": "synthetic", "params": {...}}
//           | {"source": "csv", "path": "relative/to/config.csv"},
//   "linearization": {"eps_Q": 1e-3, "eps_N": 1e-3, "eps_y": 1e-3, "eps_beta": 1e-3},
//   "head_output": "penstock_average" | "turbine"
// }
//
// Unknown keys are rejected.

#include "hydrolin/circuit.hpp"
#include "hydrolin/curve_csv.hpp"
#include "hydrolin/curves.hpp"
#include "hydrolin/error.hpp"
#include "hydrolin/linearize.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace hydrolin {

struct Plant {
    PlantConfig config;
    CharacteristicCurveSet curves;
    DiffSteps steps;
    std::string source;  // path of the config file, empty for in-memory text
};

namespace detail {

using json = nlohmann::json;

// Reads typed fields under a dotted path and remembers which keys were used.
class JsonReader {
public:
    JsonReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    std::string where(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    const json& raw(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) throw ConfigError(where(key) + ": missing required field");
        return j_.at(key);
    }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
        return v.get<double>();
    }

    double number(const std::string& key, double fallback) {
        return has(key) ? number(key) : (used_.insert(key), fallback);
    }

    int integer(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
        return v.get<int>();
    }

    std::string text(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    JsonReader object(const std::string& key) { return JsonReader(raw(key), where(key)); }

    // Rejects keys that were never read.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown field");
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError((path_.empty() ? std::string("config") : path_) + ": " + msg);
    }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

inline std::size_t line_of_offset(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

inline TurbineKind parse_kind(const std::string& s, const std::string& where) {
    if (s == "francis") return TurbineKind::francis;
    if (s == "kaplan") return TurbineKind::kaplan;
    throw ConfigError(where + ": expected \"francis\" or \"kaplan\", got \"" + s + "\"");
}

// `cam` supplies beta_bep for Kaplan plants when the file leaves it out.
inline SyntheticCurveParams parse_synthetic(JsonReader r, TurbineKind kind,
                                            const std::optional<OnCamTable>& cam) {
    SyntheticCurveParams p;
    if (kind == TurbineKind::kaplan && cam && !r.has("beta_bep"))
        p.beta_bep = on_cam(*cam, r.number("y_bep", p.y_bep));
    p.head_speed_coeff = r.number("head_speed_coeff", p.head_speed_coeff);
    p.torque_flow_coeff = r.number("torque_flow_coeff", p.torque_flow_coeff);
    p.y_bep = r.number("y_bep", p.y_bep);
    p.beta_bep = r.number("beta_bep", p.beta_bep);
    p.guide_vane_weight = r.number("guide_vane_weight", p.guide_vane_weight);
    p.beta_offset = r.number("beta_offset", p.beta_offset);
    if (r.has("domain")) {
        JsonReader d = r.object("domain");
        const auto th = d.numbers("theta");
        const auto y = d.numbers("y");
        if (th.size() != 2 || y.size() != 2)
            throw ConfigError(d.where("theta/y") + ": expected [min, max]");
        p.domain.theta_min = th[0];
        p.domain.theta_max = th[1];
        p.domain.y_min = y[0];
        p.domain.y_max = y[1];
        if (d.has("beta")) {
            const auto b = d.numbers("beta");
            if (b.size() != 2) throw ConfigError(d.where("beta") + ": expected [min, max]");
            p.domain.beta_min = b[0];
            p.domain.beta_max = b[1];
        }
        d.finish();
    }
    r.finish();
    p.validate(kind);
    return p;
}

}  // namespace detail

// Parses configuration text; `base_dir` resolves relative curve CSV paths.
inline Plant parse_plant(const std::string& text, const std::filesystem::path& base_dir = {},
                         const std::string& source = {}) {
    using detail::json;
    const std::string label = source.empty() ? std::string("config") : source;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(label + ":" + std::to_string(detail::line_of_offset(text, e.byte)) +
                          ": parse error: " + e.what());
    }

    detail::JsonReader r(j, "");
    PlantConfig cfg;
    cfg.name = r.has("name") ? r.text("name") : std::string("plant");
    cfg.kind = detail::parse_kind(r.text("kind"), "kind");
    cfg.H_r = r.number("reservoir_head");
    cfg.H_d = r.number("downstream_head");
    {
        detail::JsonReader p = r.object("penstock");
        cfg.length = p.number("length");
        cfg.n = p.integer("elements");
        cfg.D = p.number("diameter");
        cfg.A = p.number("area", 0.25 * std::numbers::pi * cfg.D * cfg.D);
        cfg.lambda = p.number("friction");
        cfg.a = p.number("wave_speed");
        p.finish();
    }
    cfg.g = r.number("gravity", 9.81);
    cfg.J = r.number("inertia");
    cfg.N_sync = r.number("synchronous_speed");
    {
        detail::JsonReader q = r.object("rated");
        cfg.rated.Q_bep = q.number("Q_bep");
        cfg.rated.N_bep = q.number("N_bep");
        cfg.rated.H_bep = q.number("H_bep");
        cfg.rated.H_n = q.number("H_n");
        cfg.rated.D_n = q.number("D_n");
        if (q.has("T_n") == q.has("power_MW"))
            throw ConfigError("rated: give exactly one of T_n or power_MW");
        cfg.rated.T_n = q.has("T_n")
                            ? q.number("T_n")
                            : q.number("power_MW") * 1e6 / (cfg.rated.N_bep / rpm_per_rad_s);
        q.finish();
    }
    if (r.has("guide_vane_range")) {
        const auto yr = r.numbers("guide_vane_range");
        if (yr.size() != 2) throw ConfigError("guide_vane_range: expected [y_min, y_max]");
        cfg.y_min = yr[0];
        cfg.y_max = yr[1];
    }
    if (r.has("on_cam")) {
        detail::JsonReader c = r.object("on_cam");
        OnCamTable t;
        t.y_points = c.numbers("y");
        t.beta_points = c.numbers("beta");
        c.finish();
        cfg.on_cam = t;
    }
    if (r.has("head_output")) {
        const std::string h = r.text("head_output");
        if (h == "penstock_average") cfg.head_output = HeadSignal::penstock_average;
        else if (h == "turbine") cfg.head_output = HeadSignal::turbine;
        else throw ConfigError("head_output: expected \"penstock_average\" or \"turbine\"");
    }
    DiffSteps steps;
    if (r.has("linearization")) {
        detail::JsonReader l = r.object("linearization");
        steps.Q_rel = l.number("eps_Q", steps.Q_rel);
        steps.N_rel = l.number("eps_N", steps.N_rel);
        steps.y = l.number("eps_y", steps.y);
        steps.beta = l.number("eps_beta", steps.beta);
        l.finish();
        if (!(steps.Q_rel > 0 && steps.N_rel > 0 && steps.y > 0 && steps.beta > 0))
            throw ConfigError("linearization: every eps must be > 0");
    }

    // Physical invariants first so that messages cite the plant fields.
    const auto problems = cfg.issues();
    if (!problems.empty()) {
        std::string msg = label + ": invalid plant";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }

    detail::JsonReader c = r.object("curves");
    const std::string src = c.text("source");
    std::optional<CharacteristicCurveSet::Surface> surface;
    if (src == "synthetic") {
        const SyntheticCurveParams p =
            c.has("params") ? detail::parse_synthetic(c.object("params"), cfg.kind, cfg.on_cam)
                            : detail::parse_synthetic(detail::JsonReader(detail::json::object(), "curves.params"),
                                                      cfg.kind, cfg.on_cam);
        surface = SyntheticSurface(cfg.kind, p);
    } else if (src == "csv") {
        const std::filesystem::path rel = c.text("path");
        const std::filesystem::path full = rel.is_absolute() ? rel : base_dir / rel;
        surface = load_curve_csv(full.string(), cfg.kind);
    } else {
        throw ConfigError("curves.source: expected \"synthetic\" or \"csv\", got \"" + src + "\"");
    }
    c.finish();
    r.finish();

    Plant plant{cfg, CharacteristicCurveSet(cfg.rated, std::move(*surface)), steps, source};
    if (plant.curves.kind() != cfg.kind)
        throw ConfigError("curves: surface kind does not match plant kind");
    return plant;
}

inline Plant load_plant(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_plant(ss.str(), path.parent_path(), path.string());
}

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> messages;
};

// Full schema, invariant, curve and on-cam check; never throws for bad input.
inline ValidationReport validate_plant_file(const std::filesystem::path& path) {
    ValidationReport rep;
    try {
        const Plant p = load_plant(path);
        const PlantConfig& c = p.config;
        rep.messages.push_back("plant '" + c.name + "' (" + to_string(c.kind) + "): " +
                               std::to_string(c.n) + " penstock elements, state size " +
                               std::to_string(c.state_size()));
        const DomainBox box = p.curves.domain();
        if (c.kind == TurbineKind::kaplan) {
            for (double y : {c.y_min, c.y_max}) {
                const double b = on_cam(*c.on_cam, y);
                if (!(b >= box.beta_min && b <= box.beta_max))
                    throw ConfigError("on_cam: pitch " + std::to_string(b) + " at y=" +
                                      std::to_string(y) + " outside the curve domain");
            }
        }
        rep.messages.push_back("ok");
    } catch (const Error& e) {
        rep.ok = false;
        rep.messages.emplace_back(e.what());
    }
    return rep;
}

}  // namespace hydrolin
