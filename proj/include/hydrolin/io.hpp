#pragma once

// JSON export of linear models and run manifests.

#include "hydrolin/circuit.hpp"
#include "hydrolin/error.hpp"
#include "hydrolin/linearize.hpp"

#include "json.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace hydrolin {

inline constexpr const char* tool_version = "0.1.0";

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& rows, const std::string& what) {
    if (!rows.is_array() || rows.empty() || !rows[0].is_array())
        throw ConfigError(what + ": expected an array of rows");
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = static_cast<Eigen::Index>(rows[0].size());
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (rows[i].size() != static_cast<std::size_t>(c)) throw ConfigError(what + ": ragged rows");
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
    }
    return m;
}

inline nlohmann::json partial_to_json(const Partial& p) {
    return {{"head", p.head}, {"torque", p.torque}, {"eps", p.eps}, {"scheme", to_string(p.scheme)}};
}

inline Partial partial_from_json(const nlohmann::json& j) {
    Partial p;
    p.head = j.at("head").get<double>();
    p.torque = j.at("torque").get<double>();
    p.eps = j.at("eps").get<double>();
    const std::string s = j.at("scheme").get<std::string>();
    p.scheme = s == "forward" ? DiffScheme::forward
             : s == "backward" ? DiffScheme::backward
                               : DiffScheme::central;
    return p;
}

}  // namespace detail

// State layout and units are written alongside the matrices so the file is
// self-describing for downstream controllers.
inline nlohmann::json linear_model_to_json(const LinearStateSpace& lin, const std::string& plant) {
    using nlohmann::json;
    json state = json::array();
    for (std::size_t i = 1; i <= lin.n + 1; ++i) state.push_back("Q_" + std::to_string(i) + " [m^3/s]");
    for (std::size_t k = 1; k <= lin.n; ++k) state.push_back("h_" + std::to_string(k) + " [m]");
    state.push_back("omega [rad/s]");
    json j;
    j["format"] = "hydrolin-linear-model";
    j["version"] = tool_version;
    j["plant"] = plant;
    j["kind"] = to_string(lin.kind);
    j["n"] = lin.n;
    j["state"] = state;
    j["inputs"] = lin.input_names;
    j["A"] = detail::matrix_to_json(lin.A_tilde);
    j["B"] = detail::matrix_to_json(lin.B_tilde);
    j["c_H"] = lin.c_H;
    j["c_T"] = lin.c_T;
    j["boundary"] = {{"H_r", lin.H_r}, {"H_d", lin.H_d}, {"T_el", lin.T_el}};
    j["operating_point"] = {{"y0", lin.op.y0},     {"beta0", lin.op.beta0}, {"N0", lin.op.N0},
                            {"Q_t0", lin.op.Q_t0}, {"H_t0", lin.op.H_t0},   {"T_t0", lin.op.T_t0},
                            {"x0", std::vector<double>(lin.op.x0.data(),
                                                       lin.op.x0.data() + lin.op.x0.size())}};
    j["partials"] = {{"Q", detail::partial_to_json(lin.derivs.Q)},
                     {"N", detail::partial_to_json(lin.derivs.N)},
                     {"y", detail::partial_to_json(lin.derivs.y)},
                     {"beta", detail::partial_to_json(lin.derivs.beta)}};
    j["nominal_input"] = [&] {
        const Vector u = lin.nominal_input();
        return std::vector<double>(u.data(), u.data() + u.size());
    }();
    return j;
}

inline LinearStateSpace linear_model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "hydrolin-linear-model")
            throw ConfigError("linear model: unexpected format tag");
        LinearStateSpace lin;
        const std::string kind = j.at("kind").get<std::string>();
        lin.kind = kind == "kaplan" ? TurbineKind::kaplan : TurbineKind::francis;
        lin.n = j.at("n").get<std::size_t>();
        lin.input_names = j.at("inputs").get<std::vector<std::string>>();
        lin.A_tilde = detail::matrix_from_json(j.at("A"), "A");
        lin.B_tilde = detail::matrix_from_json(j.at("B"), "B");
        lin.c_H = j.at("c_H").get<double>();
        lin.c_T = j.at("c_T").get<double>();
        lin.H_r = j.at("boundary").at("H_r").get<double>();
        lin.H_d = j.at("boundary").at("H_d").get<double>();
        lin.T_el = j.at("boundary").at("T_el").get<double>();
        const auto& op = j.at("operating_point");
        lin.op.y0 = op.at("y0").get<double>();
        lin.op.beta0 = op.at("beta0").get<double>();
        lin.op.N0 = op.at("N0").get<double>();
        lin.op.Q_t0 = op.at("Q_t0").get<double>();
        lin.op.H_t0 = op.at("H_t0").get<double>();
        lin.op.T_t0 = op.at("T_t0").get<double>();
        const auto x0 = op.at("x0").get<std::vector<double>>();
        lin.op.x0 = Eigen::Map<const Vector>(x0.data(), static_cast<Eigen::Index>(x0.size()));
        const auto& p = j.at("partials");
        lin.derivs.Q = detail::partial_from_json(p.at("Q"));
        lin.derivs.N = detail::partial_from_json(p.at("N"));
        lin.derivs.y = detail::partial_from_json(p.at("y"));
        lin.derivs.beta = detail::partial_from_json(p.at("beta"));
        if (static_cast<std::size_t>(lin.A_tilde.rows()) != lin.state_size() ||
            static_cast<std::size_t>(lin.B_tilde.cols()) != lin.input_size())
            throw ConfigError("linear model: matrix dimensions do not match n and kind");
        return lin;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("linear model: ") + e.what());
    }
}

inline void write_linear_model(std::ostream& out, const LinearStateSpace& lin, const std::string& plant) {
    out << linear_model_to_json(lin, plant).dump(2) << '\n';
}

inline LinearStateSpace read_linear_model(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("linear model: parse error: ") + e.what());
    }
    return linear_model_from_json(j);
}

struct RunManifest {
    std::string config_path;
    std::string command;
    std::map<std::string, std::string> options;
    std::string version = tool_version;
    std::string timestamp;
    std::string output_dir;

    static std::string now_utc() {
        const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    nlohmann::json to_json() const {
        return {{"config", config_path}, {"command", command},     {"options", options},
                {"version", version},    {"timestamp", timestamp}, {"output_dir", output_dir}};
    }

    static RunManifest from_json(const nlohmann::json& j) {
        RunManifest m;
        m.config_path = j.at("config").get<std::string>();
        m.command = j.at("command").get<std::string>();
        m.options = j.at("options").get<std::map<std::string, std::string>>();
        m.version = j.at("version").get<std::string>();
        m.timestamp = j.at("timestamp").get<std::string>();
        m.output_dir = j.at("output_dir").get<std::string>();
        return m;
    }

    void write(const std::filesystem::path& dir) const {
        std::ofstream out(dir / "manifest.json");
        if (!out) throw ConfigError("cannot write manifest in '" + dir.string() + "'");
        out << to_json().dump(2) << '\n';
    }
};

}  // namespace hydrolin
