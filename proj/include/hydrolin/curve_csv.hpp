#pragma once

// Curve CSV format:
//
//   theta,y,WH,WB            (Francis)
//   theta,y,beta,WH,WB       (Kaplan)
//
// One row per grid node, row-major with theta outermost and beta innermost.
// Angles in radians, y and beta in pu.

#include "hydrolin/curves.hpp"
#include "hydrolin/error.hpp"
#include "hydrolin/text.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace hydrolin {

namespace detail {

// Distinct values of one coordinate column in order of first appearance of
// each new value along the row-major sweep.
inline std::vector<double> leading_axis(const std::vector<double>& column, std::size_t stride) {
    std::vector<double> nodes;
    for (std::size_t i = 0; i < column.size(); i += stride) nodes.push_back(column[i]);
    return nodes;
}

}  // namespace detail

inline TabulatedSurface read_curve_csv(std::istream& in, TurbineKind kind,
                                       const std::string& source = "<curve csv>") {
    const bool kaplan = kind == TurbineKind::kaplan;
    const std::vector<std::string> expected =
        kaplan ? std::vector<std::string>{"theta", "y", "beta", "WH", "WB"}
               : std::vector<std::string>{"theta", "y", "WH", "WB"};
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw ConfigError(source + ":" + std::to_string(line_no) + ": " + msg);
    };

    if (!std::getline(in, line)) fail("empty curve file");
    ++line_no;
    if (split_csv(trim(line)) != expected) {
        std::string want;
        for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
        fail("header must be '" + want + "'");
    }

    std::vector<std::vector<double>> cols(expected.size());
    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = trim(line);
        if (row.empty()) continue;
        const auto fields = split_csv(row);
        if (fields.size() != expected.size())
            fail("expected " + std::to_string(expected.size()) + " fields, got " +
                 std::to_string(fields.size()));
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double v = 0.0;
            if (!parse_double(fields[c], v)) fail("cannot parse '" + fields[c] + "' as a number");
            cols[c].push_back(v);
        }
    }
    const std::size_t rows = cols[0].size();
    if (rows == 0) fail("no data rows");

    // Infer the axes from the sweep structure, then require the full Cartesian
    // product in row-major order.
    const auto& th_col = cols[0];
    const auto& y_col = cols[1];
    std::size_t inner = 1;  // rows per y value
    if (kaplan) {
        while (inner < rows && cols[2][inner] > cols[2][inner - 1]) ++inner;
    }
    std::size_t per_theta = inner;
    while (per_theta < rows && th_col[per_theta] == th_col[0]) ++per_theta;
    if (per_theta % inner != 0 || rows % per_theta != 0)
        throw ConfigError(source + ": non-rectangular grid (row count " + std::to_string(rows) +
                          " is not a full theta x y" + (kaplan ? " x beta" : "") + " product)");

    std::vector<double> th_nodes = detail::leading_axis(th_col, per_theta);
    std::vector<double> y_nodes;
    for (std::size_t i = 0; i < per_theta; i += inner) y_nodes.push_back(y_col[i]);
    std::vector<double> b_nodes;
    if (kaplan)
        for (std::size_t i = 0; i < inner; ++i) b_nodes.push_back(cols[2][i]);

    const std::size_t nb = kaplan ? b_nodes.size() : 1;
    if (th_nodes.size() * y_nodes.size() * nb != rows)
        throw ConfigError(source + ": non-rectangular grid (rows do not form a full product)");
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t it = r / per_theta;
        const std::size_t iy = (r % per_theta) / inner;
        const std::size_t ib = r % inner;
        bool ok = th_col[r] == th_nodes[it] && y_col[r] == y_nodes[iy];
        if (kaplan) ok = ok && cols[2][r] == b_nodes[ib];
        if (!ok)
            throw ConfigError(source + ":" + std::to_string(r + 2) +
                              ": non-rectangular grid (row breaks theta-outermost row-major order)");
    }

    std::optional<GridAxis> beta;
    if (kaplan) beta = GridAxis(b_nodes, "beta");
    const std::size_t wh_col = kaplan ? 3 : 2;
    return TabulatedSurface(kind, GridAxis(th_nodes, "theta"), GridAxis(y_nodes, "y"),
                            std::move(beta), cols[wh_col], cols[wh_col + 1]);
}

inline TabulatedSurface load_curve_csv(const std::string& path, TurbineKind kind) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open curve file '" + path + "'");
    return read_curve_csv(in, kind, path);
}

inline void write_curve_csv(std::ostream& out, const TabulatedSurface& surface) {
    const bool kaplan = surface.beta_axis().has_value();
    out << (kaplan ? "theta,y,beta,WH,WB\n" : "theta,y,WH,WB\n");
    const std::size_t nb = kaplan ? surface.beta_axis()->size() : 1;
    for (std::size_t i = 0; i < surface.theta_axis().size(); ++i)
        for (std::size_t j = 0; j < surface.y_axis().size(); ++j)
            for (std::size_t k = 0; k < nb; ++k) {
                const std::size_t idx = surface.index(i, j, k);
                out << format_double(surface.theta_axis()[i]) << ','
                    << format_double(surface.y_axis()[j]);
                if (kaplan) out << ',' << format_double((*surface.beta_axis())[k]);
                out << ',' << format_double(surface.wh_values()[idx]) << ','
                    << format_double(surface.wb_values()[idx]) << '\n';
            }
}

}  // namespace hydrolin
