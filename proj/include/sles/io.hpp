#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sles/calibration.hpp"
#include "sles/config.hpp"
#include "sles/error.hpp"
#include "sles/fbm.hpp"
#include "sles/spectral.hpp"

namespace sles::io {

namespace detail {

inline void append(std::string& out, double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    out.append(buf, static_cast<std::size_t>(len));
}

inline void append_row(std::string& out, std::initializer_list<double> values, long long tail = -1) {
    bool first = true;
    for (double v : values) {
        if (!first) out.push_back(',');
        append(out, v);
        first = false;
    }
    if (tail >= 0) {
        out.push_back(',');
        out += std::to_string(tail);
    }
    out.push_back('\n');
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(ErrorCode::io, "write to '" + path.string() + "' failed");
}

/// Rows of a numeric CSV with the given header; the header must match.
inline std::vector<std::vector<double>> read_csv(const std::filesystem::path& path, const std::string& header,
                                                 const std::string& producer) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::missing_artifact,
             "missing artifact '" + path.string() + "'; run '" + producer + "' first");
    }
    std::string line;
    if (!std::getline(in, line) || line != header) {
        fail(ErrorCode::io, "'" + path.string() + "' does not start with header '" + header + "'");
    }
    std::vector<std::vector<double>> rows;
    std::vector<double> row;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        row.clear();
        const char* p = line.c_str();
        while (true) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p) fail(ErrorCode::io, path.string() + ":" + std::to_string(lineno) + ": malformed number");
            row.push_back(v);
            if (*end == '\0') break;
            if (*end != ',') fail(ErrorCode::io, path.string() + ":" + std::to_string(lineno) + ": malformed row");
            p = end + 1;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace detail

/// Long-format CSV (t, x, value, member); every `stride`-th frame and the
/// last one are written.
template <typename Tag>
void write_series(const std::filesystem::path& path, std::span<const NodalSeries<Tag>> members,
                  std::size_t stride = 1) {
    std::string out = "t,x,value,member\n";
    for (std::size_t m = 0; m < members.size(); ++m) {
        const auto& s = members[m];
        const auto nodes = s.grid().nodes();
        for (std::size_t k = 0; k < s.steps(); ++k) {
            if (k % stride != 0 && k + 1 != s.steps()) continue;
            for (std::size_t j = 0; j < nodes.size(); ++j) {
                detail::append_row(out, {s.time(k), nodes[j], s(k, j)}, static_cast<long long>(m));
            }
        }
    }
    detail::write_text(path, out);
}

/// Reads a full-resolution series file written by write_series with
/// stride 1, checking it against the expected grid and time step.
template <typename Tag>
[[nodiscard]] std::vector<NodalSeries<Tag>> read_series(const std::filesystem::path& path, const ChebyshevGrid& grid,
                                                        double dt, const std::string& producer) {
    const auto rows = detail::read_csv(path, "t,x,value,member", producer);
    const std::size_t n = grid.size();
    auto mismatch = [&](const std::string& what) {
        fail(ErrorCode::io, "'" + path.string() + "' " + what + "; rerun '" + producer + "' with the current config");
    };
    if (rows.empty() || rows.size() % n != 0) mismatch("has a row count inconsistent with the grid");
    std::vector<NodalSeries<Tag>> out;
    std::vector<double> frame(n);
    for (std::size_t r = 0; r < rows.size(); r += n) {
        const auto member = static_cast<std::size_t>(rows[r][3]);
        if (member == out.size()) out.emplace_back(grid, dt);
        if (member + 1 != out.size()) mismatch("has members out of order");
        auto& s = out.back();
        const std::size_t k = s.steps();
        for (std::size_t j = 0; j < n; ++j) {
            const auto& row = rows[r + j];
            if (row.size() != 4) mismatch("has a row with the wrong column count");
            if (row[1] != grid.node(j) || static_cast<std::size_t>(row[3]) != member) mismatch("does not match the grid");
            if (std::abs(row[0] - s.time(k)) > 1e-9 * dt) mismatch("does not match the time step");
            frame[j] = row[2];
        }
        s.push_back(std::span<const double>(frame));
    }
    for (const auto& s : out) {
        if (s.steps() != out.front().steps()) mismatch("has members of different lengths");
    }
    return out;
}

inline void write_sigma(const std::filesystem::path& path, const SigmaProfile& sigma) {
    std::string out = "x,sigma\n";
    for (std::size_t j = 0; j < sigma.sigma.size(); ++j) detail::append_row(out, {sigma.grid.node(j), sigma.sigma[j]});
    detail::write_text(path, out);
}

[[nodiscard]] inline SigmaProfile read_sigma(const std::filesystem::path& path, const ChebyshevGrid& grid) {
    const auto rows = detail::read_csv(path, "x,sigma", "calibrate");
    if (rows.size() != grid.size()) fail(ErrorCode::io, "'" + path.string() + "' does not match the coarse grid");
    SigmaProfile s{grid, std::vector<double>(grid.size())};
    for (std::size_t j = 0; j < rows.size(); ++j) {
        if (rows[j].size() != 2 || rows[j][0] != grid.node(j)) {
            fail(ErrorCode::io, "'" + path.string() + "' does not match the coarse grid");
        }
        s.sigma[j] = rows[j][1];
    }
    return s;
}

inline void write_json(const std::filesystem::path& path, const Json& j) { detail::write_text(path, j.dump(2) + "\n"); }

/// Drift coefficients plus the parameters the model was calibrated under.
inline void write_drift(const std::filesystem::path& path, const SgsModel& model) {
    const auto& a = model.drift.a;
    write_json(path, Json{{"a0", a[0]},
                          {"a1", a[1]},
                          {"a2", a[2]},
                          {"a3", a[3]},
                          {"condition_number", model.drift.condition_number},
                          {"provenance",
                           {{"hurst", model.hurst},
                            {"delta", model.delta},
                            {"beta", model.beta},
                            {"horizon", model.horizon}}}});
}

[[nodiscard]] inline SgsModel read_model(const std::filesystem::path& drift_path,
                                         const std::filesystem::path& sigma_path, const ChebyshevGrid& grid) {
    const Json j = read_json_file(drift_path.string(), ErrorCode::missing_artifact);
    SgsModel m;
    try {
        m.drift.a = {j.at("a0").get<double>(), j.at("a1").get<double>(), j.at("a2").get<double>(),
                     j.at("a3").get<double>()};
        m.drift.condition_number = j.at("condition_number").get<double>();
        const auto& p = j.at("provenance");
        m.hurst = p.at("hurst").get<double>();
        m.delta = p.at("delta").get<double>();
        m.beta = p.at("beta").get<double>();
        m.horizon = p.at("horizon").get<double>();
    } catch (const Json::exception& e) {
        fail(ErrorCode::io, "'" + drift_path.string() + "' is malformed: " + e.what());
    }
    m.sigma = read_sigma(sigma_path, grid);
    return m;
}

/// Error CSV (t, x, error_vs_filtered, error_vs_raw).
inline void write_errors(const std::filesystem::path& path, const ErrorField& vs_filtered, const ErrorField& vs_raw) {
    require(vs_filtered.steps() == vs_raw.steps() && vs_filtered.grid() == vs_raw.grid(), ErrorCode::alignment,
            "error fields are not aligned");
    std::string out = "t,x,error_vs_filtered,error_vs_raw\n";
    const auto nodes = vs_filtered.grid().nodes();
    for (std::size_t k = 0; k < vs_filtered.steps(); ++k) {
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            detail::append_row(out, {vs_filtered.time(k), nodes[j], vs_filtered(k, j), vs_raw(k, j)});
        }
    }
    detail::write_text(path, out);
}

inline void write_fbm(const std::filesystem::path& path, const FbmPath& p) {
    std::string out = "t,value\n";
    for (std::size_t i = 0; i < p.times.size(); ++i) detail::append_row(out, {p.times[i], p.values[i]});
    detail::write_text(path, out);
}

[[nodiscard]] inline FbmPath read_fbm(const std::filesystem::path& path) {
    FbmPath p;
    for (const auto& row : detail::read_csv(path, "t,value", "fbm-sample")) {
        if (row.size() != 2) fail(ErrorCode::io, "'" + path.string() + "' has a malformed row");
        p.times.push_back(row[0]);
        p.values.push_back(row[1]);
    }
    return p;
}

}  // namespace sles::io
