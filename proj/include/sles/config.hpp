#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sles/calibration.hpp"
#include "sles/error.hpp"
#include "sles/filtering.hpp"
#include "sles/fbm.hpp"
#include "sles/memory_solver.hpp"
#include "sles/sles_runner.hpp"

namespace sles {

using Json = nlohmann::json;

inline constexpr const char* tool_version = "sles 0.1.0";

/// Every parameter of one pipeline run. Serialized as a flat JSON object.
struct RunConfig {
    int n_fine = 64;
    int n_coarse = 16;
    double dt = 1e-3;
    double t_end = 1.0;
    double beta = 2.0;
    double delta = 0.01;
    double hurst = 0.75;
    double wm_r = 0.9;
    int wm_j_min = -48;
    int wm_j_max = 48;
    std::uint64_t members = 64;
    std::uint64_t les_members = 64;
    double epsilon = 0.01;
    PerturbationMode perturbation_mode = PerturbationMode::mixed;
    std::uint64_t seed = 0;
    FilterNormalization filter_normalization = FilterNormalization::unit_mass;
    bool wm_zero_adjust = true;
    double bc_left = -1.0;
    double bc_right = 1.0;
    NoiseMode noise_mode = NoiseMode::per_realization;
    /// Only every stride-th frame of the fine trajectories is written.
    std::uint64_t trajectory_stride = 10;

    [[nodiscard]] SolverConfig solver() const { return SolverConfig{dt, t_end, bc_left, bc_right}; }
    [[nodiscard]] MemoryKernel kernel() const { return MemoryKernel(beta); }
    [[nodiscard]] GaussianFilter filter() const { return GaussianFilter(delta, filter_normalization); }
    [[nodiscard]] ChebyshevGrid fine_grid() const { return ChebyshevGrid(n_fine); }
    [[nodiscard]] ChebyshevGrid coarse_grid() const { return ChebyshevGrid(n_coarse); }
    [[nodiscard]] PerturbationSpec perturbation() const {
        return PerturbationSpec{epsilon, derive_seed(seed, "ensemble-ic"), perturbation_mode};
    }
    [[nodiscard]] FbmConfig fbm() const {
        FbmConfig c;
        c.hurst = hurst;
        c.r = wm_r;
        c.j_min = wm_j_min;
        c.j_max = wm_j_max;
        c.seed = seed;
        c.zero_adjust = wm_zero_adjust;
        return c;
    }

    /// `prefix` is prepended to key paths in error messages.
    void validate(const std::string& prefix = "") const {
        auto bad = [&prefix](const std::string& key, const std::string& why) {
            fail(ErrorCode::config, "key '" + (prefix.empty() ? key : prefix + "." + key) + "': " + why);
        };
        if (n_fine < 2) bad("n_fine", "must be >= 2");
        if (n_coarse < 2) bad("n_coarse", "must be >= 2");
        if (!(dt > 0.0)) bad("dt", "must be positive");
        if (!(t_end >= dt)) bad("t_end", "must be at least dt");
        const double ratio = t_end / dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) bad("t_end", "must be an integer multiple of dt");
        if (!(beta > 0.0)) bad("beta", "must be positive");
        if (!(delta > 0.0)) bad("delta", "must be positive");
        if (!(hurst > 0.0 && hurst < 1.0)) bad("hurst", "must lie in (0, 1)");
        if (!(wm_r > 0.0 && wm_r < 1.0)) bad("wm_r", "must lie in (0, 1)");
        if (wm_j_min > 0) bad("wm_j_min", "must be <= 0");
        if (wm_j_max < 0) bad("wm_j_max", "must be >= 0");
        if (members < 2) bad("members", "must be >= 2");
        if (les_members < 1) bad("les_members", "must be >= 1");
        if (!(epsilon >= 0.0)) bad("epsilon", "must be nonnegative");
        if (trajectory_stride < 1) bad("trajectory_stride", "must be >= 1");
    }
};

namespace detail {

template <typename E>
E parse_enum(const Json& v, const std::string& key, std::initializer_list<std::pair<const char*, E>> options) {
    if (!v.is_string()) fail(ErrorCode::config, "key '" + key + "': expected a string");
    const auto s = v.get<std::string>();
    std::string names;
    for (const auto& [name, value] : options) {
        if (s == name) return value;
        names += names.empty() ? name : std::string(", ") + name;
    }
    fail(ErrorCode::config, "key '" + key + "': unknown value '" + s + "' (expected one of " + names + ")");
}

template <typename T>
void read_number(const Json& v, const std::string& key, T& out) {
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(ErrorCode::config, "key '" + key + "': expected true or false");
        out = v.get<bool>();
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) fail(ErrorCode::config, "key '" + key + "': expected a number");
        out = v.get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned()) fail(ErrorCode::config, "key '" + key + "': expected a nonnegative integer");
        out = v.get<T>();
    } else {
        if (!v.is_number_integer()) fail(ErrorCode::config, "key '" + key + "': expected an integer");
        out = v.get<T>();
    }
}

}  // namespace detail

/// Reads a flat parameter object; `prefix` is prepended to key paths in
/// error messages.
[[nodiscard]] inline RunConfig config_from_json(const Json& j, const std::string& prefix = "") {
    if (!j.is_object()) fail(ErrorCode::config, (prefix.empty() ? "config" : prefix) + ": expected a JSON object");
    RunConfig c;
    using Setter = std::function<void(const Json&, const std::string&)>;
    auto num = [&c](auto member) -> Setter {
        return [&c, member](const Json& v, const std::string& key) { detail::read_number(v, key, c.*member); };
    };
    const std::map<std::string, Setter> setters{
        {"n_fine", num(&RunConfig::n_fine)},
        {"n_coarse", num(&RunConfig::n_coarse)},
        {"dt", num(&RunConfig::dt)},
        {"t_end", num(&RunConfig::t_end)},
        {"beta", num(&RunConfig::beta)},
        {"delta", num(&RunConfig::delta)},
        {"hurst", num(&RunConfig::hurst)},
        {"wm_r", num(&RunConfig::wm_r)},
        {"wm_j_min", num(&RunConfig::wm_j_min)},
        {"wm_j_max", num(&RunConfig::wm_j_max)},
        {"members", num(&RunConfig::members)},
        {"les_members", num(&RunConfig::les_members)},
        {"epsilon", num(&RunConfig::epsilon)},
        {"seed", num(&RunConfig::seed)},
        {"wm_zero_adjust", num(&RunConfig::wm_zero_adjust)},
        {"bc_left", num(&RunConfig::bc_left)},
        {"bc_right", num(&RunConfig::bc_right)},
        {"trajectory_stride", num(&RunConfig::trajectory_stride)},
        {"perturbation_mode",
         [&c](const Json& v, const std::string& key) {
             c.perturbation_mode = detail::parse_enum<PerturbationMode>(
                 v, key,
                 {{"sine", PerturbationMode::sine},
                  {"half_cosine", PerturbationMode::half_cosine},
                  {"mixed", PerturbationMode::mixed}});
         }},
        {"filter_normalization",
         [&c](const Json& v, const std::string& key) {
             c.filter_normalization = detail::parse_enum<FilterNormalization>(
                 v, key, {{"unit_mass", FilterNormalization::unit_mass}, {"literal", FilterNormalization::literal}});
         }},
        {"noise_mode",
         [&c](const Json& v, const std::string& key) {
             c.noise_mode = detail::parse_enum<NoiseMode>(
                 v, key, {{"per-realization-path", NoiseMode::per_realization}, {"shared-path", NoiseMode::shared}});
         }},
    };
    for (const auto& [key, value] : j.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        const auto it = setters.find(key);
        if (it == setters.end()) fail(ErrorCode::config, "key '" + path + "': unknown configuration key");
        it->second(value, path);
    }
    c.validate(prefix);
    return c;
}

[[nodiscard]] inline Json config_to_json(const RunConfig& c) {
    return Json{
        {"n_fine", c.n_fine},
        {"n_coarse", c.n_coarse},
        {"dt", c.dt},
        {"t_end", c.t_end},
        {"beta", c.beta},
        {"delta", c.delta},
        {"hurst", c.hurst},
        {"wm_r", c.wm_r},
        {"wm_j_min", c.wm_j_min},
        {"wm_j_max", c.wm_j_max},
        {"members", c.members},
        {"les_members", c.les_members},
        {"epsilon", c.epsilon},
        {"perturbation_mode", to_string(c.perturbation_mode)},
        {"seed", c.seed},
        {"filter_normalization", to_string(c.filter_normalization)},
        {"wm_zero_adjust", c.wm_zero_adjust},
        {"bc_left", c.bc_left},
        {"bc_right", c.bc_right},
        {"noise_mode", to_string(c.noise_mode)},
        {"trajectory_stride", c.trajectory_stride},
    };
}

[[nodiscard]] inline Json read_json_file(const std::string& path, ErrorCode missing = ErrorCode::config) {
    std::ifstream in(path);
    if (!in) fail(missing, "cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        fail(missing == ErrorCode::config ? ErrorCode::config : ErrorCode::io,
             "'" + path + "' is not valid JSON: " + e.what());
    }
}

/// Accepts either a flat config document or a run manifest, whose
/// parameters live under "parameters".
[[nodiscard]] inline RunConfig load_config(const std::string& path) {
    const Json j = read_json_file(path);
    if (j.is_object() && j.contains("parameters") && j.contains("tool_version")) {
        return config_from_json(j.at("parameters"), "parameters");
    }
    return config_from_json(j);
}

}  // namespace sles
