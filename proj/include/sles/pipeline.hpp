#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sles/calibration.hpp"
#include "sles/config.hpp"
#include "sles/fbm.hpp"
#include "sles/filtering.hpp"
#include "sles/io.hpp"
#include "sles/memory_solver.hpp"
#include "sles/sles_runner.hpp"

namespace sles {

namespace artifact {
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* fine = "benchmark/fine_trajectories.csv";
inline constexpr const char* filtered = "benchmark/filtered.csv";
inline constexpr const char* raw = "benchmark/raw_coarse.csv";
inline constexpr const char* sgs = "benchmark/sgs.csv";
inline constexpr const char* drift = "model/drift.json";
inline constexpr const char* sigma = "model/sigma.csv";
inline constexpr const char* les = "les/trajectories.csv";
inline constexpr const char* errors = "compare/errors.csv";
inline constexpr const char* summary = "compare/summary.json";
inline constexpr const char* baseline = "compare/baseline_trajectory.csv";
inline constexpr const char* baseline_errors = "compare/baseline_errors.csv";
inline constexpr const char* fbm = "fbm/path.csv";
}  // namespace artifact

/// Benchmark initial condition on the fine grid, lifted linearly when the
/// configured boundary values differ from its own (-1, 1).
[[nodiscard]] inline Field fine_initial_condition(const RunConfig& cfg) {
    const auto grid = cfg.fine_grid();
    Field ic = benchmark_initial_condition(grid);
    const double right = cfg.bc_right - ic[0];
    const double left = cfg.bc_left - ic[grid.size() - 1];
    if (right == 0.0 && left == 0.0) return ic;
    std::vector<double> v(ic.values().begin(), ic.values().end());
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double x = grid.node(j);
        v[j] += 0.5 * (right * (1.0 + x) + left * (1.0 - x));
    }
    v.front() = cfg.bc_right;
    v.back() = cfg.bc_left;
    return Field(grid, std::move(v));
}

/// Filtered fine initial condition on the coarse grid with the boundary
/// values pinned to the Dirichlet data.
[[nodiscard]] inline Field coarse_initial_condition(const RunConfig& cfg) {
    const auto coarse = cfg.coarse_grid();
    const Field filtered = filter_to(fine_initial_condition(cfg), cfg.filter(), coarse);
    std::vector<double> v(filtered.values().begin(), filtered.values().end());
    v.front() = cfg.bc_right;
    v.back() = cfg.bc_left;
    return Field(coarse, std::move(v));
}

[[nodiscard]] inline Ensemble run_benchmark(const RunConfig& cfg, bool keep_fine = true) {
    return generate_ensemble(fine_initial_condition(cfg), cfg.perturbation(), cfg.members, cfg.solver(), cfg.kernel(),
                             cfg.filter(), cfg.coarse_grid(), keep_fine);
}

[[nodiscard]] inline SlesConfig sles_config(const RunConfig& cfg, const SgsModel& model) {
    SlesConfig s;
    s.solver = cfg.solver();
    s.beta = cfg.beta;
    s.delta = cfg.delta;
    s.model = model;
    s.fbm = cfg.fbm();
    s.noise_mode = cfg.noise_mode;
    s.les_members = cfg.les_members;
    s.seed = cfg.seed;
    return s;
}

[[nodiscard]] inline std::vector<Trajectory> run_les(const RunConfig& cfg, const SgsModel& model) {
    return run_les_ensemble(coarse_initial_condition(cfg), sles_config(cfg, model));
}

/// Unparameterized coarse solve from the filtered initial condition.
[[nodiscard]] inline Trajectory run_baseline(const RunConfig& cfg) {
    return MemorySolver(cfg.coarse_grid(), cfg.solver(), cfg.kernel()).solve(coarse_initial_condition(cfg));
}

[[nodiscard]] inline FbmPath sample_fbm_path(const RunConfig& cfg) {
    FbmConfig fc = cfg.fbm();
    fc.seed = derive_seed(cfg.seed, "fbm-sample");
    return wm_fbm_ensemble(uniform_times(cfg.t_end, cfg.solver().step_count()), fc, 1, true).front();
}

/// Records parameters, derived seeds and artifact paths of one output
/// directory. Artifact paths are relative to the directory.
class Manifest {
public:
    Manifest(std::filesystem::path dir, const RunConfig& cfg) : dir_(std::move(dir)), cfg_(cfg) {
        const auto path = dir_ / artifact::manifest;
        if (std::filesystem::exists(path)) {
            const Json old = read_json_file(path.string(), ErrorCode::io);
            if (old.contains("parameters") && old.at("parameters") == config_to_json(cfg_) &&
                old.contains("artifacts") && old.at("artifacts").is_object()) {
                artifacts_ = old.at("artifacts");
            }
        }
    }

    /// Throws unless `stage` has recorded artifacts produced under the
    /// current parameters.
    void require_stage(const std::string& stage) const {
        if (artifacts_.contains(stage)) return;
        const auto path = dir_ / artifact::manifest;
        if (std::filesystem::exists(path)) {
            fail(ErrorCode::missing_artifact, "no '" + stage + "' artifacts for the current parameters in '" +
                                                  dir_.string() + "'; run '" + stage + "' with this config first");
        }
        fail(ErrorCode::missing_artifact,
             "no manifest in '" + dir_.string() + "'; run '" + stage + "' first");
    }

    void record(const std::string& stage, Json files) { artifacts_[stage] = std::move(files); }

    [[nodiscard]] Json to_json() const {
        const auto& c = cfg_;
        return Json{{"tool_version", tool_version},
                    {"parameters", config_to_json(c)},
                    {"seeds",
                     {{"master", c.seed},
                      {"ensemble_ic", derive_seed(c.seed, "ensemble-ic")},
                      {"les_noise", derive_seed(c.seed, "les-noise")},
                      {"fbm_sample", derive_seed(c.seed, "fbm-sample")}}},
                    {"artifacts", artifacts_}};
    }

    void save() const { io::write_json(dir_ / artifact::manifest, to_json()); }

private:
    std::filesystem::path dir_;
    RunConfig cfg_;
    Json artifacts_ = Json::object();
};

namespace stage {

inline void run_benchmark(const RunConfig& cfg, const std::filesystem::path& out) {
    Manifest manifest(out, cfg);
    const auto ens = sles::run_benchmark(cfg, true);
    std::vector<Trajectory> fine;
    fine.reserve(ens.size());
    for (const auto& m : ens.members) fine.push_back(m.fine);
    io::write_series<TrajectoryTag>(out / artifact::fine, fine, cfg.trajectory_stride);
    io::write_series<TrajectoryTag>(out / artifact::filtered, ens.filtered());
    io::write_series<TrajectoryTag>(out / artifact::raw, ens.raw());
    io::write_series<SgsTag>(out / artifact::sgs, ens.sgs_fields());
    manifest.record("run-benchmark", Json{{"fine_trajectories", artifact::fine},
                                          {"filtered", artifact::filtered},
                                          {"raw_coarse", artifact::raw},
                                          {"sgs", artifact::sgs}});
    manifest.save();
}

inline SgsModel calibrate(const RunConfig& cfg, const std::filesystem::path& out) {
    Manifest manifest(out, cfg);
    manifest.require_stage("run-benchmark");
    const auto coarse = cfg.coarse_grid();
    const auto sgs = io::read_series<SgsTag>(out / artifact::sgs, coarse, cfg.dt, "run-benchmark");
    const auto filtered = io::read_series<TrajectoryTag>(out / artifact::filtered, coarse, cfg.dt, "run-benchmark");
    const auto model = sles::calibrate(sgs, filtered, cfg.hurst, cfg.delta, cfg.beta);
    io::write_drift(out / artifact::drift, model);
    io::write_sigma(out / artifact::sigma, model.sigma);
    manifest.record("calibrate", Json{{"drift", artifact::drift}, {"sigma", artifact::sigma}});
    manifest.save();
    return model;
}

inline void run_sles(const RunConfig& cfg, const std::filesystem::path& out) {
    Manifest manifest(out, cfg);
    manifest.require_stage("calibrate");
    const auto model = io::read_model(out / artifact::drift, out / artifact::sigma, cfg.coarse_grid());
    const auto les = run_les(cfg, model);
    io::write_series<TrajectoryTag>(out / artifact::les, les);
    manifest.record("run-sles", Json{{"trajectories", artifact::les}});
    manifest.save();
}

/// Writes the error fields and returns the summary document.
inline Json compare(const RunConfig& cfg, const std::filesystem::path& out, bool baseline) {
    Manifest manifest(out, cfg);
    manifest.require_stage("run-benchmark");
    manifest.require_stage("run-sles");
    const auto coarse = cfg.coarse_grid();
    const auto filtered = io::read_series<TrajectoryTag>(out / artifact::filtered, coarse, cfg.dt, "run-benchmark");
    const auto raw = io::read_series<TrajectoryTag>(out / artifact::raw, coarse, cfg.dt, "run-benchmark");
    const auto les = io::read_series<TrajectoryTag>(out / artifact::les, coarse, cfg.dt, "run-sles");

    const auto e_filtered = rmse(filtered, les);
    const auto e_raw = rmse(raw, les);
    io::write_errors(out / artifact::errors, e_filtered, e_raw);
    const auto s_filtered = summarize(e_filtered);
    const auto s_raw = summarize(e_raw);
    Json summary{{"l2_time_avg", s_filtered.l2_time_avg},
                 {"max_error", s_filtered.max_error},
                 {"raw_l2_time_avg", s_raw.l2_time_avg},
                 {"raw_max_error", s_raw.max_error}};
    Json files{{"errors", artifact::errors}, {"summary", artifact::summary}};
    if (baseline) {
        const auto base = run_baseline(cfg);
        const std::vector<Trajectory> single{base};
        io::write_series<TrajectoryTag>(out / artifact::baseline, single);
        const auto b_filtered = rmse(filtered, base);
        const auto b_raw = rmse(raw, base);
        io::write_errors(out / artifact::baseline_errors, b_filtered, b_raw);
        const auto sb = summarize(b_filtered);
        const auto sbr = summarize(b_raw);
        summary["baseline_l2_time_avg"] = sb.l2_time_avg;
        summary["baseline_max_error"] = sb.max_error;
        summary["baseline_raw_l2_time_avg"] = sbr.l2_time_avg;
        summary["baseline_raw_max_error"] = sbr.max_error;
        files["baseline_trajectory"] = artifact::baseline;
        files["baseline_errors"] = artifact::baseline_errors;
    }
    io::write_json(out / artifact::summary, summary);
    manifest.record("compare", files);
    manifest.save();
    return summary;
}

inline void fbm_sample(const RunConfig& cfg, const std::filesystem::path& out) {
    Manifest manifest(out, cfg);
    io::write_fbm(out / artifact::fbm, sample_fbm_path(cfg));
    manifest.record("fbm-sample", Json{{"path", artifact::fbm}});
    manifest.save();
}

}  // namespace stage

}  // namespace sles
