#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sles/calibration.hpp"
#include "sles/error.hpp"
#include "sles/fbm.hpp"
#include "sles/memory_solver.hpp"
#include "sles/random.hpp"
#include "sles/spectral.hpp"

namespace sles {

enum class NoiseMode { per_realization, shared };

[[nodiscard]] inline const char* to_string(NoiseMode m) noexcept {
    return m == NoiseMode::shared ? "shared-path" : "per-realization-path";
}

struct SlesConfig {
    SolverConfig solver;
    double beta = 2.0;
    double delta = 0.01;
    SgsModel model;
    FbmConfig fbm;
    NoiseMode noise_mode = NoiseMode::per_realization;
    std::size_t les_members = 64;
    std::uint64_t seed = 0;
    double blow_up_limit = 10.0;

    /// Model must come from a run with the same H, delta, beta and horizon.
    void check_provenance() const {
        auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
        if (!close(model.hurst, fbm.hurst) || !close(model.delta, delta) || !close(model.beta, beta) ||
            std::abs(model.horizon - solver.t_end) > 1e-9 * std::max(1.0, solver.t_end)) {
            fail(ErrorCode::provenance, "SGS model was calibrated under different parameters (H, delta, beta, T)");
        }
    }
};

/// One realization of U_t = U_xx + U - U^3 + memory + f(U) + sigma(x) dB^H/dt,
/// driven by the sampled path `noise_path` (values of B^H at every step).
/// sigma is zeroed at the boundary nodes.
[[nodiscard]] inline Trajectory solve_sles(const Field& ic, const SlesConfig& config,
                                           std::span<const double> noise_path) {
    config.check_provenance();
    const auto& grid = ic.grid();
    require(config.model.sigma.grid == grid, ErrorCode::invalid_argument, "sigma profile grid mismatch");
    const std::size_t steps = config.solver.step_count();
    require(noise_path.size() == steps + 1, ErrorCode::alignment, "noise path length does not match the step count");

    std::vector<double> sigma = config.model.sigma.sigma;
    sigma.front() = 0.0;
    sigma.back() = 0.0;
    const auto& f = config.model.drift;
    const bool has_drift = std::any_of(f.a.begin(), f.a.end(), [](double c) { return c != 0.0; });
    const bool has_noise = std::any_of(sigma.begin(), sigma.end(), [](double s) { return s != 0.0; });
    const double limit = config.blow_up_limit;
    auto check_bounded = [&](std::size_t k, std::span<const double> u) {
        for (double v : u) {
            if (!(std::abs(v) <= limit)) {
                fail(ErrorCode::blow_up, "LES state exceeded |U| = " + std::to_string(limit) + " at step " +
                                             std::to_string(k) + "; cubic drift is outside its fitted range");
            }
        }
    };

    const MemorySolver solver(grid, config.solver, MemoryKernel(config.beta));
    Trajectory traj = solver.integrate(ic, [&](std::size_t k, std::span<const double> u, std::span<double> drift,
                                               std::span<double> noise) {
        check_bounded(k, u);
        if (has_drift) {
            for (std::size_t j = 0; j < u.size(); ++j) drift[j] = f(u[j]);
        }
        if (has_noise) {
            const double db = noise_path[k + 1] - noise_path[k];
            for (std::size_t j = 0; j < u.size(); ++j) noise[j] = sigma[j] * db;
        }
    });
    check_bounded(traj.steps() - 1, traj.frame(traj.steps() - 1));
    return traj;
}

/// Noise paths for an LES ensemble: one self-normalized W-M path per
/// realization, or a single path reused by all of them.
[[nodiscard]] inline std::vector<FbmPath> les_noise_paths(const SlesConfig& config) {
    const auto times = uniform_times(config.solver.t_end, config.solver.step_count());
    FbmConfig fc = config.fbm;
    fc.seed = derive_seed(config.seed, "les-noise");
    const std::size_t count = config.noise_mode == NoiseMode::shared ? 1 : config.les_members;
    return wm_fbm_ensemble(times, fc, count, true);
}

[[nodiscard]] inline std::vector<Trajectory> run_les_ensemble(const Field& ic, const SlesConfig& config) {
    require(config.les_members >= 1, ErrorCode::invalid_argument, "LES ensemble needs at least one member");
    config.check_provenance();
    const auto paths = les_noise_paths(config);
    std::vector<Trajectory> out(config.les_members, Trajectory(ic.grid(), config.solver.dt));
    parallel_for(config.les_members, [&](std::size_t m) {
        const auto& path = paths[config.noise_mode == NoiseMode::shared ? 0 : m];
        out[m] = solve_sles(ic, config, path.values);
    });
    return out;
}

/// error(x, t) = sqrt(mean_m |truth_m - model_m|^2), members paired by index.
[[nodiscard]] inline ErrorField rmse(std::span<const Trajectory> truth, std::span<const Trajectory> model) {
    require(!truth.empty(), ErrorCode::invalid_argument, "RMSE of an empty ensemble");
    require(truth.size() == model.size(), ErrorCode::alignment, "ensembles differ in member count");
    const auto& ref = truth.front();
    for (std::size_t m = 0; m < truth.size(); ++m) {
        for (const Trajectory* t : {&truth[m], &model[m]}) {
            if (!(t->grid() == ref.grid()) || t->steps() != ref.steps() || t->dt() != ref.dt()) {
                fail(ErrorCode::alignment, "member " + std::to_string(m) + " is not aligned (step count or grid)");
            }
        }
    }
    ErrorField out(ref.grid(), ref.dt());
    out.resize(ref.steps());
    auto acc = out.data();
    for (std::size_t m = 0; m < truth.size(); ++m) {
        const auto a = truth[m].data();
        const auto b = model[m].data();
        for (std::size_t i = 0; i < acc.size(); ++i) {
            const double d = a[i] - b[i];
            acc[i] += d * d;
        }
    }
    const double count = static_cast<double>(truth.size());
    for (double& v : acc) v = std::sqrt(v / count);
    return out;
}

/// RMSE of every truth member against one deterministic reference run.
[[nodiscard]] inline ErrorField rmse(std::span<const Trajectory> truth, const Trajectory& reference) {
    const std::vector<Trajectory> repeated(truth.size(), reference);
    return rmse(truth, repeated);
}

struct ErrorSummary {
    double l2_time_avg = 0.0;
    double max_error = 0.0;
};

/// sqrt((1/T) int_0^T sum_j w_j error(x_j, t)^2 dt) with Clenshaw-Curtis
/// weights in x and the trapezoid in t, plus the maximum over (x, t).
[[nodiscard]] inline ErrorSummary summarize(const ErrorField& error) {
    ErrorSummary s;
    if (error.empty()) return s;
    const auto wx = quad_weights(error.grid());
    const std::size_t steps = error.steps();
    double integral = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        double spatial = 0.0;
        for (std::size_t j = 0; j < wx.size(); ++j) {
            const double e = error(k, j);
            spatial += wx[j] * e * e;
            s.max_error = std::max(s.max_error, e);
        }
        const double wt = (steps == 1) ? 1.0 : ((k == 0 || k + 1 == steps) ? 0.5 : 1.0);
        integral += wt * spatial;
    }
    const double span = steps == 1 ? 1.0 : static_cast<double>(steps - 1);
    s.l2_time_avg = std::sqrt(integral / span);
    return s;
}

}  // namespace sles
