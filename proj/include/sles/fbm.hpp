#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sles/error.hpp"
#include "sles/random.hpp"

namespace sles {

inline void check_hurst(double hurst) {
    if (!(hurst > 0.0 && hurst < 1.0)) {
        fail(ErrorCode::invalid_argument, "Hurst parameter must lie in (0, 1), got " + std::to_string(hurst));
    }
}

/// E[B(t) B(s)] = (|t|^2H + |s|^2H - |t - s|^2H) / 2
[[nodiscard]] inline double fbm_covariance(double hurst, double s, double t) {
    check_hurst(hurst);
    const double h2 = 2.0 * hurst;
    return 0.5 * (std::pow(std::abs(t), h2) + std::pow(std::abs(s), h2) - std::pow(std::abs(t - s), h2));
}

struct FbmPath {
    std::vector<double> times;
    std::vector<double> values;
};

/// steps + 1 equidistant times 0, T/steps, ..., T.
[[nodiscard]] inline std::vector<double> uniform_times(double t_end, std::size_t steps) {
    require(steps >= 1 && t_end > 0.0, ErrorCode::invalid_argument, "time grid needs t_end > 0 and >= 1 step");
    std::vector<double> t(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) t[k] = t_end * static_cast<double>(k) / static_cast<double>(steps);
    return t;
}

/// Exact fBM sampler: factor the covariance of the nonzero times once, then
/// draw L z for standard normal z. A time at 0 is pinned to 0.
class CholeskyFbmSampler {
public:
    CholeskyFbmSampler(std::vector<double> times, double hurst) : times_(std::move(times)), hurst_(hurst) {
        check_hurst(hurst);
        require(!times_.empty(), ErrorCode::invalid_argument, "empty time grid");
        for (std::size_t i = 1; i < times_.size(); ++i) {
            require(times_[i] > times_[i - 1], ErrorCode::invalid_argument, "times must be strictly increasing");
        }
        require(times_.front() >= 0.0, ErrorCode::invalid_argument, "times must be nonnegative");
        offset_ = times_.front() == 0.0 ? 1 : 0;
        const auto m = static_cast<Eigen::Index>(times_.size() - offset_);
        if (m == 0) return;
        Eigen::MatrixXd cov(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double c = fbm_covariance(hurst_, times_[static_cast<std::size_t>(i) + offset_],
                                                times_[static_cast<std::size_t>(j) + offset_]);
                cov(i, j) = c;
                cov(j, i) = c;
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            fail(ErrorCode::factorization,
                 "fBM covariance is not numerically positive definite; add diagonal jitter or use fewer points");
        }
        factor_ = llt.matrixL();
    }

    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }

    [[nodiscard]] FbmPath sample(Rng& rng) const {
        FbmPath path{times_, std::vector<double>(times_.size(), 0.0)};
        const Eigen::Index m = factor_.rows();
        if (m == 0) return path;
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd z(m);
        for (Eigen::Index i = 0; i < m; ++i) z(i) = normal(rng);
        const Eigen::VectorXd x = factor_.triangularView<Eigen::Lower>() * z;
        for (Eigen::Index i = 0; i < m; ++i) path.values[static_cast<std::size_t>(i) + offset_] = x(i);
        return path;
    }

private:
    std::vector<double> times_;
    double hurst_;
    std::size_t offset_ = 0;
    Eigen::MatrixXd factor_;
};

[[nodiscard]] inline FbmPath cholesky_fbm(std::vector<double> times, double hurst, std::uint64_t seed) {
    CholeskyFbmSampler sampler(std::move(times), hurst);
    auto rng = make_rng(seed, "cholesky-fbm");
    return sampler.sample(rng);
}

struct FbmConfig {
    double hurst = 0.75;
    double r = 0.9;
    int j_min = -48;
    int j_max = 48;
    std::uint64_t seed = 0;
    /// Subtract w(0) so every path starts at zero.
    bool zero_adjust = true;

    void validate() const {
        check_hurst(hurst);
        require(r > 0.0 && r < 1.0, ErrorCode::invalid_argument, "lacunary base r must lie in (0, 1)");
        require(j_min <= 0 && 0 <= j_max, ErrorCode::invalid_argument, "series bounds need j_min <= 0 <= j_max");
    }
};

/// Evaluates sum_j C_j r^{jH} sin(2 pi r^{-j} t + d_j) for j = j_min .. j_min + len - 1.
[[nodiscard]] inline std::vector<double> wm_series(std::span<const double> times, double hurst, double r, int j_min,
                                                   std::span<const double> amplitudes,
                                                   std::span<const double> phases) {
    require(amplitudes.size() == phases.size(), ErrorCode::invalid_argument, "coefficient/phase length mismatch");
    std::vector<double> w(times.size(), 0.0);
    for (std::size_t idx = 0; idx < amplitudes.size(); ++idx) {
        const double j = static_cast<double>(j_min + static_cast<int>(idx));
        const double scale = amplitudes[idx] * std::pow(r, j * hurst);
        const double freq = 2.0 * std::numbers::pi * std::pow(r, -j);
        for (std::size_t i = 0; i < times.size(); ++i) w[i] += scale * std::sin(freq * times[i] + phases[idx]);
    }
    return w;
}

/// Randomized Weierstrass-Mandelbrot approximation of a fBM path. Draws
/// C_j ~ N(0, 1) and d_j ~ U[0, 2 pi) from the config seed.
[[nodiscard]] inline FbmPath wm_fbm(std::vector<double> times, const FbmConfig& config) {
    config.validate();
    const auto terms = static_cast<std::size_t>(config.j_max - config.j_min + 1);
    auto rng = make_rng(config.seed, "wm-fbm");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::vector<double> amplitudes(terms);
    std::vector<double> phases(terms);
    for (std::size_t i = 0; i < terms; ++i) {
        amplitudes[i] = normal(rng);
        phases[i] = phase(rng);
    }
    FbmPath path{std::move(times), {}};
    path.values = wm_series(path.times, config.hurst, config.r, config.j_min, amplitudes, phases);
    if (config.zero_adjust && !path.values.empty()) {
        const double origin = 0.0;
        const double w0 = wm_series(std::span<const double>(&origin, 1), config.hurst, config.r, config.j_min,
                                    amplitudes, phases)[0];
        for (double& v : path.values) v -= w0;
    }
    return path;
}

/// `count` independent W-M paths (path i seeded from (config.seed, i)). With
/// `self_normalize`, all paths share one scale factor chosen so the ensemble
/// mean of B(T)^2 equals T^{2H}.
[[nodiscard]] inline std::vector<FbmPath> wm_fbm_ensemble(const std::vector<double>& times, const FbmConfig& config,
                                                          std::size_t count, bool self_normalize = true) {
    std::vector<FbmPath> paths(count);
    parallel_for(count, [&](std::size_t i) {
        FbmConfig c = config;
        c.seed = derive_seed(config.seed, "wm-path", i);
        paths[i] = wm_fbm(times, c);
    });
    if (self_normalize && count > 0 && !times.empty()) {
        const double horizon = times.back();
        double ms = 0.0;
        for (const auto& p : paths) ms += p.values.back() * p.values.back();
        ms /= static_cast<double>(count);
        if (ms > 0.0 && horizon > 0.0) {
            const double scale = std::pow(horizon, config.hurst) / std::sqrt(ms);
            for (auto& p : paths) {
                for (double& v : p.values) v *= scale;
            }
        }
    }
    return paths;
}

[[nodiscard]] inline std::vector<double> increments(const FbmPath& path) {
    require(path.values.size() >= 2, ErrorCode::invalid_argument, "increments need a path of length >= 2");
    std::vector<double> d(path.values.size() - 1);
    for (std::size_t i = 0; i + 1 < path.values.size(); ++i) d[i] = path.values[i + 1] - path.values[i];
    return d;
}

/// Hurst estimate from variance scaling: regress log E|B(t + l dt) - B(t)|^2
/// on log(l dt) over the given lags; the slope is 2H. Expectations pool all
/// paths and all start times.
[[nodiscard]] inline double estimate_hurst(std::span<const FbmPath> paths, double dt,
                                           std::span<const std::size_t> lags) {
    require(!paths.empty() && lags.size() >= 2, ErrorCode::invalid_argument,
            "Hurst estimate needs paths and at least two lags");
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t lag : lags) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& p : paths) {
            for (std::size_t i = 0; i + lag < p.values.size(); ++i) {
                const double d = p.values[i + lag] - p.values[i];
                sum += d * d;
                ++count;
            }
        }
        require(count > 0 && sum > 0.0, ErrorCode::degenerate, "no increments at lag " + std::to_string(lag));
        lx.push_back(std::log(static_cast<double>(lag) * dt));
        ly.push_back(std::log(sum / static_cast<double>(count)));
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return 0.5 * sxy / sxx;
}

}  // namespace sles
