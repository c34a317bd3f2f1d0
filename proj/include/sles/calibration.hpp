#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sles/error.hpp"
#include "sles/filtering.hpp"
#include "sles/memory_solver.hpp"
#include "sles/random.hpp"
#include "sles/spectral.hpp"

namespace sles {

/// Shape of the initial-condition perturbation. All shapes vanish at x = +-1.
///   sine:        epsilon * xi * sin(pi x)
///   half_cosine: epsilon * xi * cos(pi x / 2)
///   mixed:       epsilon * (xi * sin(pi x) + eta * cos(pi x / 2))
/// with xi, eta ~ U(-1, 1) per member. `sine` keeps odd data odd, so it never
/// excites the centre node; `mixed` is the default.
enum class PerturbationMode { sine, half_cosine, mixed };

[[nodiscard]] inline const char* to_string(PerturbationMode m) noexcept {
    switch (m) {
        case PerturbationMode::sine: return "sine";
        case PerturbationMode::half_cosine: return "half_cosine";
        case PerturbationMode::mixed: return "mixed";
    }
    return "mixed";
}

struct PerturbationSpec {
    double epsilon = 0.01;
    std::uint64_t seed = 0;
    PerturbationMode mode = PerturbationMode::mixed;
};

[[nodiscard]] inline Field perturbed_ic(const Field& base, const PerturbationSpec& spec, std::size_t member) {
    require(spec.epsilon >= 0.0, ErrorCode::invalid_argument, "perturbation amplitude must be nonnegative");
    auto rng = make_rng(spec.seed, "ic-perturbation", member);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double xi = unit(rng);
    const double eta = unit(rng);
    const double a = spec.mode == PerturbationMode::half_cosine ? 0.0 : xi;
    const double b = spec.mode == PerturbationMode::sine ? 0.0 : (spec.mode == PerturbationMode::mixed ? eta : xi);
    Field out = base;
    const auto& grid = base.grid();
    for (std::size_t j = 1; j + 1 < grid.size(); ++j) {
        const double x = grid.node(j);
        out[j] += spec.epsilon * (a * std::sin(std::numbers::pi * x) + b * std::cos(0.5 * std::numbers::pi * x));
    }
    return out;
}

struct EnsembleMember {
    Trajectory fine;
    SgsField sgs;
    Trajectory filtered;  // ubar on the coarse grid
    Trajectory raw;       // u interpolated to the coarse grid
};

struct Ensemble {
    std::vector<EnsembleMember> members;
    SolverConfig solver;
    double beta = 2.0;
    double delta = 0.01;
    FilterNormalization normalization = FilterNormalization::unit_mass;

    [[nodiscard]] std::size_t size() const noexcept { return members.size(); }
    [[nodiscard]] std::vector<SgsField> sgs_fields() const {
        std::vector<SgsField> out;
        out.reserve(members.size());
        for (const auto& m : members) out.push_back(m.sgs);
        return out;
    }
    [[nodiscard]] std::vector<Trajectory> filtered() const {
        std::vector<Trajectory> out;
        out.reserve(members.size());
        for (const auto& m : members) out.push_back(m.filtered);
        return out;
    }
    [[nodiscard]] std::vector<Trajectory> raw() const {
        std::vector<Trajectory> out;
        out.reserve(members.size());
        for (const auto& m : members) out.push_back(m.raw);
        return out;
    }
};

/// M fine solves from perturbed initial conditions, each reduced to its SGS
/// field and its filtered and raw restrictions on the coarse grid.
[[nodiscard]] inline Ensemble generate_ensemble(const Field& base_ic, const PerturbationSpec& spec,
                                                std::size_t count, const SolverConfig& config,
                                                const MemoryKernel& kernel, const GaussianFilter& filter,
                                                const ChebyshevGrid& coarse, bool keep_fine = true) {
    require(count >= 2, ErrorCode::invalid_argument, "ensemble needs at least 2 members");
    const MemorySolver solver(base_ic.grid(), config, kernel);

    Ensemble ens;
    ens.solver = config;
    ens.beta = kernel.beta();
    ens.delta = filter.delta();
    ens.normalization = filter.normalization();
    ens.members.resize(count, EnsembleMember{Trajectory(base_ic.grid(), config.dt), SgsField(coarse, config.dt),
                                             Trajectory(coarse, config.dt), Trajectory(coarse, config.dt)});
    parallel_for(count, [&](std::size_t m) {
        const Field ic = perturbed_ic(base_ic, spec, m);
        const std::size_t last = ic.size() - 1;
        if (ic[0] != base_ic[0] || ic[last] != base_ic[last]) {
            fail(ErrorCode::precondition, "perturbed initial condition violates the boundary values");
        }
        auto& member = ens.members[m];
        member.fine = solver.solve(ic);
        member.sgs = compute_sgs(member.fine, filter, coarse);
        member.filtered = filter_trajectory(member.fine, filter, coarse);
        member.raw = restrict_trajectory(member.fine, coarse);
        if (!keep_fine) member.fine = Trajectory(base_ic.grid(), config.dt);
    });
    return ens;
}

/// Pointwise ensemble mean in fixed member order.
template <typename Tag>
[[nodiscard]] NodalSeries<Tag> ensemble_mean(std::span<const NodalSeries<Tag>> members) {
    require(!members.empty(), ErrorCode::invalid_argument, "mean of an empty ensemble");
    const auto& first = members.front();
    for (const auto& m : members) {
        require(m.grid() == first.grid() && m.steps() == first.steps() && m.dt() == first.dt(),
                ErrorCode::alignment, "ensemble members are not aligned");
    }
    NodalSeries<Tag> out(first.grid(), first.dt());
    out.resize(first.steps());
    auto acc = out.data();
    for (const auto& m : members) {
        const auto d = m.data();
        for (std::size_t i = 0; i < d.size(); ++i) acc[i] += d[i];
    }
    const double count = static_cast<double>(members.size());
    for (double& v : acc) v /= count;
    return out;
}

/// E R(x, t) over the ensemble.
[[nodiscard]] inline SgsField mean_sgs(std::span<const SgsField> members) { return ensemble_mean<SgsTag>(members); }

[[nodiscard]] inline SgsField mean_sgs(const Ensemble& ensemble) {
    const auto fields = ensemble.sgs_fields();
    return mean_sgs(fields);
}

/// Cubic drift f(u) = a0 + a1 u + a2 u^2 + a3 u^3.
struct DriftFit {
    std::array<double, 4> a{};
    double condition_number = 1.0;

    [[nodiscard]] double operator()(double u) const noexcept { return a[0] + u * (a[1] + u * (a[2] + u * a[3])); }
};

namespace detail {

/// Clenshaw-Curtis in space times trapezoid in time.
[[nodiscard]] inline std::vector<double> space_time_weights(const ChebyshevGrid& grid, double dt, std::size_t steps) {
    const auto wx = quad_weights(grid);
    std::vector<double> w(steps * wx.size());
    for (std::size_t k = 0; k < steps; ++k) {
        const double wt = (k == 0 || k + 1 == steps) ? 0.5 * dt : dt;
        for (std::size_t j = 0; j < wx.size(); ++j) w[k * wx.size() + j] = wt * wx[j];
    }
    return w;
}

}  // namespace detail

/// Weighted residual int int [f(ubar) - E R]^2 dx dt for given coefficients.
[[nodiscard]] inline double drift_residual(const DriftFit& fit, const SgsField& mean_r, const Trajectory& ubar) {
    const auto w = detail::space_time_weights(mean_r.grid(), mean_r.dt(), mean_r.steps());
    const auto r = mean_r.data();
    const auto u = ubar.data();
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double e = fit(u[i]) - r[i];
        s += w[i] * e * e;
    }
    return s;
}

/// Least-squares cubic fit of E R against ubar, weighted by the space-time
/// quadrature. Solved by QR on the row-scaled design matrix; the reported
/// condition number is that of the weighted Gram matrix.
[[nodiscard]] inline DriftFit fit_drift(const SgsField& mean_r, const Trajectory& ubar) {
    require(mean_r.grid() == ubar.grid() && mean_r.steps() == ubar.steps() && mean_r.dt() == ubar.dt(),
            ErrorCode::alignment, "SGS mean and filtered solution are not aligned");
    require(!mean_r.empty(), ErrorCode::invalid_argument, "empty SGS record");
    const auto w = detail::space_time_weights(mean_r.grid(), mean_r.dt(), mean_r.steps());
    const auto rows = static_cast<Eigen::Index>(w.size());
    Eigen::MatrixXd design(rows, 4);
    Eigen::VectorXd target(rows);
    const auto r = mean_r.data();
    const auto u = ubar.data();
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const double sw = std::sqrt(w[idx]);
        const double ui = u[idx];
        design(i, 0) = sw;
        design(i, 1) = sw * ui;
        design(i, 2) = sw * ui * ui;
        design(i, 3) = sw * ui * ui * ui;
        target(i) = sw * r[idx];
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
    const auto& sv = svd.singularValues();
    const double ratio = sv(3) > 0.0 ? sv(0) / sv(3) : std::numeric_limits<double>::infinity();
    const double condition = ratio * ratio;
    if (!(condition < 1e12)) {
        fail(ErrorCode::degenerate, "drift basis {1, u, u^2, u^3} is rank deficient on the data (Gram condition " +
                                        std::to_string(condition) + ")");
    }
    const Eigen::VectorXd a = design.colPivHouseholderQr().solve(target);
    DriftFit fit;
    for (int i = 0; i < 4; ++i) fit.a[static_cast<std::size_t>(i)] = a(i);
    fit.condition_number = condition;
    return fit;
}

struct SigmaProfile {
    ChebyshevGrid grid{2};
    std::vector<double> sigma;
};

/// sigma(x) = T^-H sqrt(E (int_0^T [R - E R] dt)^2), expectation over members
/// with the (M - 1) estimator, time integral by trapezoid.
[[nodiscard]] inline SigmaProfile estimate_sigma(std::span<const SgsField> members, const SgsField& mean_r,
                                                 double horizon, double hurst) {
    if (members.size() < 2) fail(ErrorCode::invalid_argument, "insufficient-ensemble: sigma needs at least 2 members");
    for (const auto& m : members) {
        require(m.grid() == mean_r.grid() && m.steps() == mean_r.steps() && m.dt() == mean_r.dt(),
                ErrorCode::alignment, "ensemble member not aligned with the SGS mean");
    }
    require(std::abs(mean_r.horizon() - horizon) <= 1e-9 * std::max(1.0, horizon), ErrorCode::invalid_argument,
            "calibration window must equal the ensemble horizon");
    require(hurst > 0.0 && hurst < 1.0, ErrorCode::invalid_argument, "Hurst parameter must lie in (0, 1)");

    const std::size_t nodes = mean_r.nodes();
    const std::size_t steps = mean_r.steps();
    const double dt = mean_r.dt();
    std::vector<double> mean_square(nodes, 0.0);
    std::vector<double> integral(nodes);
    for (const auto& m : members) {
        std::fill(integral.begin(), integral.end(), 0.0);
        for (std::size_t k = 0; k < steps; ++k) {
            const double wt = (k == 0 || k + 1 == steps) ? 0.5 * dt : dt;
            for (std::size_t j = 0; j < nodes; ++j) integral[j] += wt * (m(k, j) - mean_r(k, j));
        }
        for (std::size_t j = 0; j < nodes; ++j) mean_square[j] += integral[j] * integral[j];
    }
    SigmaProfile out{mean_r.grid(), std::vector<double>(nodes)};
    const double scale = std::pow(horizon, hurst);
    for (std::size_t j = 0; j < nodes; ++j) {
        out.sigma[j] = std::sqrt(mean_square[j] / static_cast<double>(members.size() - 1)) / scale;
    }
    return out;
}

/// Calibrated closure R ~ f(ubar) + sigma(x) dB^H/dt with the parameters it
/// was derived under.
struct SgsModel {
    DriftFit drift;
    SigmaProfile sigma;
    double hurst = 0.75;
    double horizon = 1.0;
    double delta = 0.01;
    double beta = 2.0;

    [[nodiscard]] static SgsModel zero(const ChebyshevGrid& grid, double hurst, double horizon, double delta,
                                       double beta) {
        return SgsModel{DriftFit{}, SigmaProfile{grid, std::vector<double>(grid.size(), 0.0)}, hurst, horizon,
                        delta, beta};
    }
};

/// Mean drift and noise intensity from per-member SGS fields and filtered
/// trajectories.
[[nodiscard]] inline SgsModel calibrate(std::span<const SgsField> sgs, std::span<const Trajectory> filtered,
                                        double hurst, double delta, double beta) {
    require(sgs.size() >= 2, ErrorCode::invalid_argument, "insufficient-ensemble: calibration needs M >= 2");
    require(sgs.size() == filtered.size(), ErrorCode::alignment, "SGS and filtered ensembles differ in size");
    const SgsField mean_r = mean_sgs(sgs);
    const Trajectory ubar = ensemble_mean<TrajectoryTag>(filtered);
    SgsModel model{fit_drift(mean_r, ubar), estimate_sigma(sgs, mean_r, mean_r.horizon(), hurst), hurst,
                   mean_r.horizon(), delta, beta};
    return model;
}

[[nodiscard]] inline SgsModel calibrate(const Ensemble& ensemble, double hurst) {
    require(ensemble.size() >= 2, ErrorCode::invalid_argument, "insufficient-ensemble: calibration needs M >= 2");
    const auto sgs = ensemble.sgs_fields();
    const auto filtered = ensemble.filtered();
    return calibrate(sgs, filtered, hurst, ensemble.delta, ensemble.beta);
}

}  // namespace sles
