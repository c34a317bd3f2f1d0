#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sles/error.hpp"
#include "sles/spectral.hpp"

namespace sles {

/// `unit_mass` rescales the Gaussian to integrate to one on the real line;
/// `literal` keeps the literal prefactor 1/(pi*delta^2).
enum class FilterNormalization { unit_mass, literal };

[[nodiscard]] inline const char* to_string(FilterNormalization n) noexcept {
    return n == FilterNormalization::literal ? "literal" : "unit_mass";
}

/// Gaussian convolution filter G(x) ~ exp(-x^2 / delta^2).
class GaussianFilter {
public:
    static constexpr double support_widths = 6.0;
    static constexpr int quadrature_intervals = 4096;

    explicit GaussianFilter(double delta, FilterNormalization normalization = FilterNormalization::unit_mass)
        : delta_(delta), normalization_(normalization) {
        if (!(delta > 0.0) || !std::isfinite(delta)) {
            fail(ErrorCode::invalid_argument, "filter width delta must be positive");
        }
    }

    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] FilterNormalization normalization() const noexcept { return normalization_; }

    /// Kernel value before any discrete renormalization.
    [[nodiscard]] double kernel(double x) const noexcept {
        const double shape = std::exp(-(x * x) / (delta_ * delta_));
        if (normalization_ == FilterNormalization::literal) {
            return shape / (std::numbers::pi * delta_ * delta_);
        }
        return shape / (delta_ * std::sqrt(std::numbers::pi));
    }

    /// Linear operator mapping nodal values on `source` to the filtered field
    /// evaluated at `targets`. Outside [-1, 1] the field is extended by its
    /// boundary values. Each row is a trapezoid rule on a uniform window of
    /// +-6 delta centred at the target point.
    [[nodiscard]] Eigen::MatrixXd operator_matrix(const ChebyshevGrid& source,
                                                  std::span<const double> targets) const {
        const auto cols = static_cast<Eigen::Index>(source.size());
        const std::size_t last = source.size() - 1;
        const auto bary = barycentric_weights(source);
        const double half_width = support_widths * delta_;
        const double h = 2.0 * half_width / quadrature_intervals;

        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(targets.size()), cols);
        std::vector<double> row(source.size());
        for (std::size_t i = 0; i < targets.size(); ++i) {
            const double x = targets[i];
            const auto r = static_cast<Eigen::Index>(i);
            double mass = 0.0;
            for (int q = 0; q <= quadrature_intervals; ++q) {
                const double offset = -half_width + h * q;
                const double y = x + offset;
                double w = h * kernel(offset);
                if (q == 0 || q == quadrature_intervals) w *= 0.5;
                mass += w;
                if (y >= 1.0) {
                    m(r, 0) += w;
                } else if (y <= -1.0) {
                    m(r, static_cast<Eigen::Index>(last)) += w;
                } else {
                    lagrange_row(source, bary, y, row);
                    for (std::size_t j = 0; j < row.size(); ++j) m(r, static_cast<Eigen::Index>(j)) += w * row[j];
                }
            }
            if (normalization_ == FilterNormalization::unit_mass) m.row(r) /= mass;
        }
        return m;
    }

private:
    double delta_;
    FilterNormalization normalization_;
};

[[nodiscard]] inline Field filter_field(const Field& field, const GaussianFilter& filter) {
    const auto op = filter.operator_matrix(field.grid(), field.grid().nodes());
    return Field(field.grid(), apply_operator(op, field.values()));
}

[[nodiscard]] inline Field filter_field(const Field& field, double delta) {
    return filter_field(field, GaussianFilter(delta));
}

/// Filtered field evaluated directly at the nodes of another grid.
[[nodiscard]] inline Field filter_to(const Field& field, const GaussianFilter& filter, const ChebyshevGrid& target) {
    const auto op = filter.operator_matrix(field.grid(), target.nodes());
    return Field(target, apply_operator(op, field.values()));
}

/// Every frame filtered and evaluated on `target`.
[[nodiscard]] inline Trajectory filter_trajectory(const Trajectory& traj, const GaussianFilter& filter,
                                                  const ChebyshevGrid& target) {
    const Eigen::MatrixXd op = filter.operator_matrix(traj.grid(), target.nodes());
    Trajectory out(target, traj.dt());
    out.reserve(traj.steps());
    for (std::size_t k = 0; k < traj.steps(); ++k) out.push_back(apply_operator(op, traj.frame(k)));
    return out;
}

/// Every frame interpolated onto `target` without filtering.
[[nodiscard]] inline Trajectory restrict_trajectory(const Trajectory& traj, const ChebyshevGrid& target) {
    const Eigen::MatrixXd op = interpolation_matrix(traj.grid(), target.nodes());
    Trajectory out(target, traj.dt());
    out.reserve(traj.steps());
    for (std::size_t k = 0; k < traj.steps(); ++k) out.push_back(apply_operator(op, traj.frame(k)));
    return out;
}

/// Subgrid-scale residual R = (ubar)^3 - filter(u^3) per frame, with both
/// convolutions evaluated at the coarse nodes.
[[nodiscard]] inline SgsField compute_sgs(const Trajectory& fine, const GaussianFilter& filter,
                                          const ChebyshevGrid& coarse) {
    const Eigen::MatrixXd op = filter.operator_matrix(fine.grid(), coarse.nodes());
    SgsField out(coarse, fine.dt());
    out.reserve(fine.steps());
    std::vector<double> cubed(fine.nodes());
    std::vector<double> residual(coarse.size());
    for (std::size_t k = 0; k < fine.steps(); ++k) {
        const auto u = fine.frame(k);
        for (std::size_t j = 0; j < u.size(); ++j) cubed[j] = u[j] * u[j] * u[j];
        const auto ubar = apply_operator(op, u);
        const auto filtered_cube = apply_operator(op, cubed);
        for (std::size_t j = 0; j < residual.size(); ++j) {
            residual[j] = ubar[j] * ubar[j] * ubar[j] - filtered_cube[j];
        }
        out.push_back(residual);
    }
    return out;
}

[[nodiscard]] inline SgsField compute_sgs(const Trajectory& fine, double delta, const ChebyshevGrid& coarse) {
    return compute_sgs(fine, GaussianFilter(delta), coarse);
}

struct CorrelationProfile {
    double x = 0.0;
    std::vector<double> lags;
    std::vector<double> corr;
};

/// Ensemble-averaged time correlation of the SGS term at one node:
/// for each lag s, the mean over t in [0, T - s] of
/// cov(R(t), R(t+s)) / (STD(R(t)) STD(R(t+s))), statistics across members
/// with the (M - 1) estimator, time mean by trapezoid.
[[nodiscard]] inline CorrelationProfile time_correlation(std::span<const SgsField> ensemble,
                                                         std::size_t x_index, std::size_t max_lag_steps) {
    require(ensemble.size() >= 2, ErrorCode::invalid_argument, "time correlation needs at least 2 members");
    const auto& first = ensemble.front();
    for (const auto& m : ensemble) {
        require(m.grid() == first.grid() && m.steps() == first.steps() && m.dt() == first.dt(),
                ErrorCode::alignment, "ensemble members are not aligned");
    }
    require(x_index < first.nodes(), ErrorCode::invalid_argument, "probe node out of range");
    require(max_lag_steps < first.steps(), ErrorCode::invalid_argument, "lag exceeds the record length");

    const std::size_t members = ensemble.size();
    const std::size_t steps = first.steps();
    const double dt = first.dt();
    const double denom = static_cast<double>(members - 1);

    std::vector<double> mean(steps, 0.0);
    std::vector<double> sd(steps, 0.0);
    for (std::size_t k = 0; k < steps; ++k) {
        double s = 0.0;
        for (const auto& m : ensemble) s += m(k, x_index);
        mean[k] = s / static_cast<double>(members);
    }
    for (std::size_t k = 0; k < steps; ++k) {
        double ss = 0.0;
        for (const auto& m : ensemble) {
            const double d = m(k, x_index) - mean[k];
            ss += d * d;
        }
        sd[k] = std::sqrt(ss / denom);
    }

    CorrelationProfile out;
    out.x = first.grid().node(x_index);
    for (std::size_t lag = 0; lag <= max_lag_steps; ++lag) {
        const std::size_t last = steps - 1 - lag;
        double integral = 0.0;
        for (std::size_t k = 0; k <= last; ++k) {
            if (sd[k] == 0.0 || sd[k + lag] == 0.0) {
                fail(ErrorCode::degenerate, "zero ensemble STD of the SGS term at time index " +
                                                std::to_string(sd[k] == 0.0 ? k : k + lag));
            }
            double cov = 0.0;
            for (const auto& m : ensemble) {
                cov += (m(k, x_index) - mean[k]) * (m(k + lag, x_index) - mean[k + lag]);
            }
            const double c = (lag == 0) ? 1.0 : (cov / denom) / (sd[k] * sd[k + lag]);
            const double w = (last == 0) ? 1.0 : ((k == 0 || k == last) ? 0.5 : 1.0);
            integral += w * c;
        }
        const double window = static_cast<double>(last);
        out.lags.push_back(static_cast<double>(lag) * dt);
        out.corr.push_back(last == 0 ? integral : integral / window);
    }
    return out;
}

}  // namespace sles
