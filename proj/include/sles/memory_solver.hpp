#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sles/error.hpp"
#include "sles/spectral.hpp"

namespace sles {

/// Polynomially decaying memory kernel k(tau) = 1 / (1 + tau^beta).
class MemoryKernel {
public:
    explicit MemoryKernel(double beta) : beta_(beta) {
        require(beta > 0.0 && std::isfinite(beta), ErrorCode::invalid_argument,
                "memory kernel exponent beta must be positive");
    }

    [[nodiscard]] double beta() const noexcept { return beta_; }

    [[nodiscard]] double operator()(double tau) const {
        if (!(tau >= 0.0)) fail(ErrorCode::domain, "memory kernel evaluated at negative lag");
        return 1.0 / (1.0 + std::pow(tau, beta_));
    }

private:
    double beta_;
};

[[nodiscard]] inline double kernel_eval(const MemoryKernel& kernel, double tau) { return kernel(tau); }

struct SolverConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    double bc_left = -1.0;   // u(-1, t) = a
    double bc_right = 1.0;   // u(+1, t) = b

    void validate() const {
        require(dt > 0.0 && std::isfinite(dt), ErrorCode::invalid_argument, "dt must be positive");
        require(t_end >= dt, ErrorCode::invalid_argument, "t_end must be at least one step");
        const double ratio = t_end / dt;
        require(std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio, ErrorCode::invalid_argument,
                "t_end must be an integer multiple of dt");
    }

    /// Number of steps K; a trajectory holds K + 1 frames.
    [[nodiscard]] std::size_t step_count() const {
        return static_cast<std::size_t>(std::llround(t_end / dt));
    }
};

/// Past states u(., t_0 .. t_k); grows one frame per step.
using HistoryBuffer = Trajectory;

namespace detail {

/// Trapezoid over the stored history with tabulated kernel values k(j*dt).
inline void accumulate_memory(const HistoryBuffer& history, std::span<const double> kernel_table,
                              const MemoryKernel& kernel, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t frames = history.steps();
    if (frames < 2) return;
    const std::size_t k = frames - 1;
    const double dt = history.dt();
    const std::size_t nodes = history.nodes();
    for (std::size_t i = 0; i <= k; ++i) {
        const std::size_t lag = k - i;
        double w = lag < kernel_table.size() ? kernel_table[lag] : kernel(static_cast<double>(lag) * dt);
        if (i == 0 || i == k) w *= 0.5;
        const auto u = history.frame(i);
        for (std::size_t j = 0; j < nodes; ++j) out[j] += w * u[j];
    }
    for (double& v : out) v *= dt;
}

}  // namespace detail

/// Composite trapezoid approximation of int_0^t k(t - s) u(x, s) ds, nodewise,
/// from a history sampled at spacing dt with its last frame at time t.
[[nodiscard]] inline Field memory_integral(const HistoryBuffer& history, const MemoryKernel& kernel,
                                           double t, double dt) {
    require(t >= 0.0, ErrorCode::domain, "memory integral at negative time");
    if (history.empty()) {
        fail(ErrorCode::inconsistent_history, "empty history for memory integral");
    }
    require(std::abs(history.dt() - dt) <= 1e-12 * dt, ErrorCode::inconsistent_history,
            "history spacing differs from dt");
    require(std::abs(history.horizon() - t) <= 1e-9 * std::max(1.0, t), ErrorCode::inconsistent_history,
            "history does not end at t = " + std::to_string(t));
    Field out(history.grid());
    detail::accumulate_memory(history, {}, kernel, out.values());
    return out;
}

/// Semi-implicit integrator for
///   u_t = u_xx + u - u^3 + int_0^t k(t - s) u(s) ds + drift + noise
/// with Dirichlet data u(+1) = b, u(-1) = a. Diffusion is implicit; reaction,
/// memory, drift and the additive noise increment are explicit.
class MemorySolver {
public:
    MemorySolver(ChebyshevGrid grid, SolverConfig config, MemoryKernel kernel)
        : grid_(std::move(grid)), config_(config), kernel_(kernel) {
        config_.validate();
        const auto n = static_cast<Eigen::Index>(grid_.order());
        d2_ = diff_matrix(grid_, 2).entries;
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n - 1, n - 1) - config_.dt * d2_.block(1, 1, n - 1, n - 1);
        lu_.compute(a);
        // Pinned-row construction cannot be singular for dt > 0.
        if (!(lu_.rcond() > 1e-14)) {
            fail(ErrorCode::factorization, "implicit diffusion operator is singular");
        }
        boundary_lift_.resize(n - 1);
        for (Eigen::Index i = 1; i < n; ++i) {
            boundary_lift_(i - 1) = config_.dt * (d2_(i, 0) * config_.bc_right + d2_(i, n) * config_.bc_left);
        }
        const std::size_t steps = config_.step_count();
        kernel_table_.resize(steps + 1);
        for (std::size_t j = 0; j <= steps; ++j) kernel_table_[j] = kernel_(static_cast<double>(j) * config_.dt);
    }

    [[nodiscard]] const ChebyshevGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const SolverConfig& config() const noexcept { return config_; }
    [[nodiscard]] const MemoryKernel& kernel() const noexcept { return kernel_; }

    /// Advance from the last frame of `history` by one step.
    [[nodiscard]] Field step(const HistoryBuffer& history, std::span<const double> extra_drift,
                             std::span<const double> noise_increment) const {
        Field out(grid_);
        step_into(history, extra_drift, noise_increment, out.values());
        return out;
    }

    [[nodiscard]] Trajectory solve(const Field& ic) const {
        return integrate(ic, [](std::size_t, std::span<const double>, std::span<double>, std::span<double>) {});
    }

    /// Full run where `forcing(k, u_k, drift, noise)` fills the drift field
    /// and noise increment for step k -> k+1 (both pre-zeroed).
    template <typename Forcing>
    [[nodiscard]] Trajectory integrate(const Field& ic, Forcing&& forcing) const {
        require(ic.grid() == grid_, ErrorCode::invalid_argument, "initial condition grid mismatch");
        const std::size_t n = static_cast<std::size_t>(grid_.order());
        if (std::abs(ic[0] - config_.bc_right) > 1e-12 || std::abs(ic[n] - config_.bc_left) > 1e-12) {
            fail(ErrorCode::precondition, "initial condition does not match the boundary values");
        }
        const std::size_t steps = config_.step_count();
        Trajectory traj(grid_, config_.dt);
        traj.reserve(steps + 1);
        std::vector<double> u0(ic.values().begin(), ic.values().end());
        u0.front() = config_.bc_right;
        u0.back() = config_.bc_left;
        traj.push_back(u0);

        std::vector<double> drift(grid_.size());
        std::vector<double> noise(grid_.size());
        std::vector<double> next(grid_.size());
        for (std::size_t k = 0; k < steps; ++k) {
            std::fill(drift.begin(), drift.end(), 0.0);
            std::fill(noise.begin(), noise.end(), 0.0);
            forcing(k, traj.frame(k), std::span<double>(drift), std::span<double>(noise));
            step_into(traj, drift, noise, next);
            traj.push_back(next);
        }
        return traj;
    }

private:
    void step_into(const HistoryBuffer& history, std::span<const double> extra_drift,
                   std::span<const double> noise_increment, std::span<double> out) const {
        require(!history.empty(), ErrorCode::inconsistent_history, "step needs a current state");
        require(history.grid() == grid_, ErrorCode::invalid_argument, "history grid mismatch");
        const std::size_t nodes = grid_.size();
        require(extra_drift.size() == nodes && noise_increment.size() == nodes, ErrorCode::invalid_argument,
                "drift/noise field size mismatch");
        const auto u = history.frame(history.steps() - 1);
        const std::size_t n = nodes - 1;
        if (std::abs(u[0] - config_.bc_right) > 1e-12 || std::abs(u[n] - config_.bc_left) > 1e-12) {
            fail(ErrorCode::precondition, "current state violates the boundary values");
        }
        std::vector<double> memory(nodes);
        detail::accumulate_memory(history, kernel_table_, kernel_, memory);

        const double dt = config_.dt;
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(n - 1));
        for (std::size_t i = 1; i < n; ++i) {
            const double ui = u[i];
            const double reaction = ui - ui * ui * ui;
            rhs(static_cast<Eigen::Index>(i - 1)) =
                ui + dt * (reaction + memory[i] + extra_drift[i]) + noise_increment[i] +
                boundary_lift_(static_cast<Eigen::Index>(i - 1));
        }
        const Eigen::VectorXd sol = lu_.solve(rhs);
        out[0] = config_.bc_right;
        for (std::size_t i = 1; i < n; ++i) out[i] = sol(static_cast<Eigen::Index>(i - 1));
        out[n] = config_.bc_left;
    }

    ChebyshevGrid grid_;
    SolverConfig config_;
    MemoryKernel kernel_;
    Eigen::MatrixXd d2_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    Eigen::VectorXd boundary_lift_;
    std::vector<double> kernel_table_;
};

[[nodiscard]] inline Trajectory solve(const Field& ic, const SolverConfig& config, const MemoryKernel& kernel) {
    return MemorySolver(ic.grid(), config, kernel).solve(ic);
}

/// Benchmark initial condition u_0(x) = 0.53 x - 0.47 sin(1.5 pi x).
[[nodiscard]] inline Field benchmark_initial_condition(const ChebyshevGrid& grid) {
    return Field::sample(grid, [](double x) { return 0.53 * x - 0.47 * std::sin(1.5 * std::numbers::pi * x); });
}

}  // namespace sles
