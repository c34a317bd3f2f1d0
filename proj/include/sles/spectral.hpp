#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sles/error.hpp"

namespace sles {

/// Chebyshev-Gauss-Lobatto grid on [-1, 1], nodes x_j = cos(j*pi/n) in
/// descending order so that row 0 is x = +1 and row n is x = -1.
///
/// The grid is a cheap value handle: copies share one immutable node array.
class ChebyshevGrid {
public:
    explicit ChebyshevGrid(int order) {
        if (order < 2) {
            fail(ErrorCode::invalid_argument,
                 "invalid-order: Chebyshev grid needs order >= 2, got " + std::to_string(order));
        }
        auto data = std::make_shared<Data>();
        data->order = order;
        data->nodes.resize(static_cast<std::size_t>(order) + 1);
        // sin form keeps x_j = -x_{n-j} exact and the endpoints at exactly +-1
        for (int j = 0; j <= order; ++j) {
            data->nodes[static_cast<std::size_t>(j)] =
                std::sin(std::numbers::pi * static_cast<double>(order - 2 * j) /
                         (2.0 * static_cast<double>(order)));
        }
        data_ = std::move(data);
    }

    [[nodiscard]] int order() const noexcept { return data_->order; }
    [[nodiscard]] std::size_t size() const noexcept { return data_->nodes.size(); }
    [[nodiscard]] std::span<const double> nodes() const noexcept { return data_->nodes; }
    [[nodiscard]] double node(std::size_t j) const { return data_->nodes.at(j); }

    friend bool operator==(const ChebyshevGrid& a, const ChebyshevGrid& b) noexcept {
        return a.order() == b.order();
    }

private:
    struct Data {
        int order = 0;
        std::vector<double> nodes;
    };
    std::shared_ptr<const Data> data_;
};

[[nodiscard]] inline ChebyshevGrid build_grid(int order) { return ChebyshevGrid(order); }

/// Nodal values of a function on a Chebyshev grid at one instant.
class Field {
public:
    Field(ChebyshevGrid grid, std::vector<double> values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        require(values_.size() == grid_.size(), ErrorCode::invalid_argument,
                "field has " + std::to_string(values_.size()) + " values but grid has " +
                    std::to_string(grid_.size()) + " nodes");
    }

    explicit Field(ChebyshevGrid grid, double fill = 0.0)
        : grid_(std::move(grid)), values_(grid_.size(), fill) {}

    template <typename F>
    [[nodiscard]] static Field sample(const ChebyshevGrid& grid, F&& f) {
        std::vector<double> v(grid.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(grid.node(j));
        return Field(grid, std::move(v));
    }

    [[nodiscard]] const ChebyshevGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] double operator[](std::size_t j) const { return values_[j]; }
    [[nodiscard]] double& operator[](std::size_t j) { return values_[j]; }

private:
    ChebyshevGrid grid_;
    std::vector<double> values_;
};

struct TrajectoryTag {};
struct SgsTag {};
struct ErrorTag {};

/// Uniformly time-stepped sequence of nodal frames, frame k at t_k = k*dt.
/// Stored flat, frame-major. The tag keeps trajectories, SGS residuals and
/// error fields from being mixed up.
template <typename Tag>
class NodalSeries {
public:
    NodalSeries(ChebyshevGrid grid, double dt) : grid_(std::move(grid)), dt_(dt) {
        require(dt > 0.0 && std::isfinite(dt), ErrorCode::invalid_argument,
                "time step must be positive");
    }

    [[nodiscard]] const ChebyshevGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] std::size_t nodes() const noexcept { return grid_.size(); }
    [[nodiscard]] std::size_t steps() const noexcept { return data_.size() / grid_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }
    [[nodiscard]] double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt_; }
    /// Time of the last stored frame.
    [[nodiscard]] double horizon() const noexcept {
        return empty() ? 0.0 : time(steps() - 1);
    }

    [[nodiscard]] std::span<const double> frame(std::size_t k) const {
        return std::span<const double>(data_).subspan(k * nodes(), nodes());
    }
    [[nodiscard]] std::span<double> frame(std::size_t k) {
        return std::span<double>(data_).subspan(k * nodes(), nodes());
    }
    [[nodiscard]] double operator()(std::size_t k, std::size_t j) const { return data_[k * nodes() + j]; }
    [[nodiscard]] double& operator()(std::size_t k, std::size_t j) { return data_[k * nodes() + j]; }

    [[nodiscard]] Field field(std::size_t k) const {
        auto f = frame(k);
        return Field(grid_, std::vector<double>(f.begin(), f.end()));
    }

    void push_back(std::span<const double> values) {
        require(values.size() == nodes(), ErrorCode::invalid_argument,
                "frame size does not match grid");
        data_.insert(data_.end(), values.begin(), values.end());
    }
    void push_back(const Field& f) {
        require(f.grid() == grid_, ErrorCode::invalid_argument, "frame grid mismatch");
        push_back(f.values());
    }

    void reserve(std::size_t frames) { data_.reserve(frames * nodes()); }
    /// Appends `frames` zero frames.
    void resize(std::size_t frames) { data_.resize(frames * nodes(), 0.0); }

    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] std::span<double> data() noexcept { return data_; }

    template <typename Other>
    [[nodiscard]] NodalSeries<Other> retag() const {
        NodalSeries<Other> out(grid_, dt_);
        out.reserve(steps());
        for (std::size_t k = 0; k < steps(); ++k) out.push_back(frame(k));
        return out;
    }

    friend bool operator==(const NodalSeries& a, const NodalSeries& b) {
        return a.grid_ == b.grid_ && a.dt_ == b.dt_ && a.data_ == b.data_;
    }

private:
    ChebyshevGrid grid_;
    double dt_;
    std::vector<double> data_;
};

using Trajectory = NodalSeries<TrajectoryTag>;
using SgsField = NodalSeries<SgsTag>;
using ErrorField = NodalSeries<ErrorTag>;

/// Dense collocation differentiation matrix acting on nodal values.
struct DiffMatrix {
    int order = 1;
    Eigen::MatrixXd entries;

    [[nodiscard]] std::vector<double> apply(std::span<const double> values) const {
        Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
        Eigen::VectorXd r = entries * v;
        return {r.data(), r.data() + r.size()};
    }
};

/// First- or second-derivative collocation matrix. The first-derivative
/// diagonal uses the negative-sum form so rows sum to zero; the second
/// derivative is the square of the first.
[[nodiscard]] inline DiffMatrix diff_matrix(const ChebyshevGrid& grid, int order) {
    if (order != 1 && order != 2) {
        fail(ErrorCode::invalid_argument,
             "unsupported derivative order " + std::to_string(order) + " (expected 1 or 2)");
    }
    const auto n = static_cast<Eigen::Index>(grid.order());
    const auto x = grid.nodes();
    Eigen::VectorXd c(n + 1);
    for (Eigen::Index j = 0; j <= n; ++j) {
        c(j) = ((j == 0 || j == n) ? 2.0 : 1.0) * ((j % 2 == 0) ? 1.0 : -1.0);
    }
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) {
        double row_sum = 0.0;
        for (Eigen::Index j = 0; j <= n; ++j) {
            if (i == j) continue;
            d(i, j) = (c(i) / c(j)) / (x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]);
            row_sum += d(i, j);
        }
        d(i, i) = -row_sum;
    }
    if (order == 1) return {1, std::move(d)};
    return {2, d * d};
}

/// Clenshaw-Curtis weights on the grid nodes.
[[nodiscard]] inline std::vector<double> quad_weights(const ChebyshevGrid& grid) {
    const int n = grid.order();
    const double nd = static_cast<double>(n);
    std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) - 1, 1.0);
    auto theta = [&](int j) { return std::numbers::pi * static_cast<double>(j) / nd; };
    if (n % 2 == 0) {
        w.front() = w.back() = 1.0 / (nd * nd - 1.0);
        for (int k = 1; k < n / 2; ++k) {
            for (int i = 1; i < n; ++i) {
                v[static_cast<std::size_t>(i - 1)] -=
                    2.0 * std::cos(2.0 * k * theta(i)) / (4.0 * k * k - 1.0);
            }
        }
        for (int i = 1; i < n; ++i) {
            v[static_cast<std::size_t>(i - 1)] -= std::cos(nd * theta(i)) / (nd * nd - 1.0);
        }
    } else {
        w.front() = w.back() = 1.0 / (nd * nd);
        for (int k = 1; k <= (n - 1) / 2; ++k) {
            for (int i = 1; i < n; ++i) {
                v[static_cast<std::size_t>(i - 1)] -=
                    2.0 * std::cos(2.0 * k * theta(i)) / (4.0 * k * k - 1.0);
            }
        }
    }
    for (int i = 1; i < n; ++i) w[static_cast<std::size_t>(i)] = 2.0 * v[static_cast<std::size_t>(i - 1)] / nd;
    return w;
}

/// Barycentric weights (-1)^j * delta_j, delta = 1/2 at the endpoints.
[[nodiscard]] inline std::vector<double> barycentric_weights(const ChebyshevGrid& grid) {
    const std::size_t n = static_cast<std::size_t>(grid.order());
    std::vector<double> w(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
        w[j] = ((j % 2 == 0) ? 1.0 : -1.0) * ((j == 0 || j == n) ? 0.5 : 1.0);
    }
    return w;
}

/// Row of Lagrange basis values l_j(x) for the grid, so that p(x) = row . values.
inline void lagrange_row(const ChebyshevGrid& grid, std::span<const double> bary, double x,
                         std::span<double> row) {
    const auto nodes = grid.nodes();
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        if (x == nodes[j]) {
            std::fill(row.begin(), row.end(), 0.0);
            row[j] = 1.0;
            return;
        }
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        row[j] = bary[j] / (x - nodes[j]);
        denom += row[j];
    }
    for (double& r : row) r /= denom;
}

/// Dense matrix evaluating the source interpolant at arbitrary points.
[[nodiscard]] inline Eigen::MatrixXd interpolation_matrix(const ChebyshevGrid& source,
                                                          std::span<const double> points) {
    const auto bary = barycentric_weights(source);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(source.size()));
    std::vector<double> row(source.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        lagrange_row(source, bary, points[i], row);
        for (std::size_t j = 0; j < row.size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        }
    }
    return m;
}

/// Evaluate the polynomial interpolant of `field` at x in [-1, 1].
[[nodiscard]] inline double evaluate(const Field& field, double x) {
    const auto bary = barycentric_weights(field.grid());
    std::vector<double> row(field.size());
    lagrange_row(field.grid(), bary, x, row);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * field[j];
    return s;
}

[[nodiscard]] inline std::vector<double> apply_operator(const Eigen::MatrixXd& m, std::span<const double> v) {
    require(static_cast<std::size_t>(m.cols()) == v.size(), ErrorCode::invalid_argument,
            "operator/vector size mismatch");
    Eigen::Map<const Eigen::VectorXd> vv(v.data(), m.cols());
    Eigen::VectorXd r = m * vv;
    return {r.data(), r.data() + r.size()};
}

/// Barycentric interpolation of a field onto another Chebyshev grid.
[[nodiscard]] inline Field interpolate(const Field& field, const ChebyshevGrid& target) {
    if (field.grid() == target) return field;
    return Field(target, apply_operator(interpolation_matrix(field.grid(), target.nodes()), field.values()));
}

}  // namespace sles
