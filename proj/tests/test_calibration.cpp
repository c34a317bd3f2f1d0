#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "sles/calibration.hpp"
#include "sles/fbm.hpp"

using namespace sles;

namespace {

/// ubar(x, t) = x on every frame.
Trajectory linear_ubar(const ChebyshevGrid& g, double dt, std::size_t steps) {
    Trajectory u(g, dt);
    const auto f = Field::sample(g, [](double x) { return x; });
    for (std::size_t k = 0; k < steps; ++k) u.push_back(f);
    return u;
}

/// ubar(x, t) = x (1 - t/2): nonconstant in both x and t.
Trajectory moving_ubar(const ChebyshevGrid& g, double dt, std::size_t steps) {
    Trajectory u(g, dt);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        u.push_back(Field::sample(g, [t](double x) { return x * (1.0 - 0.5 * t); }));
    }
    return u;
}

template <typename F>
SgsField sgs_from(const Trajectory& ubar, F&& f) {
    SgsField r(ubar.grid(), ubar.dt());
    r.resize(ubar.steps());
    for (std::size_t i = 0; i < r.data().size(); ++i) r.data()[i] = f(ubar.data()[i]);
    return r;
}

/// Weighted normal equations assembled and solved by Gaussian elimination in
/// long double.
std::array<double, 4> normal_equations_oracle(const SgsField& r, const Trajectory& u) {
    const auto wx = quad_weights(r.grid());
    long double g[4][5] = {};
    for (std::size_t k = 0; k < r.steps(); ++k) {
        const long double wt = (k == 0 || k + 1 == r.steps()) ? 0.5L * r.dt() : r.dt();
        for (std::size_t j = 0; j < r.nodes(); ++j) {
            const long double w = wt * wx[j];
            long double p[4] = {1.0L, u(k, j), 0.0L, 0.0L};
            p[2] = p[1] * p[1];
            p[3] = p[2] * p[1];
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 4; ++b) g[a][b] += w * p[a] * p[b];
                g[a][4] += w * p[a] * r(k, j);
            }
        }
    }
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int i = c + 1; i < 4; ++i) {
            if (std::fabs(g[i][c]) > std::fabs(g[piv][c])) piv = i;
        }
        for (int k = 0; k < 5; ++k) std::swap(g[c][k], g[piv][k]);
        for (int i = 0; i < 4; ++i) {
            if (i == c) continue;
            const long double f = g[i][c] / g[c][c];
            for (int k = c; k < 5; ++k) g[i][k] -= f * g[c][k];
        }
    }
    std::array<double, 4> a{};
    for (int i = 0; i < 4; ++i) a[static_cast<std::size_t>(i)] = static_cast<double>(g[i][4] / g[i][i]);
    return a;
}

}  // namespace

TEST(PerturbedIc, VanishesAtBoundariesInEveryMode) {
    const ChebyshevGrid g(32);
    const auto base = benchmark_initial_condition(g);
    for (auto mode : {PerturbationMode::sine, PerturbationMode::half_cosine, PerturbationMode::mixed}) {
        const PerturbationSpec spec{0.05, 3, mode};
        for (std::size_t m = 0; m < 10; ++m) {
            const auto p = perturbed_ic(base, spec, m);
            EXPECT_EQ(p[0], base[0]);
            EXPECT_EQ(p[32], base[32]);
            double dmax = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) dmax = std::max(dmax, std::abs(p[j] - base[j]));
            EXPECT_LE(dmax, 2 * 0.05);
        }
    }
    const auto same = perturbed_ic(base, PerturbationSpec{0.0, 3, PerturbationMode::mixed}, 4);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_EQ(same[j], base[j]);
    EXPECT_THROW((void)perturbed_ic(base, PerturbationSpec{-1.0, 3, PerturbationMode::mixed}, 0), Error);
}

TEST(PerturbedIc, SineModeKeepsOddSymmetry) {
    const ChebyshevGrid g(16);
    const auto p = perturbed_ic(benchmark_initial_condition(g), PerturbationSpec{0.1, 1, PerturbationMode::sine}, 0);
    for (std::size_t j = 0; j <= 16; ++j) EXPECT_NEAR(p[j] + p[16 - j], 0.0, 1e-15);
}

class SmallEnsemble : public ::testing::Test {
protected:
    ChebyshevGrid fine{24};
    ChebyshevGrid coarse{6};
    SolverConfig cfg{1e-2, 0.3, -1.0, 1.0};
    MemoryKernel kernel{2.0};
    GaussianFilter filter{0.05};

    Ensemble make(double epsilon, std::size_t members, std::uint64_t seed) const {
        return generate_ensemble(benchmark_initial_condition(fine), PerturbationSpec{epsilon, seed}, members, cfg,
                                 kernel, filter, coarse);
    }
};

TEST_F(SmallEnsemble, ZeroPerturbationGivesIdenticalMembers) {
    const auto ens = make(0.0, 4, 1);
    ASSERT_EQ(ens.size(), 4u);
    for (const auto& m : ens.members) {
        EXPECT_TRUE(m.fine == ens.members[0].fine);
        EXPECT_TRUE(m.sgs == ens.members[0].sgs);
        EXPECT_EQ(m.sgs.steps(), 31u);
        EXPECT_EQ(m.sgs.nodes(), coarse.size());
    }
    const auto sigma = estimate_sigma(ens.sgs_fields(), mean_sgs(ens), 0.3, 0.75);
    for (double s : sigma.sigma) EXPECT_EQ(s, 0.0);
}

TEST_F(SmallEnsemble, RerunIsBitIdentical) {
    const auto a = make(0.01, 2, 42);
    const auto b = make(0.01, 2, 42);
    for (std::size_t m = 0; m < 2; ++m) {
        EXPECT_TRUE(a.members[m].fine == b.members[m].fine);
        EXPECT_TRUE(a.members[m].sgs == b.members[m].sgs);
        EXPECT_TRUE(a.members[m].filtered == b.members[m].filtered);
    }
    EXPECT_FALSE(a.members[0].fine == a.members[1].fine);
    const auto ma = calibrate(a, 0.75);
    const auto mb = calibrate(b, 0.75);
    EXPECT_EQ(ma.drift.a, mb.drift.a);
    EXPECT_EQ(ma.sigma.sigma, mb.sigma.sigma);
}

TEST_F(SmallEnsemble, RejectsTooSmallEnsemble) {
    EXPECT_THROW((void)make(0.01, 1, 1), Error);
}

TEST(GenerateEnsemble, PerturbationsStaySmall) {
    const ChebyshevGrid fine(64);
    const auto ens = generate_ensemble(benchmark_initial_condition(fine), PerturbationSpec{0.01, 2009}, 16,
                                       SolverConfig{1e-3, 1.0, -1.0, 1.0}, MemoryKernel(2.0), GaussianFilter(0.01),
                                       ChebyshevGrid(16), false);
    const std::size_t last = ens.members[0].raw.steps() - 1;
    double mean = 0.0;
    for (const auto& m : ens.members) mean += m.raw(last, 8);  // coarse node 8 is x = 0
    mean /= 16.0;
    double var = 0.0;
    for (const auto& m : ens.members) var += (m.raw(last, 8) - mean) * (m.raw(last, 8) - mean);
    const double sd = std::sqrt(var / 15.0);
    EXPECT_GT(sd, 0.0);
    EXPECT_LT(sd, 0.1);
}

TEST(MeanSgs, Basics) {
    const ChebyshevGrid g(4);
    SgsField a(g, 0.1);
    a.push_back(std::vector<double>{1, 2, 3, 4, 5});
    a.push_back(std::vector<double>{-1, 0.5, 3, 2, 1});
    SgsField neg(g, 0.1);
    for (std::size_t k = 0; k < 2; ++k) {
        std::vector<double> v(a.frame(k).begin(), a.frame(k).end());
        for (double& x : v) x = -x;
        neg.push_back(v);
    }
    const std::vector<SgsField> single{a};
    EXPECT_TRUE(mean_sgs(single) == a);
    const std::vector<SgsField> pair{a, neg};
    const auto cancelled = mean_sgs(pair);
    for (double v : cancelled.data()) EXPECT_EQ(v, 0.0);
    EXPECT_THROW((void)mean_sgs(std::span<const SgsField>()), Error);
}

TEST(MeanSgs, MonteCarloMean) {
    const ChebyshevGrid g(3);
    std::mt19937_64 rng(12);
    const double mu = 1.7;
    std::normal_distribution<double> normal(mu, 1.0);
    std::vector<SgsField> members;
    for (int m = 0; m < 100; ++m) {
        SgsField f(g, 0.5);
        for (int k = 0; k < 3; ++k) f.push_back(std::vector<double>{normal(rng), normal(rng), normal(rng), normal(rng)});
        members.push_back(std::move(f));
    }
    const auto mean = mean_sgs(members);
    for (double v : mean.data()) EXPECT_NEAR(v, mu, 4.0 / std::sqrt(100.0));
}

TEST(MeanSgs, Linearity) {
    const ChebyshevGrid g(5);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal;
    auto random_field = [&] {
        SgsField f(g, 0.1);
        for (int k = 0; k < 4; ++k) {
            std::vector<double> v(g.size());
            for (double& x : v) x = normal(rng);
            f.push_back(v);
        }
        return f;
    };
    std::vector<SgsField> a, b, sum;
    for (int m = 0; m < 7; ++m) {
        a.push_back(random_field());
        b.push_back(random_field());
        SgsField s(g, 0.1);
        s.resize(4);
        for (std::size_t i = 0; i < s.data().size(); ++i) s.data()[i] = a.back().data()[i] + b.back().data()[i];
        sum.push_back(s);
    }
    const auto ma = mean_sgs(a), mb = mean_sgs(b), ms = mean_sgs(sum);
    for (std::size_t i = 0; i < ms.data().size(); ++i) EXPECT_NEAR(ms.data()[i], ma.data()[i] + mb.data()[i], 1e-14);
}

TEST(FitDrift, ConstantData) {
    const ChebyshevGrid g(12);
    const auto u = moving_ubar(g, 0.1, 11);
    const auto fit = fit_drift(sgs_from(u, [](double) { return 0.7; }), u);
    EXPECT_NEAR(fit.a[0], 0.7, 1e-10);
    for (int i = 1; i < 4; ++i) EXPECT_NEAR(fit.a[static_cast<std::size_t>(i)], 0.0, 1e-10);
    EXPECT_GT(fit.condition_number, 1.0);
}

TEST(FitDrift, RecoversCubicInModelClass) {
    const ChebyshevGrid g(16);
    const auto u = moving_ubar(g, 0.05, 21);
    const auto r = sgs_from(u, [](double v) { return 0.1 + 0.2 * v - 0.3 * v * v * v; });
    const auto fit = fit_drift(r, u);
    EXPECT_NEAR(fit.a[0], 0.1, 1e-8);
    EXPECT_NEAR(fit.a[1], 0.2, 1e-8);
    EXPECT_NEAR(fit.a[2], 0.0, 1e-8);
    EXPECT_NEAR(fit.a[3], -0.3, 1e-8);
}

TEST(FitDrift, OutOfClassMatchesNormalEquationsOracle) {
    const ChebyshevGrid g(20);
    const auto u = linear_ubar(g, 0.1, 11);
    const auto r = sgs_from(u, [](double v) { return std::abs(v); });
    const auto fit = fit_drift(r, u);
    const auto oracle = normal_equations_oracle(r, u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(fit.a[i], oracle[i], 1e-8);
    DriftFit of;
    of.a = oracle;
    const double res = drift_residual(fit, r, u);
    EXPECT_GT(res, 0.0);
    EXPECT_NEAR(res, drift_residual(of, r, u), 1e-8 * res);

    // weighted residual is orthogonal to 1, u, u^2, u^3
    const auto wx = quad_weights(g);
    for (int p = 0; p < 4; ++p) {
        double dot = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < u.steps(); ++k) {
            const double wt = (k == 0 || k + 1 == u.steps()) ? 0.05 : 0.1;
            for (std::size_t j = 0; j < g.size(); ++j) {
                const double basis = std::pow(u(k, j), p);
                const double e = fit(u(k, j)) - r(k, j);
                dot += wt * wx[j] * e * basis;
                scale += wt * wx[j] * std::abs(r(k, j) * basis);
            }
        }
        EXPECT_LT(std::abs(dot), 1e-8 * scale) << "basis " << p;
    }
}

TEST(FitDrift, OptimalUnderCoefficientPerturbation) {
    const ChebyshevGrid g(20);
    const auto u = moving_ubar(g, 0.1, 11);
    const auto r = sgs_from(u, [](double v) { return std::exp(v) - 2.0 * std::abs(v); });
    const auto fit = fit_drift(r, u);
    const double best = drift_residual(fit, r, u);
    for (std::size_t i = 0; i < 4; ++i) {
        for (double d : {1e-3, -1e-3}) {
            DriftFit p = fit;
            p.a[i] += d;
            EXPECT_GT(drift_residual(p, r, u), best);
        }
    }
}

TEST(FitDrift, ConstantUbarIsDegenerate) {
    const ChebyshevGrid g(8);
    Trajectory u(g, 0.1);
    for (int k = 0; k < 5; ++k) u.push_back(Field(g, 0.4));
    try {
        (void)fit_drift(sgs_from(u, [](double) { return 1.0; }), u);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::degenerate);
        EXPECT_NE(std::string(e.what()).find("condition"), std::string::npos);
    }
}

TEST(FitDrift, RejectsMisalignedInputs) {
    const ChebyshevGrid g(8);
    const auto u = linear_ubar(g, 0.1, 5);
    const auto r = sgs_from(linear_ubar(g, 0.1, 6), [](double v) { return v; });
    EXPECT_THROW((void)fit_drift(r, u), Error);
}

TEST(EstimateSigma, RecoversSyntheticNoiseIntensity) {
    const double h = 0.75;
    const std::size_t steps = 32;
    const double dt = 1.0 / steps;
    const ChebyshevGrid g(8);
    auto c = [](double x) { return 0.2 * (1.0 - x * x); };
    const CholeskyFbmSampler sampler(uniform_times(1.0, steps), h);
    auto rng = make_rng(555, "sigma-test");
    std::vector<SgsField> members;
    for (int m = 0; m < 1000; ++m) {
        const auto path = sampler.sample(rng);
        const auto db = increments(path);
        SgsField r(g, dt);
        for (std::size_t k = 0; k <= steps; ++k) {
            const double xi = db[std::min(k, steps - 1)] / dt;
            r.push_back(Field::sample(g, [&](double x) { return 1.0 + c(x) * xi; }));
        }
        members.push_back(std::move(r));
    }
    const auto sigma = estimate_sigma(members, mean_sgs(members), 1.0, h);
    const auto w = quad_weights(g);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        EXPECT_GE(sigma.sigma[j], 0.0);
        const double cj = std::abs(c(g.node(j)));
        num += w[j] * (sigma.sigma[j] - cj) * (sigma.sigma[j] - cj);
        den += w[j] * cj * cj;
    }
    EXPECT_LT(std::sqrt(num / den), 0.10);
}

TEST(EstimateSigma, ExactHomogeneity) {
    const ChebyshevGrid g(6);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    std::vector<SgsField> base;
    for (int m = 0; m < 9; ++m) {
        SgsField f(g, 0.25);
        for (int k = 0; k < 5; ++k) {
            std::vector<double> v(g.size());
            for (double& x : v) x = normal(rng);
            f.push_back(v);
        }
        base.push_back(std::move(f));
    }
    const auto s1 = estimate_sigma(base, mean_sgs(base), 1.0, 0.75);
    for (double lambda : {2.0, -2.0, 0.5, -4.0}) {
        std::vector<SgsField> scaled = base;
        for (auto& f : scaled) {
            for (double& v : f.data()) v *= lambda;
        }
        const auto s = estimate_sigma(scaled, mean_sgs(scaled), 1.0, 0.75);
        for (std::size_t j = 0; j < g.size(); ++j) EXPECT_EQ(s.sigma[j], std::abs(lambda) * s1.sigma[j]);
    }
}

TEST(EstimateSigma, Errors) {
    const ChebyshevGrid g(4);
    SgsField f(g, 0.5);
    f.push_back(Field(g, 1.0));
    f.push_back(Field(g, 2.0));
    f.push_back(Field(g, 3.0));
    const std::vector<SgsField> one{f};
    try {
        (void)estimate_sigma(one, f, 1.0, 0.75);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("insufficient-ensemble"), std::string::npos);
    }
    const std::vector<SgsField> two{f, f};
    EXPECT_THROW((void)estimate_sigma(two, f, 0.5, 0.75), Error);  // window must equal the horizon
    EXPECT_NO_THROW((void)estimate_sigma(two, f, 1.0, 0.75));
}
