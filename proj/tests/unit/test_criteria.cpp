#include "eaee/criteria.hpp"

#include "fixtures.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace eaee;
using fixtures::tiny;

namespace {

/// Golden-section minimiser of a unimodal function on [lo, hi].
template <typename F>
double golden_min(F f, double lo, double hi, double tol = 1e-13) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo;
    double b = hi;
    double c = b - r * (b - a);
    double d = a + r * (b - a);
    while (b - a > tol) {
        if (f(c) < f(d)) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    return 0.5 * (a + b);
}

struct Scene {
    fixtures::Draw draw;
    RowContext ctx;
    Vector xhat;
};

Scene scene(Index n, std::uint64_t seed, Index row) {
    auto draw = fixtures::rdpg_draw(n, seed);
    RowContext ctx = fixtures::row_context(draw, row, WeightFunction::rdpg());
    Vector xhat = z_estimate(ctx).x;
    return Scene{std::move(draw), std::move(ctx), std::move(xhat)};
}

} // namespace

TEST(MCriterion, TinyCaseByHand) {
    EXPECT_NEAR(m_criterion(tiny(), Vector::Constant(1, 0.5)), 0.15625, 1e-15);
    EXPECT_NEAR(m_criterion(tiny(), Vector::Constant(1, 0.0)), 0.0, 1e-15);
    EXPECT_NEAR(m_criterion(tiny(), Vector::Constant(1, 0.5), QuadratureMode::GaussLegendre), 0.15625, 1e-14);
}

TEST(MCriterion, RdpgClosedFormMatchesAdaptiveQuadrature) {
    const Scene sc = scene(150, 3, 40);
    const Vector& s = sc.ctx.s();
    const Vector& a = sc.ctx.a_row();
    for (double delta : {-0.1, 0.0, 0.07}) {
        const Vector x = sc.xhat + Vector::Constant(1, delta);
        const Vector t = sc.ctx.xt() * x;
        double oracle = 0.0;
        for (Index j = 0; j < sc.ctx.n(); ++j) {
            const double sj = std::max(s(j), 1e-2);
            oracle += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                [&](double u) { return (a(j) - u) / (sj * (1.0 - u)); }, 0.0, t(j), 15, 1e-14);
        }
        EXPECT_NEAR(m_criterion(sc.ctx, x), oracle, 1e-9 * std::max(1.0, std::abs(oracle)));
        EXPECT_NEAR(m_criterion(sc.ctx, x, QuadratureMode::GaussLegendre), oracle,
                    1e-9 * std::max(1.0, std::abs(oracle)));
    }
}

TEST(MCriterion, ClosedFormsMatchGaussLegendre) {
    const auto draw = fixtures::rdpg_draw(100, 5);
    for (const auto& w : {WeightFunction::constant(), WeightFunction::completion(0.6), WeightFunction::network(0.02),
                          builtin_weight("one_step")}) {
        const RowContext ctx = fixtures::row_context(draw, 33, w);
        const Vector x = ctx.start() + Vector::Constant(1, 0.05);
        const double closed = m_criterion(ctx, x);
        EXPECT_NEAR(closed, m_criterion(ctx, x, QuadratureMode::GaussLegendre), 1e-9 * std::max(1.0, std::abs(closed)))
            << w.name();
    }
}

TEST(MCriterion, GradientIsScaledMomentSum) {
    const Scene sc = scene(120, 8, 70);
    const double n = static_cast<double>(sc.ctx.n());
    for (double delta : {-0.08, 0.03, 0.1}) {
        const Vector x = sc.xhat + Vector::Constant(1, delta);
        const double h = 1e-6;
        const double fd = (m_criterion(sc.ctx, x + Vector::Constant(1, h)) -
                           m_criterion(sc.ctx, x - Vector::Constant(1, h))) /
                          (2.0 * h);
        const double exact = n * moment_sum(sc.ctx, x)(0);
        EXPECT_NEAR(fd, exact, 1e-5 * std::max(1.0, std::abs(exact)));
    }
}

TEST(MCriterion, UndefinedPastTheDomain) {
    const RowContext ctx = tiny(WeightFunction::rdpg());
    EXPECT_THROW(m_criterion(ctx, Vector::Constant(1, 1.5)), CriterionUndefined);
    const Criterion crit = Criterion::make(CriterionKind::M, ctx);
    EXPECT_FALSE(criterion_eval(crit, ctx, Vector::Constant(1, 1.5)).has_value());
    EXPECT_TRUE(criterion_eval(crit, ctx, Vector::Constant(1, 0.5)).has_value());
    const Criterion etel = Criterion::make(CriterionKind::ETEL, ctx);
    EXPECT_FALSE(criterion_eval(etel, ctx, Vector::Constant(1, 1.5)).has_value());
}

TEST(Gmm, TinyCaseByHand) {
    const RowContext ctx = tiny();
    const Matrix w = gmm_weight_matrix(ctx);
    EXPECT_NEAR(w(0, 0), 1.0 / 0.1328125, 1e-12);
    EXPECT_NEAR(w(0, 0), 7.52941, 1e-5);
    EXPECT_NEAR(gmm_criterion(ctx, Vector::Constant(1, 0.0), w), -0.7352941176470589, 1e-12);
    EXPECT_NEAR(gmm_criterion(ctx, Vector::Constant(1, 0.5), w), 0.0, 1e-15);
}

TEST(Gmm, NonPositiveAndZeroAtTheRoot) {
    const Scene sc = scene(150, 11, 90);
    const Matrix w = gmm_weight_matrix(sc.ctx);
    EXPECT_NEAR(gmm_criterion(sc.ctx, sc.xhat, w), 0.0, 1e-12);
    for (double delta : {-0.05, -0.01, 0.01, 0.03}) {
        EXPECT_LT(gmm_criterion(sc.ctx, sc.xhat + Vector::Constant(1, delta), w), 0.0);
    }
}

TEST(Gmm, InvariantToRescalingTheMoments) {
    const auto draw = fixtures::rdpg_draw(100, 13);
    const auto rdpg = WeightFunction::rdpg();
    const auto scaled = WeightFunction::custom(
        "scaled", [&](double s, double t) { return 3.0 * rdpg(s, t); },
        [&](double s, double t) { return 3.0 * rdpg.dt(s, t); }, [&](double s, double t) { return rdpg.in_domain(s, t); });
    const RowContext base = fixtures::row_context(draw, 50, rdpg);
    const RowContext other = fixtures::row_context(draw, 50, scaled);
    const Matrix wb = gmm_weight_matrix(base);
    const Matrix wo = gmm_weight_matrix(other);
    for (double delta : {-0.1, 0.01, 0.03}) {
        const Vector x = base.start() + Vector::Constant(1, delta);
        const double vb = gmm_criterion(base, x, wb);
        EXPECT_NEAR(gmm_criterion(other, x, wo), vb, 1e-10 * std::abs(vb));
    }
}

TEST(Etel, ZeroMomentsGiveUniformWeights) {
    const RowContext ctx = tiny();
    const EtelSolution sol = etel_dual(ctx, Vector::Constant(1, 0.5));
    ASSERT_TRUE(sol.converged);
    EXPECT_NEAR(sol.lambda(0), 0.0, 1e-15);
    EXPECT_NEAR(sol.probs(0), 0.5, 1e-15);
    EXPECT_NEAR(sol.log_likelihood, -2.0 * std::log(2.0), 1e-14);
}

TEST(Etel, AtTheRootWeightsAreUniform) {
    const Scene sc = scene(200, 17, 120);
    const EtelSolution sol = etel_dual(sc.ctx, sc.xhat);
    ASSERT_TRUE(sol.converged);
    EXPECT_LE(sol.lambda.norm(), 1e-6);
    EXPECT_LE((sol.probs.array() - 1.0 / 200.0).abs().maxCoeff(), 1e-8);
    EXPECT_NEAR(sol.log_likelihood, -200.0 * std::log(200.0), 1e-6);
}

TEST(Etel, SymmetricTwoPoint) {
    Matrix g(2, 1);
    g << -1.0, 1.0;
    const EtelSolution sol = etel_dual_moments(g);
    ASSERT_TRUE(sol.converged);
    EXPECT_NEAR(sol.lambda(0), 0.0, 1e-12);
    EXPECT_NEAR(sol.probs(0), 0.5, 1e-12);
}

TEST(Etel, ThreePointMatchesLineSearchOracle) {
    Matrix g(3, 1);
    g << 1.0, 2.0, -1.0;
    const double oracle = golden_min(
        [](double l) { return (std::exp(l) + std::exp(2.0 * l) + std::exp(-l)) / 3.0; }, -3.0, 3.0);
    const EtelSolution sol = etel_dual_moments(g);
    ASSERT_TRUE(sol.converged);
    EXPECT_NEAR(sol.lambda(0), oracle, 1e-6);
    Vector p(3);
    p << std::exp(oracle), std::exp(2.0 * oracle), std::exp(-oracle);
    p /= p.sum();
    EXPECT_LE((sol.probs - p).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(sol.log_likelihood, p.array().log().sum(), 1e-6);
}

TEST(Etel, TwoDimensionalMatchesCoordinateOracle) {
    Matrix g(5, 2);
    g << 1.0, 0.5, -0.7, 0.2, 0.3, -1.1, -0.4, 0.6, 0.2, -0.1;
    const auto objective = [&](double l1, double l2) {
        return (g.col(0).array() * l1 + g.col(1).array() * l2).exp().mean();
    };
    // profile the second coordinate inside a golden search on the first
    const auto profiled = [&](double l1) {
        const double l2 = golden_min([&](double l) { return objective(l1, l); }, -10.0, 10.0, 1e-12);
        return objective(l1, l2);
    };
    const double l1 = golden_min(profiled, -10.0, 10.0, 1e-10);
    const double l2 = golden_min([&](double l) { return objective(l1, l); }, -10.0, 10.0, 1e-12);
    const EtelSolution sol = etel_dual_moments(g);
    ASSERT_TRUE(sol.converged);
    EXPECT_NEAR(sol.lambda(0), l1, 1e-6);
    EXPECT_NEAR(sol.lambda(1), l2, 1e-6);
}

TEST(Etel, ProbabilitiesSolveTheMomentCondition) {
    const Scene sc = scene(150, 19, 30);
    Rng rng(3);
    for (int k = 0; k < 10; ++k) {
        const Vector x = sc.xhat + Vector::Constant(1, 0.02 * rng.normal());
        const EtelSolution sol = etel_dual(sc.ctx, x);
        if (!sol.converged) {
            continue;
        }
        const Matrix g = moment_matrix(sc.ctx, x);
        EXPECT_NEAR(sol.probs.sum(), 1.0, 1e-12);
        EXPECT_GT(sol.probs.minCoeff(), 0.0);
        EXPECT_LE((g.transpose() * sol.probs).norm(), 1e-8);
        EXPECT_LE(sol.log_likelihood, -150.0 * std::log(150.0) + 1e-9);
    }
}

TEST(Etel, OutsideTheHullDoesNotConverge) {
    Matrix g(3, 1);
    g << 0.5, 1.0, 2.0;
    EXPECT_FALSE(etel_dual_moments(g).converged);
    Matrix g2(4, 2);
    g2 << 1.0, 0.0, 2.0, 1.0, 1.0, -1.0, 3.0, 0.5;
    EXPECT_FALSE(etel_dual_moments(g2).converged);
    const RowContext ctx = tiny();
    EXPECT_THROW(etel_criterion(ctx, Vector::Constant(1, 2.0)), CriterionUndefined);
}

TEST(AllCriteria, MaximisedAtTheRoot) {
    const Scene sc = scene(200, 23, 60);
    for (CriterionKind kind : {CriterionKind::M, CriterionKind::GMM, CriterionKind::ETEL}) {
        const Criterion crit = Criterion::make(kind, sc.ctx);
        const auto at_root = criterion_eval(crit, sc.ctx, sc.xhat);
        ASSERT_TRUE(at_root.has_value()) << to_string(kind);
        for (double delta : {-0.1, -0.01, -1e-3, 1e-3, 0.01, 0.1}) {
            const auto value = criterion_eval(crit, sc.ctx, sc.xhat + Vector::Constant(1, delta));
            if (value) {
                EXPECT_LT(*value, *at_root) << to_string(kind) << " delta " << delta;
            }
        }
    }
}

TEST(CriterionNames, RoundTrip) {
    for (CriterionKind kind : {CriterionKind::M, CriterionKind::GMM, CriterionKind::ETEL}) {
        EXPECT_EQ(criterion_from_string(to_string(kind)), kind);
    }
    EXPECT_THROW(criterion_from_string("EL"), std::invalid_argument);
}
