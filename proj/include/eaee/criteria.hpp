#ifndef EAEE_CRITERIA_HPP
#define EAEE_CRITERIA_HPP

#include "eaee/common.hpp"
#include "eaee/estimator.hpp"
#include "eaee/quadrature.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace eaee {

/// The criterion is undefined at the requested point (sampler treats it as -inf).
class CriterionUndefined : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class QuadratureMode {
    Auto,         // closed form when the weight declares one
    GaussLegendre // always 16-node Gauss-Legendre
};

/*
 * M-criterion: sum_j integral_0^{x' x~_j} (A_ij - t) h(x~_i' x~_j, t) dt.
 * Its gradient is n * moment_sum. Throws CriterionUndefined if the weight
 * leaves its domain anywhere on an integration path.
 */
inline double m_criterion(const RowContext& ctx, const Vector& x, QuadratureMode mode = QuadratureMode::Auto) {
    require(x.size() == ctx.d(), "m_criterion: point has the wrong dimension");
    const Vector t = ctx.xt() * x;
    const Vector& s = ctx.s();
    const Vector& a = ctx.a_row();
    const WeightFunction& w = ctx.weight();
    const Index n = ctx.n();

    if (mode == QuadratureMode::Auto && w.has_antiderivative()) {
        // Builtin domains are intervals in t, so both path endpoints suffice.
        for (Index j = 0; j < n; ++j) {
            if (!w.in_domain(s(j), 0.0) || !w.in_domain(s(j), t(j))) {
                throw CriterionUndefined("m_criterion: integration path leaves the weight domain at neighbour " +
                                         std::to_string(j));
            }
        }
        double total = 0.0;
        switch (w.kind()) {
        case WeightKind::Rdpg:
            total = ((t.array() + (1.0 - a.array()) * (-t.array()).log1p()) / s.array().max(w.s_floor())).sum();
            break;
        case WeightKind::Constant:
            total = (a.array() * t.array() - 0.5 * t.array().square()).sum();
            break;
        default:
            for (Index j = 0; j < n; ++j) {
                total += w.antiderivative(s(j), a(j), t(j));
            }
        }
        return total;
    }

    const auto& rule = GaussLegendre<16>::instance();
    double total = 0.0;
    for (Index j = 0; j < n; ++j) {
        if (!w.in_domain(s(j), 0.0) || !w.in_domain(s(j), t(j))) {
            throw CriterionUndefined("m_criterion: integration path leaves the weight domain at neighbour " +
                                     std::to_string(j));
        }
        try {
            total += rule.integrate([&](double u) { return (a(j) - u) * w(s(j), u); }, 0.0, t(j));
        } catch (const DomainError& e) {
            throw CriterionUndefined(std::string("m_criterion: ") + e.what());
        }
    }
    return total;
}

/// Inverse of (1/n) sum_j g~_ij(x~_i) g~_ij(x~_i)', frozen at the embedding row.
inline Matrix gmm_weight_matrix(const RowContext& ctx) {
    const Matrix moments = moment_matrix(ctx, ctx.start());
    Matrix inner = moments.transpose() * moments / static_cast<double>(ctx.n());
    inner = 0.5 * (inner + inner.transpose());
    if (condition_number(inner) > 1e12) {
        throw SingularMatrixError("gmm_weight_matrix: moment covariance at the embedding row is singular (row " +
                                  std::to_string(ctx.row()) + ")");
    }
    Matrix inv = inner.inverse();
    return 0.5 * (inv + inv.transpose());
}

/// -(n/2) gbar' W gbar with gbar = moment_sum(ctx, x).
inline double gmm_criterion(const RowContext& ctx, const Vector& x, const Matrix& weight_matrix) {
    Vector gbar;
    try {
        gbar = moment_sum(ctx, x);
    } catch (const DomainError& e) {
        throw CriterionUndefined(std::string("gmm_criterion: ") + e.what());
    }
    return -0.5 * static_cast<double>(ctx.n()) * gbar.dot(weight_matrix * gbar);
}

struct EtelOptions {
    double tolerance = 1e-8;
    int max_iterations = 50;
    int max_halvings = 30;
    double max_condition = 1e12;
};

struct EtelSolution {
    Vector lambda;
    Vector probs;
    bool converged = false;
    double dual_value = std::numeric_limits<double>::quiet_NaN();
    double log_likelihood = -std::numeric_limits<double>::infinity(); // sum_j log p_j
    int iterations = 0;
};

namespace detail {

struct Tilt {
    Vector u;      // lambda' g_j
    double shift;  // max_j u_j
    Vector w;      // exp(u_j - shift)
    double total;  // sum_j w_j
    double log_objective; // log (1/n) sum_j exp(u_j)
};

inline Tilt tilt(const Matrix& g, const Vector& lambda) {
    Tilt out;
    out.u.noalias() = g * lambda;
    out.shift = out.u.maxCoeff();
    out.w = (out.u.array() - out.shift).exp().matrix();
    out.total = out.w.sum();
    out.log_objective = out.shift + std::log(out.total) - std::log(static_cast<double>(g.rows()));
    return out;
}

} // namespace detail

/*
 * Dual of the exponential-tilting problem for fixed moments g (n x d):
 * lambda = argmin (1/n) sum_j exp(lambda' g_j), p_j proportional to
 * exp(lambda' g_j). Newton with step halving on the log of the objective;
 * converged when the tilted moment mean sum_j p_j g_j has norm <= tolerance.
 * A singular Hessian or the iteration limit leaves converged = false, which
 * happens when zero is outside the convex hull of the moments.
 */
inline EtelSolution etel_dual_moments(const Matrix& g, const EtelOptions& opts = {},
                                      const Vector* lambda0 = nullptr) {
    const Index d = g.cols();
    const double n = static_cast<double>(g.rows());
    EtelSolution out;
    out.lambda = (lambda0 != nullptr && lambda0->size() == d) ? *lambda0 : Vector::Zero(d);

    detail::Tilt cur = detail::tilt(g, out.lambda);
    if (!std::isfinite(cur.log_objective)) {
        out.lambda.setZero();
        cur = detail::tilt(g, out.lambda);
    }

    auto finish = [&](bool converged, int iterations) {
        out.converged = converged;
        out.iterations = iterations;
        out.probs = cur.w / cur.total;
        out.dual_value = std::exp(cur.log_objective);
        out.log_likelihood = (cur.u.array() - cur.shift).sum() - n * std::log(cur.total);
        return out;
    };

    if (d == 1 && (g.minCoeff() > 0.0 || g.maxCoeff() < 0.0)) {
        // zero is not inside the hull of scalar moments
        return finish(false, 0);
    }

    Vector p(g.rows());
    Vector grad(d);
    Matrix hess(d, d);
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        p = cur.w / cur.total;
        grad.noalias() = g.transpose() * p;
        if (grad.norm() <= opts.tolerance) {
            return finish(true, iter);
        }
        hess.noalias() = g.transpose() * (g.array().colwise() * p.array()).matrix();
        if (spd_condition_number(hess) > opts.max_condition) {
            return finish(false, iter);
        }
        const Vector step = hess.ldlt().solve(grad);

        double scale = 1.0;
        bool moved = false;
        const double grad_norm = grad.norm();
        for (int halving = 0; halving <= opts.max_halvings; ++halving, scale *= 0.5) {
            const Vector trial = out.lambda - scale * step;
            detail::Tilt next = detail::tilt(g, trial);
            if (!std::isfinite(next.log_objective)) {
                continue;
            }
            const bool decreased = next.log_objective < cur.log_objective;
            bool flatter = false;
            if (!decreased && next.log_objective <= cur.log_objective + 1e-14 * std::abs(cur.log_objective)) {
                // At round-off level of the objective fall back to the gradient.
                flatter = (g.transpose() * (next.w / next.total)).norm() < grad_norm;
            }
            if (decreased || flatter) {
                out.lambda = trial;
                cur = std::move(next);
                moved = true;
                break;
            }
        }
        if (!moved) {
            return finish(false, iter);
        }
    }
    grad.noalias() = g.transpose() * (cur.w / cur.total);
    return finish(grad.norm() <= opts.tolerance, opts.max_iterations);
}

inline EtelSolution etel_dual(const RowContext& ctx, const Vector& x, const EtelOptions& opts = {},
                              const Vector* lambda0 = nullptr) {
    Matrix g;
    try {
        g = moment_matrix(ctx, x);
    } catch (const DomainError& e) {
        throw CriterionUndefined(std::string("etel_dual: ") + e.what());
    }
    return etel_dual_moments(g, opts, lambda0);
}

/// sum_j log p_ij(x); throws CriterionUndefined when the dual does not converge.
inline double etel_criterion(const RowContext& ctx, const Vector& x, const EtelOptions& opts = {},
                             Vector* lambda_warm = nullptr) {
    EtelSolution sol = etel_dual(ctx, x, opts, lambda_warm);
    if (!sol.converged) {
        throw CriterionUndefined("etel_criterion: dual problem did not converge at row " +
                                 std::to_string(ctx.row()));
    }
    if (lambda_warm != nullptr) {
        *lambda_warm = sol.lambda;
    }
    return sol.log_likelihood;
}

enum class CriterionKind { M, GMM, ETEL };

inline std::string to_string(CriterionKind kind) {
    switch (kind) {
    case CriterionKind::M:
        return "M";
    case CriterionKind::GMM:
        return "GMM";
    case CriterionKind::ETEL:
        return "ETEL";
    }
    return "?";
}

inline CriterionKind criterion_from_string(const std::string& name) {
    if (name == "M" || name == "m") {
        return CriterionKind::M;
    }
    if (name == "GMM" || name == "gmm") {
        return CriterionKind::GMM;
    }
    if (name == "ETEL" || name == "etel") {
        return CriterionKind::ETEL;
    }
    throw std::invalid_argument("unknown criterion '" + name + "'");
}

/// A criterion kind bound to one row, with its per-row state (GMM weighting matrix).
struct Criterion {
    CriterionKind kind = CriterionKind::GMM;
    Matrix gmm_weight;
    EtelOptions etel;
    QuadratureMode quadrature = QuadratureMode::Auto;

    static Criterion make(CriterionKind kind, const RowContext& ctx) {
        Criterion c;
        c.kind = kind;
        if (kind == CriterionKind::GMM) {
            c.gmm_weight = gmm_weight_matrix(ctx);
        }
        return c;
    }
};

/*
 * Evaluates the criterion; domain and convergence failures become nullopt.
 * `etel_lambda`, when given, warm-starts the ETEL dual and receives the new
 * multiplier on success.
 */
inline std::optional<double> criterion_eval(const Criterion& criterion, const RowContext& ctx, const Vector& x,
                                            Vector* etel_lambda = nullptr) {
    try {
        switch (criterion.kind) {
        case CriterionKind::M:
            return m_criterion(ctx, x, criterion.quadrature);
        case CriterionKind::GMM:
            return gmm_criterion(ctx, x, criterion.gmm_weight);
        case CriterionKind::ETEL:
            return etel_criterion(ctx, x, criterion.etel, etel_lambda);
        }
    } catch (const CriterionUndefined&) {
        return std::nullopt;
    } catch (const DomainError&) {
        return std::nullopt;
    }
    return std::nullopt;
}

} // namespace eaee

#endif
