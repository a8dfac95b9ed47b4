#ifndef EAEE_ESTIMATOR_HPP
#define EAEE_ESTIMATOR_HPP

#include "eaee/common.hpp"
#include "eaee/spectral.hpp"
#include "eaee/weight.hpp"

#include <memory>
#include <sstream>

namespace eaee {

/*
 * Everything needed to evaluate moments and criteria for row i.
 *
 * The moment function is g~_ij(x) = (A_ij - x' x~_j) h(x~_i' x~_j, x' x~_j) x~_j,
 * summed over all j (i included). The target is rho^{1/2} x_0i, so the
 * rho^{-1/2} factor is dropped: it changes neither roots nor likelihood ratios.
 */
class RowContext {
public:
    RowContext(Index row, Vector a_row, std::shared_ptr<const Embedding> embedding,
               std::shared_ptr<const WeightFunction> weight, double theta_radius)
        : row_(row), a_row_(std::move(a_row)), embedding_(std::move(embedding)),
          weight_(std::move(weight)), theta_radius_(theta_radius) {
        require(embedding_ != nullptr && weight_ != nullptr, "RowContext: embedding and weight are required");
        require(a_row_.size() == embedding_->n(), "RowContext: data row length must equal the embedding row count");
        require(row_ >= 0 && row_ < embedding_->n(), "RowContext: row index out of range");
        require(theta_radius_ > 0.0, "RowContext: parameter ball radius must be positive");
        s_ = embedding_->x * embedding_->x.row(row_).transpose();
    }

    static RowContext from_matrix(const Matrix& a, Index row, std::shared_ptr<const Embedding> embedding,
                                  std::shared_ptr<const WeightFunction> weight, double theta_radius) {
        return RowContext(row, a.row(row).transpose(), std::move(embedding), std::move(weight), theta_radius);
    }

    Index row() const { return row_; }
    Index n() const { return a_row_.size(); }
    Index d() const { return embedding_->rank(); }
    const Vector& a_row() const { return a_row_; }
    const Matrix& xt() const { return embedding_->x; }
    const Embedding& embedding() const { return *embedding_; }
    const WeightFunction& weight() const { return *weight_; }
    double theta_radius() const { return theta_radius_; }
    /// s_j = x~_i' x~_j.
    const Vector& s() const { return s_; }
    Vector start() const { return embedding_->row(row_); }
    bool in_theta(const Vector& x) const { return x.norm() <= theta_radius_; }
    /// The embedding row lies inside the parameter ball.
    bool start_in_theta() const { return in_theta(start()); }

private:
    Index row_;
    Vector a_row_;
    std::shared_ptr<const Embedding> embedding_;
    std::shared_ptr<const WeightFunction> weight_;
    double theta_radius_;
    Vector s_;
};

/// Per-neighbour pieces of the moment function at x.
struct MomentTerms {
    Vector t;        // x' x~_j
    Vector residual; // A_ij - t_j
    Vector h;        // h(s_j, t_j)
    Vector dh;       // dh/dt(s_j, t_j), only when requested
    Vector coef;     // residual_j * h_j, so g~_ij = coef_j x~_j
};

inline MomentTerms moment_terms(const RowContext& ctx, const Vector& x, bool with_derivative = false) {
    require(x.size() == ctx.d(), "moment evaluation: point has the wrong dimension");
    MomentTerms terms;
    terms.t.noalias() = ctx.xt() * x;
    terms.residual = ctx.a_row() - terms.t;
    ctx.weight().evaluate(ctx.s(), terms.t, terms.h, with_derivative ? &terms.dh : nullptr);
    terms.coef = terms.residual.cwiseProduct(terms.h);
    return terms;
}

/// (1/n) sum_j g~_ij(x).
inline Vector moment_sum(const RowContext& ctx, const Vector& x) {
    const MomentTerms terms = moment_terms(ctx, x);
    return ctx.xt().transpose() * terms.coef / static_cast<double>(ctx.n());
}

/// n x d matrix whose j-th row is g~_ij(x)'.
inline Matrix moment_matrix(const RowContext& ctx, const Vector& x) {
    const MomentTerms terms = moment_terms(ctx, x);
    return terms.coef.asDiagonal() * ctx.xt();
}

/// d/dx of moment_sum: (1/n) sum_j [(A_ij - t_j) dh_j - h_j] x~_j x~_j'.
inline Matrix moment_jacobian(const RowContext& ctx, const Vector& x) {
    const MomentTerms terms = moment_terms(ctx, x, true);
    const Vector factor = terms.residual.cwiseProduct(terms.dh) - terms.h;
    return ctx.xt().transpose() * factor.asDiagonal() * ctx.xt() / static_cast<double>(ctx.n());
}

struct NewtonOptions {
    double tolerance = 1e-10;
    int max_iterations = 100;
    int max_halvings = 30;
    double max_condition = 1e12;
};

struct ZEstimate {
    Vector x;
    int iterations = 0;
    double residual_norm = 0.0;
};

/// Radial projection onto {||x|| <= r}.
inline Vector project_to_ball(const Vector& x, double radius) {
    const double norm = x.norm();
    return norm > radius ? Vector(x * (radius / norm)) : x;
}

/*
 * Root of the eigenvector-assisted estimating equation for one row.
 *
 * Newton iteration from the embedding row with step halving: a trial step is
 * radially projected onto Theta and accepted once the residual norm decreases.
 * Throws ConvergenceError on stall or iteration limit, SingularMatrixError when
 * the Jacobian's condition number exceeds the limit, DomainError when the start
 * point is outside the weight's domain.
 */
inline ZEstimate z_estimate(const RowContext& ctx, const NewtonOptions& opts = {}) {
    ZEstimate out;
    Vector x = project_to_ball(ctx.start(), ctx.theta_radius());
    Vector g = moment_sum(ctx, x);
    double norm = g.norm();

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        if (norm <= opts.tolerance) {
            out.x = x;
            out.iterations = iter;
            out.residual_norm = norm;
            return out;
        }
        const Matrix jac = moment_jacobian(ctx, x);
        if (condition_number(jac) > opts.max_condition) {
            std::ostringstream msg;
            msg << "z_estimate: singular Jacobian at row " << ctx.row();
            throw SingularMatrixError(msg.str());
        }
        const Vector step = jac.fullPivLu().solve(g);

        double scale = 1.0;
        bool improved = false;
        for (int halving = 0; halving <= opts.max_halvings; ++halving, scale *= 0.5) {
            const Vector trial = project_to_ball(x - scale * step, ctx.theta_radius());
            try {
                const Vector g_trial = moment_sum(ctx, trial);
                const double norm_trial = g_trial.norm();
                if (norm_trial < norm) {
                    x = trial;
                    g = g_trial;
                    norm = norm_trial;
                    improved = true;
                    break;
                }
            } catch (const DomainError&) {
                // shorter step
            }
        }
        if (!improved) {
            std::ostringstream msg;
            msg << "z_estimate: Newton iteration stalled at row " << ctx.row() << " with residual " << norm;
            throw ConvergenceError(msg.str());
        }
    }
    if (norm <= opts.tolerance) {
        out.x = x;
        out.iterations = opts.max_iterations;
        out.residual_norm = norm;
        return out;
    }
    std::ostringstream msg;
    msg << "z_estimate: no convergence after " << opts.max_iterations << " iterations at row " << ctx.row();
    throw ConvergenceError(msg.str());
}

struct SandwichCovariance {
    Matrix g;     // plug-in Jacobian
    Matrix omega; // plug-in second moment of the moments
    Matrix cov;   // G^{-1} Omega G^{-T} / n
};

inline SandwichCovariance sandwich_covariance(const RowContext& ctx, const Vector& xhat) {
    SandwichCovariance out;
    out.g = moment_jacobian(ctx, xhat);
    const Matrix moments = moment_matrix(ctx, xhat);
    const double n = static_cast<double>(ctx.n());
    out.omega = moments.transpose() * moments / n;
    out.omega = 0.5 * (out.omega + out.omega.transpose());
    if (condition_number(out.g) > 1e12) {
        throw SingularMatrixError("sandwich_covariance: plug-in Jacobian is singular");
    }
    if (condition_number(out.omega) > 1e12) {
        throw SingularMatrixError("sandwich_covariance: plug-in moment covariance is singular");
    }
    const Matrix g_inv = out.g.inverse();
    out.cov = g_inv * out.omega * g_inv.transpose() / n;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

} // namespace eaee

#endif
