#ifndef EAEE_SAMPLER_HPP
#define EAEE_SAMPLER_HPP

#include "eaee/common.hpp"
#include "eaee/criteria.hpp"
#include "eaee/estimator.hpp"
#include "eaee/rng.hpp"
#include "eaee/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace eaee {

struct ChainConfig {
    int burnin = 1000;
    int samples = 2000;
    double proposal_scale = 0.05; // Gaussian random-walk s.d. per coordinate
    std::uint64_t seed = 1;
    int chains = 1;
    bool adapt = true;            // tune the scale during burn-in, then freeze it
    double target_acceptance = 0.3;
    double init_jitter = 0.0;     // chains > 0 start at x~_i + jitter * N(0, I)

    void validate() const {
        require(burnin >= 0, "ChainConfig: burnin must be non-negative");
        require(samples >= 1, "ChainConfig: samples must be positive");
        require(proposal_scale > 0.0, "ChainConfig: proposal_scale must be positive");
        require(chains >= 1, "ChainConfig: chains must be positive");
        require(target_acceptance > 0.0 && target_acceptance < 1.0,
                "ChainConfig: target_acceptance must lie in (0, 1)");
        require(init_jitter >= 0.0, "ChainConfig: init_jitter must be non-negative");
    }
};

/// Post-burn-in output of one chain for one row.
struct RowPosterior {
    Index row = 0;
    int chain_id = 0;
    Matrix draws;                       // samples x d
    double acceptance_rate = 0.0;       // over post-burn-in iterations
    std::vector<double> criterion_trace; // criterion value at each stored draw
    double proposal_scale = 0.0;        // scale used after burn-in
};

/// Log target up to a constant; nullopt means undefined (always rejected).
using LogTarget = std::function<std::optional<double>(const Vector&)>;

/*
 * Random-walk Metropolis-Hastings under a uniform prior on the ball
 * {||x|| <= radius}. The Gaussian proposal is symmetric, so the log ratio is
 * target(x*) - target(x) for proposals inside the ball; proposals outside it
 * or with an undefined target are rejected.
 *
 * With adapt = true the log proposal scale follows a Robbins-Monro recursion
 * during burn-in, log s += (t + 1)^{-0.6} (alpha_t - target_acceptance), and is
 * frozen afterwards.
 */
inline RowPosterior metropolis_hastings(const LogTarget& target, const Vector& init, double radius,
                                        const ChainConfig& cfg, Rng& rng) {
    cfg.validate();
    require(radius > 0.0, "metropolis_hastings: radius must be positive");
    require(init.norm() <= radius, "metropolis_hastings: initial point lies outside the parameter ball");
    const std::optional<double> init_value = target(init);
    if (!init_value) {
        throw CriterionUndefined("metropolis_hastings: criterion is undefined at the initial point");
    }

    const Index d = init.size();
    RowPosterior out;
    out.draws.resize(cfg.samples, d);
    out.criterion_trace.reserve(static_cast<std::size_t>(cfg.samples));

    Vector current = init;
    double current_value = *init_value;
    double log_scale = std::log(cfg.proposal_scale);
    long accepted = 0;
    Vector proposal(d);

    const int total = cfg.burnin + cfg.samples;
    for (int it = 0; it < total; ++it) {
        const double scale = std::exp(log_scale);
        for (Index k = 0; k < d; ++k) {
            proposal(k) = current(k) + scale * rng.normal();
        }
        const double log_u = std::log(rng.uniform());

        double accept_prob = 0.0;
        std::optional<double> value;
        if (proposal.norm() <= radius) {
            value = target(proposal);
            if (value) {
                accept_prob = std::min(1.0, std::exp(*value - current_value));
            }
        }
        const bool accept = value.has_value() && log_u <= *value - current_value;
        if (accept) {
            current = proposal;
            current_value = *value;
        }

        if (it < cfg.burnin) {
            if (cfg.adapt) {
                log_scale += std::pow(static_cast<double>(it + 1), -0.6) * (accept_prob - cfg.target_acceptance);
            }
        } else {
            const int k = it - cfg.burnin;
            out.draws.row(k) = current.transpose();
            out.criterion_trace.push_back(current_value);
            accepted += accept ? 1 : 0;
        }
    }
    out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.samples);
    out.proposal_scale = std::exp(log_scale);
    return out;
}

/// Generalized-posterior sampler for one row (chain `chain_id` of cfg.chains).
inline RowPosterior mh_row(const RowContext& ctx, const Criterion& criterion, double prior_radius,
                           const ChainConfig& cfg, Rng& rng, int chain_id = 0) {
    Vector lambda = Vector::Zero(ctx.d());
    LogTarget target = [&](const Vector& x) { return criterion_eval(criterion, ctx, x, &lambda); };

    Vector init = project_to_ball(ctx.start(), prior_radius);
    if (chain_id > 0 && cfg.init_jitter > 0.0) {
        Vector jittered = init;
        for (Index k = 0; k < jittered.size(); ++k) {
            jittered(k) += cfg.init_jitter * rng.normal();
        }
        jittered = project_to_ball(jittered, prior_radius);
        if (target(jittered)) {
            init = jittered;
        }
        lambda.setZero();
    }
    RowPosterior out = metropolis_hastings(target, init, prior_radius, cfg, rng);
    out.row = ctx.row();
    out.chain_id = chain_id;
    return out;
}

/// Runs fn(task) for task in [0, count) on `threads` workers; fn must write only its own slot.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t task = 0; task < count; ++task) {
            fn(task);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    const unsigned used = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    workers.reserve(used);
    for (unsigned w = 0; w < used; ++w) {
        workers.emplace_back([&] {
            for (std::size_t task = next.fetch_add(1); task < count; task = next.fetch_add(1)) {
                fn(task);
            }
        });
    }
}

struct RowFailure {
    Index row = 0;
    int chain = 0;
    std::string message;
};

struct PosteriorRun {
    std::shared_ptr<const Embedding> embedding;
    std::vector<RowPosterior> posteriors; // successful (row, chain) pairs, ordered by row then chain
    std::vector<RowFailure> failures;
};

/// Random stream of chain `chain` for row `row` under master seed `seed`.
inline Rng chain_stream(std::uint64_t seed, Index row, int chain) {
    return Rng(seed, static_cast<std::uint64_t>(row)).split(static_cast<std::uint64_t>(chain));
}

/*
 * Samples every row's generalized posterior. Each (row, chain) owns the stream
 * chain_stream(cfg.seed, row, chain), so the output does not depend on the
 * thread count. Row failures are collected; other rows still complete.
 */
inline PosteriorRun sample_all_rows(const Matrix& a, std::shared_ptr<const Embedding> embedding, CriterionKind kind,
                                    const WeightFunction& weight, const ChainConfig& cfg, double theta_radius,
                                    unsigned threads = 1) {
    cfg.validate();
    require(embedding && embedding->n() == a.rows(), "sample_all_rows: embedding does not match the matrix");
    PosteriorRun run;
    run.embedding = std::move(embedding);
    auto shared_weight = std::make_shared<const WeightFunction>(weight);
    const Index n = a.rows();
    const std::size_t chains = static_cast<std::size_t>(cfg.chains);
    const std::size_t tasks = static_cast<std::size_t>(n) * chains;

    std::vector<std::optional<RowPosterior>> slots(tasks);
    std::vector<std::string> errors(tasks);
    parallel_for(tasks, threads, [&](std::size_t task) {
        const Index row = static_cast<Index>(task / chains);
        const int chain = static_cast<int>(task % chains);
        try {
            RowContext ctx = RowContext::from_matrix(a, row, run.embedding, shared_weight, theta_radius);
            const Criterion criterion = Criterion::make(kind, ctx);
            Rng rng = chain_stream(cfg.seed, row, chain);
            slots[task] = mh_row(ctx, criterion, theta_radius, cfg, rng, chain);
        } catch (const std::exception& e) {
            errors[task] = e.what();
        }
    });

    for (std::size_t task = 0; task < tasks; ++task) {
        if (slots[task]) {
            run.posteriors.push_back(std::move(*slots[task]));
        } else {
            run.failures.push_back(RowFailure{static_cast<Index>(task / chains), static_cast<int>(task % chains),
                                              errors[task]});
        }
    }
    return run;
}

inline PosteriorRun run_all_rows(const Matrix& a, Index d, CriterionKind kind, const WeightFunction& weight,
                                 const ChainConfig& cfg, double theta_radius, unsigned threads = 1) {
    cfg.validate();
    auto embedding = std::make_shared<const Embedding>(spectral_embed(a, d));
    return sample_all_rows(a, std::move(embedding), kind, weight, cfg, theta_radius, threads);
}

inline Vector posterior_mean(const RowPosterior& post) {
    require(post.draws.rows() >= 2, "posterior_mean: at least two draws are required");
    return column_mean(post.draws);
}

inline Matrix posterior_cov(const RowPosterior& post) {
    require(post.draws.rows() >= 2, "posterior_cov: at least two draws are required");
    return column_covariance(post.draws);
}

/// {x : (x - center)' V^{-1} (x - center) <= q}.
struct CredibleSet {
    Vector center;
    Matrix vhat;
    Matrix vhat_inverse;
    double q = 0.0;
    double alpha = 0.05;
};

inline CredibleSet credible_ellipse(const Matrix& vhat, const Vector& center, double alpha) {
    require(alpha > 0.0 && alpha < 1.0, "credible_ellipse: alpha must lie in (0, 1)");
    require(vhat.rows() == center.size() && vhat.cols() == center.size(),
            "credible_ellipse: covariance and centre dimensions differ");
    if (condition_number(vhat) > 1e12) {
        throw SingularMatrixError("credible_ellipse: posterior covariance is singular");
    }
    CredibleSet set;
    set.center = center;
    set.vhat = vhat;
    set.vhat_inverse = vhat.inverse();
    set.alpha = alpha;
    set.q = chi2_quantile(1.0 - alpha, static_cast<double>(center.size()));
    return set;
}

inline CredibleSet credible_ellipse(const RowPosterior& post, const Vector& xhat, double alpha) {
    return credible_ellipse(posterior_cov(post), xhat, alpha);
}

inline bool ellipse_contains(const CredibleSet& set, const Vector& point) {
    const Vector diff = point - set.center;
    return diff.dot(set.vhat_inverse * diff) <= set.q;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double value) const { return lo <= value && value <= hi; }
};

/// Equal-tailed per-coordinate intervals from the draws (type-7 sample quantiles).
inline std::vector<Interval> entrywise_interval(const RowPosterior& post, double alpha) {
    require(post.draws.rows() >= 40, "entrywise_interval: at least 40 draws are required");
    require(alpha > 0.0 && alpha < 1.0, "entrywise_interval: alpha must lie in (0, 1)");
    std::vector<Interval> out;
    for (Index k = 0; k < post.draws.cols(); ++k) {
        std::vector<double> column(post.draws.col(k).data(), post.draws.col(k).data() + post.draws.rows());
        out.push_back(Interval{sample_quantile(column, 0.5 * alpha), sample_quantile(column, 1.0 - 0.5 * alpha)});
    }
    return out;
}

} // namespace eaee

#endif
