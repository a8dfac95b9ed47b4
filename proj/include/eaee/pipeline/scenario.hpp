#ifndef EAEE_PIPELINE_SCENARIO_HPP
#define EAEE_PIPELINE_SCENARIO_HPP

#include "eaee/diagnostics.hpp"
#include "eaee/estimator.hpp"
#include "eaee/model.hpp"
#include "eaee/pipeline/config.hpp"
#include "eaee/sampler.hpp"
#include "eaee/spectral.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace eaee::pipeline {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Per-row output of one criterion's generalized posterior.
struct CriterionRows {
    CriterionKind kind = CriterionKind::GMM;
    Matrix mean;                         // n x d; embedding row where sampling failed
    std::vector<Matrix> cov;             // empty matrix where sampling failed
    std::vector<std::vector<Interval>> intervals;
    std::vector<char> ok;
    Matrix interval_covered;             // n x d of 0/1, NaN where sampling failed
    Vector ellipse_covered;              // n of 0/1, NaN where unavailable
    Vector acceptance;                   // n, NaN where sampling failed
    std::vector<RowFailure> failures;
};

/// One method's line in replicates.csv.
struct MethodSummary {
    std::string method;
    double sse = kNaN;
    double interval_coverage = kNaN;
    double ellipse_coverage = kNaN;
    double mean_acceptance = kNaN;
    int row_failures = 0;
};

struct ReplicateResult {
    int replicate = 0;
    GroundTruth truth;
    std::shared_ptr<const Embedding> embedding;
    Matrix alignment;     // W with X~ W ~ X0
    Matrix aligned_truth; // X0 W', the truth in embedding coordinates
    Matrix z;             // n x d; embedding row where Newton failed
    std::vector<char> z_ok;
    std::vector<Matrix> sandwich; // sandwich covariance per row, empty on failure
    std::vector<CriterionRows> criteria;
    std::vector<MethodSummary> methods;

    const CriterionRows& rows_for(CriterionKind kind) const {
        for (const auto& c : criteria) {
            if (c.kind == kind) {
                return c;
            }
        }
        throw std::invalid_argument("replicate has no results for criterion " + to_string(kind));
    }
    const MethodSummary& method(const std::string& name) const {
        for (const auto& m : methods) {
            if (m.method == name) {
                return m;
            }
        }
        throw std::invalid_argument("replicate has no method '" + name + "'");
    }
};

/// Synthetic data for replicate r: truth from the latent curve, A from the scenario's model.
inline std::pair<GroundTruth, ObservedMatrix> generate_replicate_data(const RunConfig& cfg, int replicate) {
    require(cfg.d == 1, "synthetic scenarios use the one-dimensional latent curve (d = 1)");
    Rng rng = Rng(cfg.seed, 0).split(static_cast<std::uint64_t>(replicate));
    GroundTruth truth = generate_latent_curve(cfg.n);
    if (cfg.scenario == "rdpg_curve") {
        return {truth, sample_rdpg(truth, rng)};
    }
    if (cfg.scenario == "completion") {
        return {truth, sample_matrix_completion(truth, cfg.sigma, cfg.p, rng)};
    }
    throw std::invalid_argument("scenario '" + cfg.scenario + "' has no synthetic generator");
}

/// Master seed of the chains of replicate r (distinct from the data stream).
inline std::uint64_t replicate_chain_seed(std::uint64_t seed, int replicate) {
    return Rng::derive(seed, 0x100000000ULL + static_cast<std::uint64_t>(replicate));
}

/// Z-estimates and sandwich covariances for every row; failed rows fall back to the embedding row.
inline void fit_z_rows(const Matrix& a, const std::shared_ptr<const Embedding>& embedding,
                       const std::shared_ptr<const WeightFunction>& weight, double radius, unsigned threads,
                       Matrix& z, std::vector<char>& ok, std::vector<Matrix>& sandwich,
                       std::vector<std::string>* errors = nullptr) {
    const Index n = a.rows();
    z = embedding->x;
    ok.assign(static_cast<std::size_t>(n), 0);
    sandwich.assign(static_cast<std::size_t>(n), Matrix());
    std::vector<std::string> messages(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t task) {
        const Index row = static_cast<Index>(task);
        try {
            RowContext ctx = RowContext::from_matrix(a, row, embedding, weight, radius);
            const ZEstimate est = z_estimate(ctx);
            z.row(row) = est.x.transpose();
            ok[task] = 1;
            sandwich[task] = sandwich_covariance(ctx, est.x).cov;
        } catch (const std::exception& e) {
            messages[task] = e.what();
        }
    });
    if (errors != nullptr) {
        *errors = std::move(messages);
    }
}

/// Samples one criterion for all rows and derives means, covariances and intervals.
inline CriterionRows sample_criterion_rows(const Matrix& a, const std::shared_ptr<const Embedding>& embedding,
                                           CriterionKind kind, const WeightFunction& weight, const ChainConfig& chain,
                                           double radius, unsigned threads, double alpha = 0.05) {
    const Index n = a.rows();
    const Index d = embedding->rank();
    PosteriorRun run = sample_all_rows(a, embedding, kind, weight, chain, radius, threads);

    CriterionRows out;
    out.kind = kind;
    out.mean = embedding->x;
    out.cov.assign(static_cast<std::size_t>(n), Matrix());
    out.intervals.assign(static_cast<std::size_t>(n), {});
    out.ok.assign(static_cast<std::size_t>(n), 0);
    out.acceptance = Vector::Constant(n, kNaN);
    out.failures = run.failures;
    for (const RowPosterior& post : run.posteriors) {
        if (post.chain_id != 0) {
            continue; // the harness summarises chain 0 only
        }
        const auto r = static_cast<std::size_t>(post.row);
        out.mean.row(post.row) = posterior_mean(post).transpose();
        out.cov[r] = posterior_cov(post);
        out.intervals[r] = entrywise_interval(post, alpha);
        out.acceptance(post.row) = post.acceptance_rate;
        out.ok[r] = 1;
    }
    out.interval_covered = Matrix::Constant(n, d, kNaN);
    out.ellipse_covered = Vector::Constant(n, kNaN);
    return out;
}

/// Fills coverage indicators against `truth` (already in embedding coordinates).
inline void score_coverage(CriterionRows& rows, const Matrix& truth, const Matrix& centers, double alpha = 0.05) {
    const Index n = truth.rows();
    for (Index i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(i);
        if (!rows.ok[r]) {
            continue;
        }
        for (Index k = 0; k < truth.cols(); ++k) {
            rows.interval_covered(i, k) = rows.intervals[r][static_cast<std::size_t>(k)].contains(truth(i, k)) ? 1.0 : 0.0;
        }
        try {
            const CredibleSet set = credible_ellipse(rows.cov[r], centers.row(i).transpose(), alpha);
            rows.ellipse_covered(i) = ellipse_contains(set, truth.row(i).transpose()) ? 1.0 : 0.0;
        } catch (const SingularMatrixError&) {
            // constant chain: no ellipse
        }
    }
}

/// Mean over finite entries; NaN when there are none.
inline double finite_mean(const Matrix& values) {
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < values.rows(); ++i) {
        for (Index k = 0; k < values.cols(); ++k) {
            if (std::isfinite(values(i, k))) {
                sum += values(i, k);
                ++count;
            }
        }
    }
    return count > 0 ? sum / static_cast<double>(count) : kNaN;
}

/*
 * One Monte Carlo replicate: generate data, embed, Z-estimate every row,
 * sample the requested generalized posteriors and score all five estimators.
 * SSE uses the single alignment W between the embedding and the truth, so
 * every estimator is compared in the embedding's coordinates.
 */
inline ReplicateResult run_replicate(const RunConfig& cfg, int replicate, unsigned threads = 1) {
    cfg.validate();
    ReplicateResult out;
    out.replicate = replicate;
    auto [truth, data] = generate_replicate_data(cfg, replicate);
    out.truth = truth;
    out.embedding = std::make_shared<const Embedding>(spectral_embed(data, cfg.d));
    out.alignment = align(out.embedding->x, truth.x0);
    out.aligned_truth = truth.x0 * out.alignment.transpose();

    const WeightFunction weight_fn = cfg.weight_function();
    auto weight = std::make_shared<const WeightFunction>(weight_fn);
    fit_z_rows(data.a, out.embedding, weight, cfg.theta_radius, threads, out.z, out.z_ok, out.sandwich);

    auto sse_of = [&](const Matrix& est) { return (est * out.alignment - truth.x0).squaredNorm(); };
    MethodSummary spectral_row{"spectral"};
    spectral_row.sse = sse_of(out.embedding->x);
    out.methods.push_back(spectral_row);
    MethodSummary z_row{"z"};
    z_row.sse = sse_of(out.z);
    for (char ok : out.z_ok) {
        z_row.row_failures += ok ? 0 : 1;
    }
    out.methods.push_back(z_row);

    ChainConfig chain = cfg.chain_config();
    chain.chains = 1;
    chain.seed = replicate_chain_seed(cfg.seed, replicate);
    for (CriterionKind kind : cfg.criteria()) {
        CriterionRows rows = sample_criterion_rows(data.a, out.embedding, kind, weight_fn, chain, cfg.theta_radius,
                                                   threads);
        Matrix centers = out.z;
        for (Index i = 0; i < centers.rows(); ++i) {
            if (!out.z_ok[static_cast<std::size_t>(i)]) {
                centers.row(i) = rows.mean.row(i);
            }
        }
        score_coverage(rows, out.aligned_truth, centers);
        MethodSummary summary{to_string(kind)};
        summary.sse = sse_of(rows.mean);
        summary.interval_coverage = finite_mean(rows.interval_covered);
        summary.ellipse_coverage = finite_mean(rows.ellipse_covered);
        summary.mean_acceptance = finite_mean(rows.acceptance);
        summary.row_failures = static_cast<int>(rows.failures.size());
        out.methods.push_back(summary);
        out.criteria.push_back(std::move(rows));
    }
    return out;
}

struct PairedTest {
    double mean_difference = kNaN; // mean of (first - second)
    double t_statistic = kNaN;
    double p_value = kNaN;         // one-sided, H1: mean difference > 0
    int pairs = 0;
};

/// Paired one-sided t-test of mean(first - second) > 0.
inline PairedTest paired_t_test(const std::vector<double>& first, const std::vector<double>& second) {
    require(first.size() == second.size(), "paired_t_test: samples must have equal length");
    PairedTest out;
    out.pairs = static_cast<int>(first.size());
    require(out.pairs >= 2, "paired_t_test: at least two pairs are required");
    const double m = static_cast<double>(first.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < first.size(); ++i) {
        mean += first[i] - second[i];
    }
    mean /= m;
    double ss = 0.0;
    for (std::size_t i = 0; i < first.size(); ++i) {
        const double diff = first[i] - second[i] - mean;
        ss += diff * diff;
    }
    const double sd = std::sqrt(ss / (m - 1.0));
    out.mean_difference = mean;
    if (sd == 0.0) {
        out.t_statistic = mean > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        out.p_value = mean > 0.0 ? 0.0 : 1.0;
        return out;
    }
    out.t_statistic = mean / (sd / std::sqrt(m));
    const boost::math::students_t_distribution<double> dist(m - 1.0);
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.t_statistic));
    return out;
}

struct ScenarioSummary {
    RunConfig config;
    std::vector<MethodSummary> rows;            // replicates.csv content
    std::vector<int> replicate_ids;             // replicate of each entry in `rows`
    std::map<std::string, std::vector<double>> vertex_coverage; // method -> per-row mean coverage
    std::map<std::string, std::vector<double>> vertex_ellipse;
    std::vector<std::pair<int, std::string>> failures;
    json summary;
};

inline std::string csv_number(double value) { return std::isfinite(value) ? format_double(value) : ""; }

inline json json_number(double value) { return std::isfinite(value) ? json(value) : json(nullptr); }

/*
 * Runs cfg.replicates replicates and writes into cfg.output_dir:
 *
 *   replicates.csv       replicate,method,sse,interval_coverage,ellipse_coverage,mean_acceptance,row_failures
 *   vertex_coverage.csv  method,row,interval_coverage,ellipse_coverage  (means over replicates)
 *   summary.json         config, replicate counts, failures, and per method mean_sse, overall_coverage,
 *                        overall_ellipse_coverage, mean_acceptance, per_vertex_coverage; plus the paired
 *                        test of spectral SSE against Z-estimator SSE
 *
 * Empty CSV cells (null in JSON) mark quantities that do not apply. A replicate
 * that throws is logged to stderr and counted; the run continues.
 */
inline ScenarioSummary run_scenario(const RunConfig& cfg, unsigned threads = 1, std::ostream* log = &std::cerr) {
    cfg.validate();
    ScenarioSummary out;
    out.config = cfg;

    std::vector<std::string> methods{"spectral", "z"};
    for (CriterionKind kind : cfg.criteria()) {
        methods.push_back(to_string(kind));
    }
    std::map<std::string, Vector> coverage_sum;
    std::map<std::string, Vector> coverage_count;
    std::map<std::string, Vector> ellipse_sum;
    std::map<std::string, Vector> ellipse_count;
    for (const auto& method : methods) {
        coverage_sum[method] = Vector::Zero(cfg.n);
        coverage_count[method] = Vector::Zero(cfg.n);
        ellipse_sum[method] = Vector::Zero(cfg.n);
        ellipse_count[method] = Vector::Zero(cfg.n);
    }

    for (int r = 0; r < cfg.replicates; ++r) {
        try {
            ReplicateResult rep = run_replicate(cfg, r, threads);
            for (const auto& m : rep.methods) {
                out.rows.push_back(m);
                out.replicate_ids.push_back(r);
            }
            for (const auto& rows : rep.criteria) {
                const std::string name = to_string(rows.kind);
                for (Index i = 0; i < cfg.n; ++i) {
                    double covered = 0.0;
                    bool finite = true;
                    for (Index k = 0; k < rows.interval_covered.cols(); ++k) {
                        finite = finite && std::isfinite(rows.interval_covered(i, k));
                        covered += rows.interval_covered(i, k);
                    }
                    if (finite) {
                        coverage_sum[name](i) += covered / static_cast<double>(rows.interval_covered.cols());
                        coverage_count[name](i) += 1.0;
                    }
                    if (std::isfinite(rows.ellipse_covered(i))) {
                        ellipse_sum[name](i) += rows.ellipse_covered(i);
                        ellipse_count[name](i) += 1.0;
                    }
                }
            }
        } catch (const std::exception& e) {
            out.failures.emplace_back(r, e.what());
            if (log != nullptr) {
                *log << "replicate " << r << " failed: " << e.what() << '\n';
            }
        }
    }

    for (const auto& method : methods) {
        std::vector<double> cov(static_cast<std::size_t>(cfg.n), kNaN);
        std::vector<double> ell(static_cast<std::size_t>(cfg.n), kNaN);
        for (Index i = 0; i < cfg.n; ++i) {
            if (coverage_count[method](i) > 0.0) {
                cov[static_cast<std::size_t>(i)] = coverage_sum[method](i) / coverage_count[method](i);
            }
            if (ellipse_count[method](i) > 0.0) {
                ell[static_cast<std::size_t>(i)] = ellipse_sum[method](i) / ellipse_count[method](i);
            }
        }
        out.vertex_coverage[method] = cov;
        out.vertex_ellipse[method] = ell;
    }

    // aggregate
    json summary;
    summary["config"] = cfg;
    summary["replicates_requested"] = cfg.replicates;
    summary["replicates_completed"] = cfg.replicates - static_cast<int>(out.failures.size());
    summary["replicates_failed"] = static_cast<int>(out.failures.size());
    json failures = json::array();
    for (const auto& [r, message] : out.failures) {
        failures.push_back({{"replicate", r}, {"message", message}});
    }
    summary["failures"] = failures;
    json method_json = json::object();
    std::map<std::string, std::vector<double>> sse_by_method;
    for (const auto& method : methods) {
        std::vector<double> sse_values;
        double cov_sum = 0.0;
        double ell_sum = 0.0;
        double acc_sum = 0.0;
        int cov_n = 0;
        int ell_n = 0;
        int acc_n = 0;
        int row_failures = 0;
        for (const auto& m : out.rows) {
            if (m.method != method) {
                continue;
            }
            sse_values.push_back(m.sse);
            row_failures += m.row_failures;
            if (std::isfinite(m.interval_coverage)) {
                cov_sum += m.interval_coverage;
                ++cov_n;
            }
            if (std::isfinite(m.ellipse_coverage)) {
                ell_sum += m.ellipse_coverage;
                ++ell_n;
            }
            if (std::isfinite(m.mean_acceptance)) {
                acc_sum += m.mean_acceptance;
                ++acc_n;
            }
        }
        double sse_mean = kNaN;
        if (!sse_values.empty()) {
            sse_mean = 0.0;
            for (double v : sse_values) {
                sse_mean += v;
            }
            sse_mean /= static_cast<double>(sse_values.size());
        }
        sse_by_method[method] = sse_values;
        json entry;
        entry["mean_sse"] = json_number(sse_mean);
        entry["overall_coverage"] = json_number(cov_n > 0 ? cov_sum / cov_n : kNaN);
        entry["overall_ellipse_coverage"] = json_number(ell_n > 0 ? ell_sum / ell_n : kNaN);
        entry["mean_acceptance"] = json_number(acc_n > 0 ? acc_sum / acc_n : kNaN);
        entry["row_failures"] = row_failures;
        json per_vertex = json::array();
        for (double v : out.vertex_coverage[method]) {
            per_vertex.push_back(json_number(v));
        }
        entry["per_vertex_coverage"] = per_vertex;
        method_json[method] = entry;
    }
    summary["methods"] = method_json;
    if (sse_by_method["spectral"].size() >= 2) {
        const PairedTest test = paired_t_test(sse_by_method["spectral"], sse_by_method["z"]);
        summary["sse_test"] = {{"comparison", "spectral - z"},
                               {"pairs", test.pairs},
                               {"mean_difference", json_number(test.mean_difference)},
                               {"t_statistic", json_number(test.t_statistic)},
                               {"p_value", json_number(test.p_value)}};
    } else {
        summary["sse_test"] = nullptr;
    }
    out.summary = summary;

    // files
    std::filesystem::create_directories(cfg.output_dir);
    const std::filesystem::path dir(cfg.output_dir);
    {
        std::ofstream csv(dir / "replicates.csv");
        if (!csv) {
            throw std::runtime_error("cannot write replicates.csv in '" + cfg.output_dir + "'");
        }
        csv << "replicate,method,sse,interval_coverage,ellipse_coverage,mean_acceptance,row_failures\n";
        for (std::size_t k = 0; k < out.rows.size(); ++k) {
            const auto& m = out.rows[k];
            csv << out.replicate_ids[k] << ',' << m.method << ',' << csv_number(m.sse) << ','
                << csv_number(m.interval_coverage) << ',' << csv_number(m.ellipse_coverage) << ','
                << csv_number(m.mean_acceptance) << ',' << m.row_failures << '\n';
        }
    }
    {
        std::ofstream csv(dir / "vertex_coverage.csv");
        if (!csv) {
            throw std::runtime_error("cannot write vertex_coverage.csv in '" + cfg.output_dir + "'");
        }
        csv << "method,row,interval_coverage,ellipse_coverage\n";
        for (const auto& method : methods) {
            for (Index i = 0; i < cfg.n; ++i) {
                const auto r = static_cast<std::size_t>(i);
                csv << method << ',' << i << ',' << csv_number(out.vertex_coverage[method][r]) << ','
                    << csv_number(out.vertex_ellipse[method][r]) << '\n';
            }
        }
    }
    {
        std::ofstream js(dir / "summary.json");
        if (!js) {
            throw std::runtime_error("cannot write summary.json in '" + cfg.output_dir + "'");
        }
        js << summary.dump(2) << '\n';
    }
    return out;
}

} // namespace eaee::pipeline

#endif
