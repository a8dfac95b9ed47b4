// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "eaee/eaee.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace eaee;
using namespace eaee::pipeline;

namespace {

constexpr int kReplicates = 100;

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
    std::cout << "criterion " << std::setw(2) << id << " " << (pass ? "PASS" : "FAIL") << "  " << title << "  | "
              << detail << std::endl;
    failures += pass ? 0 : 1;
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct CoverageRun {
    std::map<std::string, std::vector<double>> coverage; // criterion -> per-replicate entrywise coverage
    std::vector<double> sse_spectral;
    std::vector<double> sse_z;
    std::map<std::string, std::pair<long, long>> near_z;      // rows meeting the mean-vs-Z bound, rows total
    std::map<std::string, std::pair<long, long>> var_ratio;   // rows with ratio in [0.7, 1.4], rows total
    int failed_replicates = 0;
    double seconds = 0.0;
};

CoverageRun coverage_run(const RunConfig& cfg, bool row_checks) {
    CoverageRun out;
    const auto start = std::chrono::steady_clock::now();
    for (int r = 0; r < cfg.replicates; ++r) {
        ReplicateResult rep;
        try {
            rep = run_replicate(cfg, r, worker_count());
        } catch (const std::exception& e) {
            std::cerr << "replicate " << r << " failed: " << e.what() << '\n';
            ++out.failed_replicates;
            continue;
        }
        out.sse_spectral.push_back(rep.method("spectral").sse);
        out.sse_z.push_back(rep.method("z").sse);
        for (const auto& rows : rep.criteria) {
            const std::string name = to_string(rows.kind);
            out.coverage[name].push_back(rep.method(name).interval_coverage);
            if (!row_checks) {
                continue;
            }
            for (Index i = 0; i < rep.z.rows(); ++i) {
                const auto ui = static_cast<std::size_t>(i);
                auto& nz = out.near_z[name];
                auto& vr = out.var_ratio[name];
                ++nz.second;
                ++vr.second;
                if (!rows.ok[ui] || !rep.z_ok[ui]) {
                    continue;
                }
                const Matrix& cov = rows.cov[ui];
                const double top = Eigen::SelfAdjointEigenSolver<Matrix>(cov).eigenvalues().maxCoeff();
                if ((rows.mean.row(i) - rep.z.row(i)).norm() <= 3.0 * std::sqrt(top)) {
                    ++nz.first;
                }
                if (!rep.sandwich[ui].size()) {
                    continue;
                }
                const double ratio = cov(0, 0) / rep.sandwich[ui](0, 0);
                if (ratio >= 0.7 && ratio <= 1.4) {
                    ++vr.first;
                }
            }
        }
        if ((r + 1) % 10 == 0) {
            std::cerr << "  " << cfg.scenario << ": " << r + 1 << "/" << cfg.replicates << " replicates, "
                      << fmt(seconds_since(start), 3) << " s\n";
        }
    }
    out.seconds = seconds_since(start);
    return out;
}

double mean_of(const std::vector<double>& v) {
    double total = 0.0;
    int count = 0;
    for (double x : v) {
        if (std::isfinite(x)) {
            total += x;
            ++count;
        }
    }
    return count > 0 ? total / count : std::numeric_limits<double>::quiet_NaN();
}

void coverage_criterion(int id, const std::string& title, const CoverageRun& run) {
    bool pass = run.failed_replicates == 0;
    std::string detail;
    for (const std::string name : {"M", "GMM", "ETEL"}) {
        const auto it = run.coverage.find(name);
        const double c = it == run.coverage.end() ? std::numeric_limits<double>::quiet_NaN() : mean_of(it->second);
        pass = pass && c >= 0.90 && c <= 0.99;
        detail += name + "=" + fmt(c) + " ";
    }
    detail += "band [0.90, 0.99]; " + std::to_string(run.failed_replicates) + " failed replicates; " +
              fmt(run.seconds, 4) + " s";
    report(id, title, pass, detail);
}

// ---- criterion 6 ----

void constant_weight_identity() {
    std::vector<std::pair<std::string, Matrix>> matrices;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng rng(seed);
        matrices.emplace_back("rdpg n=200 seed " + std::to_string(seed),
                              sample_rdpg(generate_latent_curve(200), rng).a);
    }
    {
        Rng rng(4);
        matrices.emplace_back("completion n=150", sample_matrix_completion(generate_latent_curve(150), 1.0, 0.6, rng).a);
    }
    {
        Rng rng(5);
        GroundTruth t;
        t.x0.resize(120, 2);
        for (Index i = 0; i < 120; ++i) {
            t.x0(i, 0) = 0.6 + 0.2 * std::sin(0.1 * i);
            t.x0(i, 1) = 0.2 * std::cos(0.07 * i);
        }
        Rng noise(6);
        matrices.emplace_back("rdpg d=2 n=120 + noise", contaminate(sample_rdpg(t, rng), 0.01, noise).a);
    }
    double worst = 0.0;
    long rows = 0;
    long failed = 0;
    auto weight = std::make_shared<const WeightFunction>(WeightFunction::constant());
    for (const auto& [name, a] : matrices) {
        const Index d = name.find("d=2") != std::string::npos ? 2 : 1;
        auto emb = std::make_shared<const Embedding>(spectral_embed(a, d));
        for (Index i = 0; i < a.rows(); ++i) {
            ++rows;
            try {
                const RowContext ctx = RowContext::from_matrix(a, i, emb, weight, 100.0);
                worst = std::max(worst, (z_estimate(ctx).x - emb->row(i)).cwiseAbs().maxCoeff());
            } catch (const std::exception&) {
                ++failed;
            }
        }
    }
    report(6, "constant weight: Z-estimate equals the embedding row", failed == 0 && worst <= 1e-8,
           "max |z - x~| = " + fmt(worst, 3) + " over " + std::to_string(rows) + " rows of " +
               std::to_string(matrices.size()) + " matrices, tol 1e-8; " + std::to_string(failed) + " failures");
}

// ---- criterion 7 ----

void etel_anchor() {
    Rng rng(71);
    const GroundTruth truth = generate_latent_curve(200);
    const ObservedMatrix data = sample_rdpg(truth, rng);
    auto emb = std::make_shared<const Embedding>(spectral_embed(data, 1));
    auto weight = std::make_shared<const WeightFunction>(WeightFunction::rdpg());
    const double n = 200.0;
    double worst_ll = 0.0;
    double worst_p = 0.0;
    int failed = 0;
    Rng pick(72);
    for (int k = 0; k < 20; ++k) {
        const Index row = static_cast<Index>(pick.below(200));
        try {
            const RowContext ctx = RowContext::from_matrix(data.a, row, emb, weight, 1.0);
            const Vector xhat = z_estimate(ctx).x;
            const EtelSolution sol = etel_dual(ctx, xhat);
            if (!sol.converged) {
                ++failed;
                continue;
            }
            worst_ll = std::max(worst_ll, std::abs(sol.log_likelihood + n * std::log(n)));
            worst_p = std::max(worst_p, (sol.probs.array() - 1.0 / n).abs().maxCoeff());
        } catch (const std::exception&) {
            ++failed;
        }
    }
    report(7, "ETEL at the Z-estimate: l = -n log n, p_ij = 1/n", failed == 0 && worst_ll <= 1e-6 && worst_p <= 1e-8,
           "20 rows, max |l + n log n| = " + fmt(worst_ll, 3) + " (tol 1e-6), max |p - 1/n| = " + fmt(worst_p, 3) +
               " (tol 1e-8)");
}

// ---- criterion 8 ----

template <typename F>
double golden_min(F f, double lo, double hi, double tol) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo;
    double b = hi;
    while (b - a > tol) {
        const double c = b - r * (b - a);
        const double d = a + r * (b - a);
        if (f(c) < f(d)) {
            b = d;
        } else {
            a = c;
        }
    }
    return 0.5 * (a + b);
}

void oracle_equivalences() {
    std::string detail;
    bool pass = true;

    Rng rng(81);
    const ObservedMatrix data = sample_rdpg(generate_latent_curve(200), rng);
    auto emb = std::make_shared<const Embedding>(spectral_embed(data, 1));

    // moment_jacobian vs central differences
    double jac_rel = 0.0;
    for (const auto& w : {WeightFunction::rdpg(), WeightFunction::completion(0.6), WeightFunction::network(0.01)}) {
        auto weight = std::make_shared<const WeightFunction>(w);
        for (Index row : {3, 57, 111, 180}) {
            const RowContext ctx = RowContext::from_matrix(data.a, row, emb, weight, 1.0);
            const Vector x = ctx.start() + Vector::Constant(1, 0.03);
            const double h = 1e-6 * (1.0 + x.norm());
            const double fd = (moment_sum(ctx, x + Vector::Constant(1, h)) - moment_sum(ctx, x - Vector::Constant(1, h)))(0) /
                              (2.0 * h);
            const double exact = moment_jacobian(ctx, x)(0, 0);
            jac_rel = std::max(jac_rel, std::abs(fd - exact) / std::abs(exact));
        }
    }
    pass = pass && jac_rel <= 1e-6;
    detail += "jacobian rel " + fmt(jac_rel, 2);

    // m_criterion vs adaptive Gauss-Kronrod
    double m_err = 0.0;
    {
        auto weight = std::make_shared<const WeightFunction>(WeightFunction::rdpg());
        for (Index row : {10, 100, 190}) {
            const RowContext ctx = RowContext::from_matrix(data.a, row, emb, weight, 1.0);
            const Vector x = ctx.start() * 0.9;
            const Vector t = ctx.xt() * x;
            double oracle = 0.0;
            for (Index j = 0; j < ctx.n(); ++j) {
                const double sj = std::max(ctx.s()(j), 1e-2);
                const double aj = ctx.a_row()(j);
                oracle += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                    [&](double u) { return (aj - u) / (sj * (1.0 - u)); }, 0.0, t(j), 15, 1e-14);
            }
            m_err = std::max(m_err, std::abs(m_criterion(ctx, x) - oracle));
        }
    }
    pass = pass && m_err <= 1e-9;
    detail += ", m_criterion abs " + fmt(m_err, 2);

    // etel_dual vs line search on the scalar dual
    double etel_err = 0.0;
    {
        Rng g_rng(82);
        for (int k = 0; k < 5; ++k) {
            Matrix g(30, 1);
            for (Index j = 0; j < 30; ++j) {
                g(j, 0) = g_rng.normal() + 0.3;
            }
            const double oracle = golden_min([&](double l) { return (g.array() * l).exp().mean(); }, -20.0, 20.0, 1e-12);
            const EtelSolution sol = etel_dual_moments(g);
            etel_err = std::max(etel_err, sol.converged ? std::abs(sol.lambda(0) - oracle) : 1.0);
        }
    }
    pass = pass && etel_err <= 1e-6;
    detail += ", etel lambda abs " + fmt(etel_err, 2);

    // chi-square quantile
    const double q = chi2_quantile(0.95, 1.0);
    pass = pass && std::abs(q - 3.8415) <= 1e-3;
    detail += ", chi2_0.95(1) = " + fmt(q, 6);

    // align vs a grid over rotations and reflections, refined by golden section
    double align_err = 0.0;
    {
        Rng a_rng(83);
        Matrix x0(50, 2);
        for (Index i = 0; i < 50; ++i) {
            x0(i, 0) = a_rng.normal();
            x0(i, 1) = a_rng.normal();
        }
        for (double angle : {0.4, 2.9, -1.3}) {
            Matrix q2(2, 2);
            q2 << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
            Matrix xhat = x0 * q2;
            for (Index i = 0; i < 50; ++i) {
                xhat(i, 0) += 0.05 * a_rng.normal();
                xhat(i, 1) += 0.05 * a_rng.normal();
            }
            double best = std::numeric_limits<double>::infinity();
            for (double reflect : {1.0, -1.0}) {
                const auto loss = [&](double th) {
                    Matrix w(2, 2);
                    w << std::cos(th), -reflect * std::sin(th), std::sin(th), reflect * std::cos(th);
                    return (xhat * w - x0).squaredNorm();
                };
                double start = 0.0;
                double start_val = std::numeric_limits<double>::infinity();
                for (int k = 0; k < 3600; ++k) {
                    const double th = 2.0 * std::numbers::pi * k / 3600.0;
                    if (loss(th) < start_val) {
                        start_val = loss(th);
                        start = th;
                    }
                }
                const double step = 2.0 * std::numbers::pi / 3600.0;
                best = std::min(best, loss(golden_min(loss, start - step, start + step, 1e-13)));
            }
            align_err = std::max(align_err, std::abs(sse(xhat, x0) - best));
        }
    }
    pass = pass && align_err <= 1e-6;
    detail += ", align sse abs " + fmt(align_err, 2);

    report(8, "oracle equivalences", pass, detail);
}

// ---- criterion 9 ----

void truncated_gaussian() {
    const double tau = 0.5;
    const double a = 1.0 / tau;
    const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi);
    const double mass = std::erf(a / std::numbers::sqrt2);
    const double truth = tau * tau * (1.0 - 2.0 * a * phi / mass);
    const LogTarget target = [&](const Vector& x) { return std::optional<double>(-x.squaredNorm() / (2.0 * tau * tau)); };
    ChainConfig cfg;
    cfg.samples = 20000;
    Rng rng(91);
    const RowPosterior post = metropolis_hastings(target, Vector::Zero(1), 1.0, cfg, rng);
    const double mean = posterior_mean(post)(0);
    const double var = posterior_cov(post)(0, 0);
    const double rel = std::abs(var / truth - 1.0);
    report(9, "sampler: truncated Gaussian", std::abs(mean) <= 0.02 && rel <= 0.05,
           "2e4 draws, mean " + fmt(mean, 3) + " (tol 0.02), variance " + fmt(var) + " vs " + fmt(truth) +
               " (rel err " + fmt(rel, 3) + ", tol 0.05)");
}

// ---- criterion 10 ----

void diagnostics() {
    Rng rng(101);
    const ObservedMatrix data = sample_rdpg(generate_latent_curve(200), rng);
    auto emb = std::make_shared<const Embedding>(spectral_embed(data, 1));
    ChainConfig cfg;
    cfg.chains = 4;
    cfg.seed = 102;
    double worst = 0.0;
    int failed = 0;
    const std::vector<Index> rows{0, 20, 50, 80, 100, 120, 150, 180, 199};
    for (CriterionKind kind : {CriterionKind::M, CriterionKind::GMM, CriterionKind::ETEL}) {
        auto weight = std::make_shared<const WeightFunction>(WeightFunction::rdpg());
        std::vector<std::vector<RowPosterior>> chains(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const RowContext ctx = RowContext::from_matrix(data.a, rows[r], emb, weight, 1.0);
            const Criterion crit = Criterion::make(kind, ctx);
            std::vector<std::optional<RowPosterior>> slots(4);
            parallel_for(4, worker_count(), [&](std::size_t c) {
                Rng stream = chain_stream(cfg.seed, rows[r], static_cast<int>(c));
                try {
                    slots[c] = mh_row(ctx, crit, 1.0, cfg, stream, static_cast<int>(c));
                } catch (const std::exception&) {
                }
            });
            for (auto& s : slots) {
                if (s) {
                    chains[r].push_back(std::move(*s));
                }
            }
            if (chains[r].size() != 4) {
                ++failed;
                continue;
            }
            worst = std::max(worst, gelman_rubin(chains[r]).max_point());
        }
    }

    // shifted chains: means 0 and 10, unit variance
    Rng srng(103);
    std::vector<RowPosterior> shifted(2);
    for (int k = 0; k < 2; ++k) {
        shifted[static_cast<std::size_t>(k)].draws.resize(2000, 1);
        for (Index i = 0; i < 2000; ++i) {
            shifted[static_cast<std::size_t>(k)].draws(i, 0) = 10.0 * k + srng.normal();
        }
    }
    const double shifted_psrf = gelman_rubin(shifted).max_point();
    report(10, "diagnostics: PSRF", failed == 0 && worst <= 1.05 && shifted_psrf > 1.1,
           "max point PSRF over " + std::to_string(rows.size()) + " rows x 3 criteria = " + fmt(worst) +
               " (tol 1.05); shifted chains " + fmt(shifted_psrf) + " (> 1.1)");
}

// ---- network pipeline (end-to-end run, beats chance) ----

void classification() {
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "eaee_acceptance_network";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    Rng rng(111);
    const Index n = 90;
    std::vector<int> labels;
    Matrix adj = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        labels.push_back(static_cast<int>(3 * i / n));
    }
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const bool same = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
            if (rng.bernoulli(same ? 0.5 : 0.05)) {
                adj(i, j) = adj(j, i) = 1.0;
            }
        }
    }
    save_edge_list(adj, (dir / "graph.edges").string());
    save_labels(labels, (dir / "graph.node_labels").string());
    const LabeledGraph g = load_edge_list((dir / "graph.edges").string());
    RunConfig cfg = scenario_defaults("file");
    cfg.replicates = 2;
    cfg.seed = 112;
    cfg.output_dir = (dir / "out").string();
    const NetworkSummary s = run_network_pipeline(cfg, g, default_v_sweep(), {5, 0.75, 20}, worker_count(), nullptr);
    double worst = 0.0;
    for (const auto& rec : s.records) {
        worst = std::max(worst, rec.misclassification);
    }
    const bool pass = s.failures.empty() && s.records.size() == default_v_sweep().size() * 2 * 5 && worst < 2.0 / 3.0;
    std::cout << "network     " << (pass ? "PASS" : "FAIL") << "  classification pipeline on a loaded edge list  | "
              << s.records.size() << " records, worst misclassification " << fmt(worst)
              << " vs chance 0.667" << std::endl;
    failures += pass ? 0 : 1;
}

void sse_criterion(const CoverageRun& run1) {
    const bool enough = run1.sse_spectral.size() >= 2;
    const PairedTest t = enough ? paired_t_test(run1.sse_spectral, run1.sse_z) : PairedTest{};
    const double ms = mean_of(run1.sse_spectral);
    const double mz = mean_of(run1.sse_z);
    report(3, "SSE: Z-estimator below spectral embedding", enough && mz < ms && t.p_value < 0.01,
           "mean SSE spectral " + fmt(ms, 6) + ", z " + fmt(mz, 6) + ", paired one-sided p = " + fmt(t.p_value, 3) +
               " (< 0.01), " + std::to_string(t.pairs) + " pairs");
}

void near_z_criterion(const CoverageRun& run1) {
    bool pass = true;
    std::string detail;
    for (const std::string name : {"M", "GMM", "ETEL"}) {
        const auto [hit, total] = run1.near_z.at(name);
        const double frac = static_cast<double>(hit) / static_cast<double>(total);
        pass = pass && frac >= 0.95;
        detail += name + "=" + fmt(frac) + " ";
    }
    report(4, "posterior mean within 3 posterior s.d. of the Z-estimate", pass, detail + "of rows (>= 0.95)");
}

void variance_ratio_criterion(const CoverageRun& run1) {
    bool pass = true;
    std::string detail;
    for (const std::string name : {"GMM", "ETEL"}) {
        const auto [hit, total] = run1.var_ratio.at(name);
        const double frac = static_cast<double>(hit) / static_cast<double>(total);
        pass = pass && frac >= 0.90;
        detail += name + "=" + fmt(frac) + " ";
    }
    report(5, "posterior / sandwich variance in [0.7, 1.4]", pass, detail + "of rows (>= 0.90)");
}

} // namespace

int main(int argc, char** argv) {
    // Optional arguments select criteria by id ("network" for the pipeline line); default is all.
    std::set<std::string> wanted(argv + 1, argv + argc);
    const auto run = [&](const std::string& id) { return wanted.empty() || wanted.count(id) == 1; };
    std::cout << "acceptance suite, " << worker_count() << " worker thread(s)" << std::endl;

    if (run("1") || run("3") || run("4") || run("5")) {
        RunConfig one = scenario_defaults("rdpg_curve");
        one.n = 200;
        one.replicates = kReplicates;
        one.seed = 2024;
        const CoverageRun run1 = coverage_run(one, true);
        if (run("1")) {
            coverage_criterion(1, "coverage, RDPG latent curve, n = 200, 100 replicates", run1);
        }
        if (run("3")) {
            sse_criterion(run1);
        }
        if (run("4")) {
            near_z_criterion(run1);
        }
        if (run("5")) {
            variance_ratio_criterion(run1);
        }
    }
    if (run("2")) {
        RunConfig two = scenario_defaults("completion");
        two.n = 150;
        two.p = 0.6;
        two.replicates = kReplicates;
        two.seed = 2025;
        coverage_criterion(2, "coverage, matrix completion, n = 150, p = 0.6, 100 replicates", coverage_run(two, false));
    }
    if (run("6")) {
        constant_weight_identity();
    }
    if (run("7")) {
        etel_anchor();
    }
    if (run("8")) {
        oracle_equivalences();
    }
    if (run("9")) {
        truncated_gaussian();
    }
    if (run("10")) {
        diagnostics();
    }
    if (run("network")) {
        classification();
    }

    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
