// eaee command line: simulate | fit | classify | diagnose

#include "eaee/eaee.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace {

using eaee::Index;
using eaee::Matrix;
using eaee::pipeline::json;
using ordered_json = nlohmann::ordered_json; // status records lead with "status"
using eaee::pipeline::RunConfig;

/// Flags mirroring RunConfig; only flags given on the command line override the base config.
struct ConfigFlags {
    std::string config_path;
    std::optional<std::string> scenario;
    std::optional<Index> n;
    std::optional<Index> d;
    std::optional<double> p;
    std::optional<double> sigma;
    std::optional<double> v;
    std::optional<std::string> weight;
    std::optional<std::string> criterion;
    std::optional<double> theta_radius;
    std::optional<int> burnin;
    std::optional<int> samples;
    std::optional<double> proposal_scale;
    std::uint64_t seed = 0;
    std::optional<int> chains;
    std::optional<bool> adapt;
    std::optional<int> replicates;
    std::optional<std::string> output_dir;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());

    void attach(CLI::App* app, bool with_scenario) {
        app->add_option("--config", config_path, "JSON run configuration (flags override it)")
            ->check(CLI::ExistingFile);
        if (with_scenario) {
            app->add_option("--scenario", scenario, "rdpg_curve | completion");
        }
        app->add_option("--n", n, "matrix dimension");
        app->add_option("--d", d, "embedding rank");
        app->add_option("--p", p, "observation probability (completion)");
        app->add_option("--sigma", sigma, "noise standard deviation (completion)");
        app->add_option("--v", v, "contamination standard deviation / network weight parameter");
        app->add_option("--weight", weight, "constant | rdpg | completion | network | one_step");
        app->add_option("--criterion", criterion, "M | GMM | ETEL | all");
        app->add_option("--theta-radius", theta_radius, "radius of the parameter ball");
        app->add_option("--burnin", burnin, "burn-in iterations per chain");
        app->add_option("--samples", samples, "stored draws per chain");
        app->add_option("--proposal-scale", proposal_scale, "initial random-walk standard deviation");
        app->add_option("--seed", seed, "master seed")->required();
        app->add_option("--chains", chains, "chains per row");
        app->add_option("--adapt", adapt, "tune the proposal scale during burn-in (true/false)");
        app->add_option("--replicates", replicates, "Monte Carlo replicates or contaminated copies");
        app->add_option("--output-dir", output_dir, "directory for outputs");
        app->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    }

    RunConfig resolve(const std::string& default_scenario) const {
        RunConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            cfg = json::parse(in).get<RunConfig>();
            if (scenario && *scenario != cfg.scenario) {
                const RunConfig fresh = eaee::pipeline::scenario_defaults(*scenario);
                cfg.scenario = fresh.scenario;
            }
        } else {
            cfg = eaee::pipeline::scenario_defaults(scenario.value_or(default_scenario));
        }
        auto apply = [](auto& field, const auto& flag) {
            if (flag) {
                field = *flag;
            }
        };
        apply(cfg.n, n);
        apply(cfg.d, d);
        apply(cfg.p, p);
        apply(cfg.sigma, sigma);
        apply(cfg.v, v);
        apply(cfg.weight, weight);
        apply(cfg.criterion, criterion);
        apply(cfg.theta_radius, theta_radius);
        apply(cfg.burnin, burnin);
        apply(cfg.samples, samples);
        apply(cfg.proposal_scale, proposal_scale);
        apply(cfg.chains, chains);
        apply(cfg.adapt, adapt);
        apply(cfg.replicates, replicates);
        apply(cfg.output_dir, output_dir);
        cfg.seed = seed;
        return cfg;
    }
};

struct InputFlags {
    std::string input;
    std::string labels;
    int index_base = 1;
    Index n_hint = 0;

    void attach(CLI::App* app) {
        app->add_option("--input", input, "edge list file")->required()->check(CLI::ExistingFile);
        app->add_option("--labels", labels, "vertex label file (default: sibling .node_labels/.labels)")
            ->check(CLI::ExistingFile);
        app->add_option("--index-base", index_base, "vertex numbering base (0 or 1)");
        app->add_option("--n-hint", n_hint, "number of vertices (0: infer)");
    }

    eaee::pipeline::LabeledGraph load() const {
        std::optional<std::string> label_path;
        if (!labels.empty()) {
            label_path = labels;
        }
        return eaee::pipeline::load_edge_list(input, n_hint, index_base, label_path);
    }
};

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << j.dump(2) << '\n';
}

int cmd_simulate(const ConfigFlags& flags) {
    RunConfig cfg = flags.resolve("rdpg_curve");
    cfg.validate();
    std::filesystem::create_directories(cfg.output_dir);
    eaee::pipeline::save_config(cfg, (std::filesystem::path(cfg.output_dir) / "config.json").string());
    const auto result = eaee::pipeline::run_scenario(cfg, flags.threads);
    ordered_json status{{"status", "ok"},
                {"command", "simulate"},
                {"output_dir", cfg.output_dir},
                {"replicates_completed", result.summary["replicates_completed"]},
                {"replicates_failed", result.summary["replicates_failed"]}};
    std::cout << status.dump() << '\n';
    return 0;
}

int cmd_fit(const ConfigFlags& flags, const InputFlags& input, bool write_trace) {
    RunConfig cfg = flags.resolve("file");
    cfg.scenario = "file";
    const auto graph = input.load();
    cfg.n = graph.adjacency.n();
    cfg.validate();
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    eaee::pipeline::save_config(cfg, (dir / "config.json").string());

    const Matrix& a = graph.adjacency.a;
    auto embedding = std::make_shared<const eaee::Embedding>(eaee::spectral_embed(a, cfg.d));
    const eaee::WeightFunction weight_fn = cfg.weight_function();
    auto weight = std::make_shared<const eaee::WeightFunction>(weight_fn);

    Matrix z;
    std::vector<char> z_ok;
    std::vector<Matrix> sandwich;
    std::vector<std::string> z_errors;
    eaee::pipeline::fit_z_rows(a, embedding, weight, cfg.theta_radius, flags.threads, z, z_ok, sandwich, &z_errors);

    std::vector<std::pair<std::string, Matrix>> estimates{{"spectral", embedding->x}, {"z", z}};
    std::ofstream intervals(dir / "intervals.csv");
    intervals << "method,row,coord,lo,hi\n";
    json failures = json::array();
    for (std::size_t i = 0; i < z_errors.size(); ++i) {
        if (!z_errors[i].empty()) {
            failures.push_back({{"method", "z"}, {"row", i}, {"message", z_errors[i]}});
        }
    }
    eaee::ChainConfig chain = cfg.chain_config();
    std::vector<eaee::RowPosterior> traces;
    for (eaee::CriterionKind kind : cfg.criteria()) {
        eaee::PosteriorRun run =
            eaee::sample_all_rows(a, embedding, kind, weight_fn, chain, cfg.theta_radius, flags.threads);
        Matrix mean = embedding->x;
        for (const auto& post : run.posteriors) {
            if (post.chain_id != 0) {
                continue;
            }
            mean.row(post.row) = eaee::posterior_mean(post).transpose();
            const auto iv = eaee::entrywise_interval(post, 0.05);
            for (std::size_t k = 0; k < iv.size(); ++k) {
                intervals << eaee::to_string(kind) << ',' << post.row << ',' << k + 1 << ','
                          << eaee::format_double(iv[k].lo) << ',' << eaee::format_double(iv[k].hi) << '\n';
            }
        }
        for (const auto& f : run.failures) {
            failures.push_back({{"method", eaee::to_string(kind)}, {"row", f.row}, {"chain", f.chain},
                                {"message", f.message}});
        }
        if (write_trace) {
            traces.insert(traces.end(), run.posteriors.begin(), run.posteriors.end());
            eaee::trace_export(run.posteriors, (dir / ("trace_" + eaee::to_string(kind) + ".csv")).string());
        }
        estimates.emplace_back(eaee::to_string(kind), mean);
    }

    std::ofstream csv(dir / "estimates.csv");
    csv << "method,row";
    for (Index k = 0; k < cfg.d; ++k) {
        csv << ",coord_" << k + 1;
    }
    csv << '\n';
    for (const auto& [method, x] : estimates) {
        for (Index i = 0; i < x.rows(); ++i) {
            csv << method << ',' << i;
            for (Index k = 0; k < x.cols(); ++k) {
                csv << ',' << eaee::format_double(x(i, k));
            }
            csv << '\n';
        }
    }
    json summary{{"config", cfg}, {"n", cfg.n}, {"labels", graph.has_labels()}, {"failures", failures}};
    write_json(dir / "fit_summary.json", summary);
    std::cout << ordered_json{{"status", "ok"}, {"command", "fit"}, {"output_dir", cfg.output_dir},
                      {"row_failures", failures.size()}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_classify(const ConfigFlags& flags, const InputFlags& input, std::vector<double> v_values,
                 const eaee::pipeline::KnnOptions& knn) {
    RunConfig cfg = flags.resolve("file");
    cfg.scenario = "file";
    cfg.weight = "network";
    if (!flags.replicates) {
        cfg.replicates = 50;
    }
    if (v_values.empty()) {
        v_values = eaee::pipeline::default_v_sweep();
    }
    const auto graph = input.load();
    const auto result = eaee::pipeline::run_network_pipeline(cfg, graph, v_values, knn, flags.threads);
    std::cout << ordered_json{{"status", "ok"}, {"command", "classify"}, {"output_dir", cfg.output_dir},
                      {"records", result.records.size()}, {"failures", result.failures.size()}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_diagnose(const ConfigFlags& flags, const InputFlags& input, bool from_file, std::vector<Index> rows,
                 double init_jitter, bool write_trace) {
    RunConfig cfg = flags.resolve(from_file ? "file" : "rdpg_curve");
    if (!flags.chains) {
        cfg.chains = 4;
    }
    Matrix a;
    if (from_file) {
        cfg.scenario = "file";
        const auto graph = input.load();
        cfg.n = graph.adjacency.n();
        a = graph.adjacency.a;
    } else {
        cfg.validate();
        a = eaee::pipeline::generate_replicate_data(cfg, 0).second.a;
    }
    cfg.validate();
    eaee::require(cfg.chains >= 2, "diagnose: at least two chains are required");
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    eaee::pipeline::save_config(cfg, (dir / "config.json").string());

    auto embedding = std::make_shared<const eaee::Embedding>(eaee::spectral_embed(a, cfg.d));
    const eaee::WeightFunction weight_fn = cfg.weight_function();
    auto weight = std::make_shared<const eaee::WeightFunction>(weight_fn);
    if (rows.empty()) {
        for (Index i = 0; i < cfg.n; ++i) {
            rows.push_back(i);
        }
    }
    for (Index r : rows) {
        eaee::require(r >= 0 && r < cfg.n, "diagnose: row index out of range");
    }
    eaee::ChainConfig chain = cfg.chain_config();
    chain.init_jitter = init_jitter;

    std::ofstream psrf(dir / "psrf.csv");
    psrf << "criterion,row,coord,point_estimate,upper_ci\n";
    json per_criterion = json::object();
    json failures = json::array();
    for (eaee::CriterionKind kind : cfg.criteria()) {
        const std::size_t chains = static_cast<std::size_t>(chain.chains);
        std::vector<std::optional<eaee::RowPosterior>> slots(rows.size() * chains);
        std::vector<std::string> errors(slots.size());
        eaee::parallel_for(slots.size(), flags.threads, [&](std::size_t task) {
            const Index row = rows[task / chains];
            const int c = static_cast<int>(task % chains);
            try {
                eaee::RowContext ctx = eaee::RowContext::from_matrix(a, row, embedding, weight, cfg.theta_radius);
                const eaee::Criterion criterion = eaee::Criterion::make(kind, ctx);
                eaee::Rng rng = eaee::chain_stream(chain.seed, row, c);
                slots[task] = eaee::mh_row(ctx, criterion, cfg.theta_radius, chain, rng, c);
            } catch (const std::exception& e) {
                errors[task] = e.what();
            }
        });
        std::vector<eaee::RowPosterior> all;
        double max_point = 0.0;
        double max_upper = 0.0;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::vector<eaee::RowPosterior> group;
            for (std::size_t c = 0; c < chains; ++c) {
                auto& slot = slots[r * chains + c];
                if (slot) {
                    group.push_back(*slot);
                } else {
                    failures.push_back({{"criterion", eaee::to_string(kind)}, {"row", rows[r]}, {"chain", c},
                                        {"message", errors[r * chains + c]}});
                }
            }
            if (group.size() < 2) {
                continue;
            }
            try {
                const eaee::PsrfReport report = eaee::gelman_rubin(group);
                for (Index k = 0; k < report.point_estimate.size(); ++k) {
                    psrf << eaee::to_string(kind) << ',' << rows[r] << ',' << k + 1 << ','
                         << eaee::format_double(report.point_estimate(k)) << ','
                         << eaee::format_double(report.upper_ci(k)) << '\n';
                }
                max_point = std::max(max_point, report.max_point());
                max_upper = std::max(max_upper, report.max_upper());
            } catch (const std::exception& e) {
                failures.push_back({{"criterion", eaee::to_string(kind)}, {"row", rows[r]}, {"message", e.what()}});
            }
            all.insert(all.end(), group.begin(), group.end());
        }
        if (write_trace) {
            eaee::trace_export(all, (dir / ("trace_" + eaee::to_string(kind) + ".csv")).string());
        }
        per_criterion[eaee::to_string(kind)] = {{"max_point_estimate", max_point}, {"max_upper_ci", max_upper}};
    }
    json summary{{"config", cfg}, {"rows", rows.size()}, {"psrf", per_criterion}, {"failures", failures}};
    write_json(dir / "diagnose_summary.json", summary);
    std::cout << ordered_json{{"status", "ok"}, {"command", "diagnose"}, {"output_dir", cfg.output_dir},
                      {"psrf", per_criterion}}
                     .dump()
              << '\n';
    return 0;
}

void error_record(const std::string& type, const std::string& message, int code) {
    std::cerr << ordered_json{{"status", "error"}, {"error", {{"type", type}, {"message", message}, {"exit_code", code}}}}.dump()
              << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Eigenvector-assisted estimation and generalized posteriors for low-rank matrices"};
    app.require_subcommand(1);

    ConfigFlags sim_flags;
    auto* simulate = app.add_subcommand("simulate", "run a synthetic scenario harness");
    sim_flags.attach(simulate, true);

    ConfigFlags fit_flags;
    InputFlags fit_input;
    bool fit_trace = false;
    auto* fit = app.add_subcommand("fit", "fit every row of a matrix read from an edge list");
    fit_flags.attach(fit, false);
    fit_input.attach(fit);
    fit->add_flag("--trace", fit_trace, "write per-criterion trace CSV files");

    ConfigFlags cls_flags;
    InputFlags cls_input;
    std::vector<double> v_values;
    eaee::pipeline::KnnOptions knn;
    auto* classify = app.add_subcommand("classify", "noisy-network k-NN classification pipeline");
    cls_flags.attach(classify, false);
    cls_input.attach(classify);
    classify->add_option("--v-values", v_values, "contamination levels (default 0.005 0.010 0.015 0.020)");
    classify->add_option("--k", knn.k, "neighbours");
    classify->add_option("--train-frac", knn.train_frac, "training fraction per class");
    classify->add_option("--splits", knn.repeats, "random splits per copy");

    ConfigFlags diag_flags;
    InputFlags diag_input;
    std::vector<Index> diag_rows;
    double init_jitter = 0.0;
    bool diag_trace = false;
    auto* diagnose = app.add_subcommand("diagnose", "multi-chain Gelman-Rubin diagnostics");
    diag_flags.attach(diagnose, true);
    diagnose->add_option("--input", diag_input.input, "edge list file (default: synthetic scenario)")
        ->check(CLI::ExistingFile);
    diagnose->add_option("--labels", diag_input.labels, "vertex label file")->check(CLI::ExistingFile);
    diagnose->add_option("--index-base", diag_input.index_base, "vertex numbering base (0 or 1)");
    diagnose->add_option("--rows", diag_rows, "rows to diagnose (default: all)");
    diagnose->add_option("--init-jitter", init_jitter, "s.d. of starting-point jitter for chains after the first");
    diagnose->add_flag("--trace", diag_trace, "write per-criterion trace CSV files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_record("usage", e.what(), 2);
        return 2;
    }

    try {
        if (*simulate) {
            return cmd_simulate(sim_flags);
        }
        if (*fit) {
            return cmd_fit(fit_flags, fit_input, fit_trace);
        }
        if (*classify) {
            return cmd_classify(cls_flags, cls_input, v_values, knn);
        }
        if (*diagnose) {
            return cmd_diagnose(diag_flags, diag_input, !diag_input.input.empty(), diag_rows, init_jitter, diag_trace);
        }
    } catch (const std::invalid_argument& e) {
        error_record("invalid_argument", e.what(), 1);
        return 1;
    } catch (const eaee::DomainError& e) {
        error_record("domain_error", e.what(), 1);
        return 1;
    } catch (const eaee::ConvergenceError& e) {
        error_record("convergence_error", e.what(), 1);
        return 1;
    } catch (const eaee::SingularMatrixError& e) {
        error_record("singular_matrix", e.what(), 1);
        return 1;
    } catch (const json::exception& e) {
        error_record("config_error", e.what(), 1);
        return 1;
    } catch (const std::exception& e) {
        error_record("runtime_error", e.what(), 1);
        return 1;
    }
    return 1;
}
