#ifndef EAEE_PIPELINE_NETWORK_HPP
#define EAEE_PIPELINE_NETWORK_HPP

#include "eaee/pipeline/config.hpp"
#include "eaee/pipeline/graph_io.hpp"
#include "eaee/pipeline/knn.hpp"
#include "eaee/pipeline/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace eaee::pipeline {

inline const std::vector<double>& default_v_sweep() {
    static const std::vector<double> sweep{0.005, 0.010, 0.015, 0.020};
    return sweep;
}

struct ClassificationRecord {
    double v = 0.0;
    int copy = 0;
    std::string method;
    double misclassification = 0.0;
};

struct NetworkSummary {
    std::vector<ClassificationRecord> records;
    std::vector<std::pair<std::string, std::string>> failures; // (v/copy tag, message)
    json summary;
};

/// Five feature matrices (spectral, z, and one posterior mean per criterion) for one contaminated copy.
inline std::vector<std::pair<std::string, Matrix>> network_features(const RunConfig& cfg, const Matrix& a,
                                                                    Index d, double v, unsigned threads,
                                                                    std::uint64_t chain_seed) {
    auto embedding = std::make_shared<const Embedding>(spectral_embed(a, d));
    const WeightFunction weight_fn = builtin_weight("network", v);
    auto weight = std::make_shared<const WeightFunction>(weight_fn);

    std::vector<std::pair<std::string, Matrix>> out;
    out.emplace_back("spectral", embedding->x);
    Matrix z;
    std::vector<char> ok;
    std::vector<Matrix> sandwich;
    fit_z_rows(a, embedding, weight, cfg.theta_radius, threads, z, ok, sandwich);
    out.emplace_back("z", z);

    ChainConfig chain = cfg.chain_config();
    chain.chains = 1;
    chain.seed = chain_seed;
    for (CriterionKind kind : cfg.criteria()) {
        CriterionRows rows = sample_criterion_rows(a, embedding, kind, weight_fn, chain, cfg.theta_radius, threads);
        out.emplace_back(to_string(kind), rows.mean);
    }
    return out;
}

/*
 * Noisy-network classification: for each v in the sweep and each of
 * cfg.replicates contaminated copies, embed with d = number of unique labels,
 * build the five estimators with the network weight at v, and score k-NN
 * misclassification of each. All methods of one copy share the same splits.
 *
 * Writes into cfg.output_dir:
 *   classification.csv           v,copy,method,misclassification
 *   classification_summary.json  config, d, v sweep, failures, and per v and
 *                                method the mean and count of error rates
 */
inline NetworkSummary run_network_pipeline(const RunConfig& cfg, const LabeledGraph& graph,
                                           const std::vector<double>& v_values = default_v_sweep(),
                                           const KnnOptions& knn = {}, unsigned threads = 1,
                                           std::ostream* log = &std::cerr) {
    require(graph.has_labels(), "run_network_pipeline: the graph has no vertex labels");
    require(static_cast<Index>(graph.labels.size()) == graph.adjacency.n(),
            "run_network_pipeline: label vector length must equal n");
    require(!v_values.empty(), "run_network_pipeline: empty v sweep");
    RunConfig checked = cfg;
    checked.n = graph.adjacency.n();
    checked.d = static_cast<Index>(graph.class_count());
    checked.validate();
    const Index d = checked.d;

    NetworkSummary out;
    for (std::size_t vi = 0; vi < v_values.size(); ++vi) {
        const double v = v_values[vi];
        require(v >= 0.0, "run_network_pipeline: v must be non-negative");
        for (int copy = 0; copy < cfg.replicates; ++copy) {
            try {
                Rng noise = Rng(cfg.seed, 1 + vi).split(static_cast<std::uint64_t>(copy));
                const ObservedMatrix noisy = contaminate(graph.adjacency, v, noise);
                const std::uint64_t chain_seed =
                    Rng::derive(cfg.seed, 0x200000000ULL + (static_cast<std::uint64_t>(vi) << 20) +
                                              static_cast<std::uint64_t>(copy));
                const auto features = network_features(checked, noisy.a, d, v, threads, chain_seed);
                for (const auto& [method, x] : features) {
                    Rng split_rng = Rng(cfg.seed, 0x300000000ULL + vi).split(static_cast<std::uint64_t>(copy));
                    out.records.push_back({v, copy, method, knn_classify(x, graph.labels, knn, split_rng)});
                }
            } catch (const std::exception& e) {
                const std::string tag = "v=" + format_double(v) + " copy=" + std::to_string(copy);
                out.failures.emplace_back(tag, e.what());
                if (log != nullptr) {
                    *log << tag << " failed: " << e.what() << '\n';
                }
            }
        }
    }

    json summary;
    summary["config"] = checked;
    summary["d"] = d;
    summary["v_values"] = v_values;
    summary["knn"] = {{"k", knn.k}, {"train_frac", knn.train_frac}, {"splits", knn.repeats}};
    json failures = json::array();
    for (const auto& [tag, message] : out.failures) {
        failures.push_back({{"run", tag}, {"message", message}});
    }
    summary["failures"] = failures;
    json results = json::array();
    for (double v : v_values) {
        std::map<std::string, std::pair<double, int>> acc;
        std::vector<std::string> order;
        for (const auto& rec : out.records) {
            if (rec.v != v) {
                continue;
            }
            if (acc.find(rec.method) == acc.end()) {
                order.push_back(rec.method);
            }
            acc[rec.method].first += rec.misclassification;
            acc[rec.method].second += 1;
        }
        for (const auto& method : order) {
            results.push_back({{"v", v},
                               {"method", method},
                               {"mean_misclassification", acc[method].first / acc[method].second},
                               {"copies", acc[method].second}});
        }
    }
    summary["results"] = results;
    out.summary = summary;

    std::filesystem::create_directories(cfg.output_dir);
    const std::filesystem::path dir(cfg.output_dir);
    {
        std::ofstream csv(dir / "classification.csv");
        if (!csv) {
            throw std::runtime_error("cannot write classification.csv in '" + cfg.output_dir + "'");
        }
        csv << "v,copy,method,misclassification\n";
        for (const auto& rec : out.records) {
            csv << format_double(rec.v) << ',' << rec.copy << ',' << rec.method << ','
                << format_double(rec.misclassification) << '\n';
        }
    }
    {
        std::ofstream js(dir / "classification_summary.json");
        if (!js) {
            throw std::runtime_error("cannot write classification_summary.json in '" + cfg.output_dir + "'");
        }
        js << summary.dump(2) << '\n';
    }
    return out;
}

} // namespace eaee::pipeline

#endif
