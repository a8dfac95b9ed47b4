#ifndef EAEE_PIPELINE_CONFIG_HPP
#define EAEE_PIPELINE_CONFIG_HPP

#include "eaee/criteria.hpp"
#include "eaee/sampler.hpp"
#include "eaee/weight.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <string>
#include <vector>

namespace eaee::pipeline {

using json = nlohmann::json;

/*
 * Run configuration shared by the harness and the CLI. Its JSON form has
 * exactly these keys:
 *
 *   scenario        "rdpg_curve" | "completion" | "file"
 *   n, d            matrix dimension and embedding rank
 *   p, sigma        completion: observation probability, noise s.d.
 *   v               contamination s.d. (network weight parameter)
 *   weight          "constant" | "rdpg" | "completion" | "network" | "one_step"
 *   criterion       "M" | "GMM" | "ETEL" | "all"
 *   theta_radius    radius of the parameter ball
 *   burnin, samples, proposal_scale, seed, chains, adapt   chain settings
 *   replicates      Monte Carlo replicates (or contamination copies)
 *   output_dir      directory for CSV/JSON outputs
 *
 * Missing keys keep their defaults; unknown keys are rejected.
 */
struct RunConfig {
    std::string scenario = "rdpg_curve";
    Index n = 800;
    Index d = 1;
    double p = 0.6;
    double sigma = 1.0;
    double v = 0.0;
    std::string weight = "rdpg";
    std::string criterion = "all";
    double theta_radius = 1.0;
    int burnin = 1000;
    int samples = 2000;
    double proposal_scale = 0.05;
    std::uint64_t seed = 1;
    int chains = 1;
    bool adapt = true;
    int replicates = 1;
    std::string output_dir = "eaee-out";

    bool operator==(const RunConfig&) const = default;

    ChainConfig chain_config() const {
        ChainConfig cfg;
        cfg.burnin = burnin;
        cfg.samples = samples;
        cfg.proposal_scale = proposal_scale;
        cfg.seed = seed;
        cfg.chains = chains;
        cfg.adapt = adapt;
        return cfg;
    }

    /// Parameter handed to builtin_weight: p for completion, v for network.
    WeightFunction weight_function() const {
        if (weight == "completion") {
            return builtin_weight(weight, p);
        }
        if (weight == "network") {
            return builtin_weight(weight, v);
        }
        return builtin_weight(weight);
    }

    std::vector<CriterionKind> criteria() const {
        if (criterion == "all") {
            return {CriterionKind::M, CriterionKind::GMM, CriterionKind::ETEL};
        }
        return {criterion_from_string(criterion)};
    }

    void validate() const {
        static const std::set<std::string> scenarios{"rdpg_curve", "completion", "file"};
        static const std::set<std::string> weights{"constant", "rdpg", "completion", "network", "one_step"};
        require(scenarios.count(scenario) == 1, "config: unknown scenario '" + scenario + "'");
        require(weights.count(weight) == 1, "config: unknown weight '" + weight + "'");
        if (criterion != "all") {
            criterion_from_string(criterion);
        }
        require(n >= 2, "config: n must be at least 2");
        require(d >= 1 && d <= n, "config: d must satisfy 1 <= d <= n");
        require(p > 0.0 && p <= 1.0, "config: p must lie in (0, 1]");
        require(sigma >= 0.0, "config: sigma must be non-negative");
        require(v >= 0.0, "config: v must be non-negative");
        require(theta_radius > 0.0, "config: theta_radius must be positive");
        require(replicates >= 1, "config: replicates must be positive");
        require(!output_dir.empty(), "config: output_dir must not be empty");
        chain_config().validate();
    }
};

/// Defaults for the two synthetic scenarios and for file input.
inline RunConfig scenario_defaults(const std::string& scenario) {
    RunConfig cfg;
    cfg.scenario = scenario;
    if (scenario == "rdpg_curve") {
        cfg.n = 800;
        cfg.weight = "rdpg";
        cfg.theta_radius = 1.0;
    } else if (scenario == "completion") {
        cfg.n = 400;
        cfg.p = 0.6;
        cfg.sigma = 1.0;
        cfg.weight = "completion";
        cfg.theta_radius = 1.2;
    } else if (scenario == "file") {
        cfg.weight = "network";
    } else {
        throw std::invalid_argument("unknown scenario '" + scenario + "'");
    }
    return cfg;
}

inline void to_json(json& j, const RunConfig& c) {
    j = json{{"scenario", c.scenario},
             {"n", c.n},
             {"d", c.d},
             {"p", c.p},
             {"sigma", c.sigma},
             {"v", c.v},
             {"weight", c.weight},
             {"criterion", c.criterion},
             {"theta_radius", c.theta_radius},
             {"burnin", c.burnin},
             {"samples", c.samples},
             {"proposal_scale", c.proposal_scale},
             {"seed", c.seed},
             {"chains", c.chains},
             {"adapt", c.adapt},
             {"replicates", c.replicates},
             {"output_dir", c.output_dir}};
}

inline void from_json(const json& j, RunConfig& c) {
    static const std::set<std::string> keys{"scenario", "n",       "d",         "p",          "sigma", "v",
                                            "weight",   "criterion", "theta_radius", "burnin", "samples",
                                            "proposal_scale", "seed", "chains", "adapt", "replicates", "output_dir"};
    require(j.is_object(), "config: JSON document must be an object");
    for (const auto& item : j.items()) {
        require(keys.count(item.key()) == 1, "config: unknown key '" + item.key() + "'");
    }
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) {
            j.at(key).get_to(field);
        }
    };
    get("scenario", c.scenario);
    get("n", c.n);
    get("d", c.d);
    get("p", c.p);
    get("sigma", c.sigma);
    get("v", c.v);
    get("weight", c.weight);
    get("criterion", c.criterion);
    get("theta_radius", c.theta_radius);
    get("burnin", c.burnin);
    get("samples", c.samples);
    get("proposal_scale", c.proposal_scale);
    get("seed", c.seed);
    get("chains", c.chains);
    get("adapt", c.adapt);
    get("replicates", c.replicates);
    get("output_dir", c.output_dir);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file '" + path + "'");
    }
    json j = json::parse(in);
    RunConfig cfg = j.get<RunConfig>();
    cfg.validate();
    return cfg;
}

inline void save_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    out << json(cfg).dump(2) << '\n';
}

} // namespace eaee::pipeline

#endif
