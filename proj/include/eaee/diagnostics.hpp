#ifndef EAEE_DIAGNOSTICS_HPP
#define EAEE_DIAGNOSTICS_HPP

#include "eaee/common.hpp"
#include "eaee/sampler.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace eaee {

struct PsrfReport {
    Vector point_estimate; // one entry per coordinate
    Vector upper_ci;       // upper 97.5% limit (two-sided 95%)
    int chains_used = 0;
    Index length = 0;
    bool per_coordinate = true;

    double max_point() const { return point_estimate.maxCoeff(); }
    double max_upper() const { return upper_ci.maxCoeff(); }
};

/*
 * Gelman-Rubin potential scale reduction factor of one scalar quantity over
 * m >= 2 chains of common length L (no chain splitting).
 *
 *   W = mean of within-chain variances s_k^2,  B = L/(m-1) sum_k (mean_k - mean)^2
 *   point = sqrt(((L-1)/L) W + B/L) / sqrt(W)
 *   upper = sqrt((L-1)/L + F_{0.975}(m - 1, df_W) B / (L W)),  df_W = 2 W^2 / (var_k(s_k^2) / m)
 *
 * The upper limit treats B/W as F-distributed, the construction coda uses,
 * without coda's degrees-of-freedom inflation of the point estimate.
 */
inline std::pair<double, double> psrf_scalar(const std::vector<std::span<const double>>& chains) {
    const std::size_t m = chains.size();
    require(m >= 2, "gelman_rubin: at least two chains are required");
    const std::size_t len = chains.front().size();
    require(len >= 10, "gelman_rubin: chains must have at least 10 draws");
    for (const auto& chain : chains) {
        require(chain.size() == len, "gelman_rubin: chains must have equal length");
    }
    const double L = static_cast<double>(len);
    const double md = static_cast<double>(m);

    std::vector<double> means(m);
    std::vector<double> vars(m);
    for (std::size_t k = 0; k < m; ++k) {
        double mean = 0.0;
        for (double v : chains[k]) {
            mean += v;
        }
        mean /= L;
        double ss = 0.0;
        for (double v : chains[k]) {
            ss += (v - mean) * (v - mean);
        }
        means[k] = mean;
        vars[k] = ss / (L - 1.0);
    }
    double grand = 0.0;
    double w = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        grand += means[k];
        w += vars[k];
    }
    grand /= md;
    w /= md;
    if (!(w > 0.0)) {
        throw std::domain_error("gelman_rubin: zero within-chain variance");
    }
    double between = 0.0;
    double var_w = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        between += (means[k] - grand) * (means[k] - grand);
        var_w += (vars[k] - w) * (vars[k] - w);
    }
    between *= L / (md - 1.0);
    var_w = var_w / (md - 1.0) / md;

    const double fixed = (L - 1.0) / L;
    const double ratio = between / (L * w);
    const double point = std::sqrt(fixed + ratio);

    const double df_w = var_w > 0.0 ? std::min(2.0 * w * w / var_w, 1e9) : 1e9;
    const boost::math::fisher_f_distribution<double> f_dist(md - 1.0, df_w);
    const double upper = std::sqrt(fixed + boost::math::quantile(f_dist, 0.975) * ratio);
    return {point, upper};
}

/// Per-coordinate PSRF across chains of one row.
inline PsrfReport gelman_rubin(std::span<const RowPosterior> chains) {
    require(chains.size() >= 2, "gelman_rubin: at least two chains are required");
    const Index d = chains.front().draws.cols();
    PsrfReport report;
    report.point_estimate.resize(d);
    report.upper_ci.resize(d);
    report.chains_used = static_cast<int>(chains.size());
    report.length = chains.front().draws.rows();
    for (const auto& chain : chains) {
        require(chain.draws.cols() == d, "gelman_rubin: chains must share the dimension");
    }
    for (Index k = 0; k < d; ++k) {
        std::vector<std::span<const double>> columns;
        for (const auto& chain : chains) {
            columns.emplace_back(chain.draws.col(k).data(), static_cast<std::size_t>(chain.draws.rows()));
        }
        const auto [point, upper] = psrf_scalar(columns);
        report.point_estimate(k) = point;
        report.upper_ci(k) = upper;
    }
    return report;
}

inline std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

/*
 * Trace CSV: row_index,chain_id,iteration,criterion_value,coord_1..coord_d,
 * one line per stored draw, iteration counted from 0 after burn-in, numbers
 * printed with 17 significant digits.
 */
inline void trace_export(std::span<const RowPosterior> posteriors, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("trace_export: cannot open '" + path + "' for writing");
    }
    const Index d = posteriors.empty() ? 0 : posteriors.front().draws.cols();
    out << "row_index,chain_id,iteration,criterion_value";
    for (Index k = 0; k < d; ++k) {
        out << ",coord_" << k + 1;
    }
    out << '\n';
    for (const auto& post : posteriors) {
        require(post.draws.cols() == d, "trace_export: posteriors must share the dimension");
        for (Index it = 0; it < post.draws.rows(); ++it) {
            const double crit = static_cast<std::size_t>(it) < post.criterion_trace.size()
                                    ? post.criterion_trace[static_cast<std::size_t>(it)]
                                    : std::numeric_limits<double>::quiet_NaN();
            out << post.row << ',' << post.chain_id << ',' << it << ',' << format_double(crit);
            for (Index k = 0; k < d; ++k) {
                out << ',' << format_double(post.draws(it, k));
            }
            out << '\n';
        }
    }
    if (!out) {
        throw std::runtime_error("trace_export: write to '" + path + "' failed");
    }
}

/// Reads a trace CSV back; one RowPosterior per (row, chain) in order of first appearance.
inline std::vector<RowPosterior> trace_import(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("trace_import: cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("trace_import: missing header in '" + path + "'");
    }
    const Index columns = static_cast<Index>(std::count(line.begin(), line.end(), ',')) + 1;
    const Index d = columns - 4;
    require(d >= 0, "trace_import: malformed header");

    std::vector<std::pair<std::pair<Index, int>, std::vector<std::vector<double>>>> groups;
    std::map<std::pair<Index, int>, std::size_t> lookup;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            fields.push_back(std::stod(cell));
        }
        if (static_cast<Index>(fields.size()) != columns) {
            throw std::runtime_error("trace_import: wrong field count on line " + std::to_string(line_no));
        }
        const auto key = std::make_pair(static_cast<Index>(fields[0]), static_cast<int>(fields[1]));
        auto [it, inserted] = lookup.emplace(key, groups.size());
        if (inserted) {
            groups.push_back({key, {}});
        }
        groups[it->second].second.push_back(std::move(fields));
    }

    std::vector<RowPosterior> out;
    for (auto& [key, rows] : groups) {
        RowPosterior post;
        post.row = key.first;
        post.chain_id = key.second;
        post.draws.resize(static_cast<Index>(rows.size()), d);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            post.criterion_trace.push_back(rows[r][3]);
            for (Index k = 0; k < d; ++k) {
                post.draws(static_cast<Index>(r), k) = rows[r][static_cast<std::size_t>(4 + k)];
            }
        }
        out.push_back(std::move(post));
    }
    return out;
}

} // namespace eaee

#endif
