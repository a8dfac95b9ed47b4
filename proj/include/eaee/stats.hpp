#ifndef EAEE_STATS_HPP
#define EAEE_STATS_HPP

#include "eaee/common.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace eaee {

inline double chi2_cdf(double x, double df) {
    require(df > 0.0, "chi2_cdf: degrees of freedom must be positive");
    return x <= 0.0 ? 0.0 : boost::math::cdf(boost::math::chi_squared_distribution<double>(df), x);
}

inline double chi2_quantile(double prob, double df) {
    require(prob > 0.0 && prob < 1.0, "chi2_quantile: probability must lie in (0, 1)");
    require(df >= 1.0, "chi2_quantile: degrees of freedom must be at least 1");
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), prob);
}

/*
 * Sample quantile with linear interpolation between order statistics
 * (Hyndman & Fan type 7): h = (N - 1) q, x_(floor h) + frac(h) (x_(floor h + 1) - x_(floor h)),
 * zero-based order statistics.
 */
inline double sample_quantile(std::vector<double> values, double q) {
    require(!values.empty(), "sample_quantile: no values");
    require(q >= 0.0 && q <= 1.0, "sample_quantile: q must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Column means of a samples x d matrix.
inline Vector column_mean(const Matrix& draws) { return draws.colwise().mean().transpose(); }

/// Unbiased sample covariance of the rows.
inline Matrix column_covariance(const Matrix& draws) {
    require(draws.rows() >= 2, "column_covariance: at least two rows are required");
    const Matrix centered = draws.rowwise() - draws.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(draws.rows() - 1);
}

} // namespace eaee

#endif
