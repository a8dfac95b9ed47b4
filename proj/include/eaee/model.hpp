#ifndef EAEE_MODEL_HPP
#define EAEE_MODEL_HPP

#include "eaee/common.hpp"
#include "eaee/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace eaee {

/// Latent factor matrix X0 (n x d) and the scale factor rho in (0, 1].
struct GroundTruth {
    Matrix x0;
    double rho = 1.0;

    Index n() const { return x0.rows(); }
    Index d() const { return x0.cols(); }
    Matrix signal() const { return rho * x0 * x0.transpose(); }
};

/// Symmetric n x n data matrix.
struct ObservedMatrix {
    Matrix a;

    Index n() const { return a.rows(); }
};

/// Scenario I latent curve f(t) = 0.1 + 0.8 sin(pi t) at n equidistant points of [0, 1].
inline GroundTruth generate_latent_curve(Index n) {
    require(n >= 2, "generate_latent_curve: n must be at least 2");
    GroundTruth truth;
    truth.x0.resize(n, 1);
    for (Index i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        truth.x0(i, 0) = 0.1 + 0.8 * std::sin(std::numbers::pi * t);
    }
    truth.rho = 1.0;
    return truth;
}

/// A_ij ~ Bernoulli(rho x_i' x_j) independently for i <= j (diagonal included), A_ji = A_ij.
inline ObservedMatrix sample_rdpg(const GroundTruth& truth, Rng& rng) {
    const Matrix prob = truth.signal();
    const Index n = truth.n();
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
            const double p = prob(i, j);
            if (!(p >= 0.0 && p <= 1.0)) {
                std::ostringstream msg;
                msg << "sample_rdpg: edge probability " << p << " at (" << i << ", " << j
                    << ") is outside [0, 1]";
                throw std::invalid_argument(msg.str());
            }
        }
    }

    ObservedMatrix out{Matrix::Zero(n, n)};
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
            const double value = rng.bernoulli(prob(i, j)) ? 1.0 : 0.0;
            out.a(i, j) = value;
            out.a(j, i) = value;
        }
    }
    return out;
}

/*
 * Symmetric noisy matrix completion: A* = rho X0 X0' + E with E_ij ~ N(0, sigma^2)
 * on the upper triangle, each entry observed with probability p and rescaled,
 * A_ij = z_ij A*_ij / p. Per upper-triangle entry the noise draw precedes the
 * mask draw.
 */
inline ObservedMatrix sample_matrix_completion(const GroundTruth& truth, double sigma, double p,
                                               Rng& rng) {
    require(p > 0.0 && p <= 1.0, "sample_matrix_completion: p must lie in (0, 1]");
    require(sigma >= 0.0, "sample_matrix_completion: sigma must be non-negative");
    const Matrix signal = truth.signal();
    const Index n = truth.n();
    ObservedMatrix out{Matrix::Zero(n, n)};
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
            const double full = signal(i, j) + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
            const bool observed = p >= 1.0 ? true : rng.bernoulli(p);
            const double value = observed ? full / p : 0.0;
            out.a(i, j) = value;
            out.a(j, i) = value;
        }
    }
    return out;
}

/// Adds symmetric N(0, v^2) noise (upper triangle i.i.d., diagonal included).
inline ObservedMatrix contaminate(const ObservedMatrix& input, double v, Rng& rng) {
    require(v >= 0.0, "contaminate: noise standard deviation must be non-negative");
    ObservedMatrix out = input;
    if (v == 0.0) {
        return out;
    }
    const Index n = input.n();
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
            const double noise = v * rng.normal();
            out.a(i, j) += noise;
            if (j != i) {
                out.a(j, i) = out.a(i, j);
            }
        }
    }
    return out;
}

} // namespace eaee

#endif
