#ifndef EAEE_QUADRATURE_HPP
#define EAEE_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <numbers>

namespace eaee {

/// Nodes and weights of the N-point Gauss-Legendre rule on [-1, 1].
template <int N>
struct GaussLegendre {
    std::array<double, N> nodes{};
    std::array<double, N> weights{};

    GaussLegendre() {
        // Newton iteration on P_N from the Tricomi initial guesses.
        for (int k = 0; k < (N + 1) / 2; ++k) {
            double x = std::cos(std::numbers::pi * (k + 0.75) / (N + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = x;
                for (int m = 2; m <= N; ++m) {
                    const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) {
                    break;
                }
            }
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[k] = -x;
            nodes[N - 1 - k] = x;
            weights[k] = w;
            weights[N - 1 - k] = w;
        }
    }

    static const GaussLegendre& instance() {
        static const GaussLegendre rule;
        return rule;
    }

    /// Integral of f over [lo, hi].
    template <typename F>
    double integrate(F&& f, double lo, double hi) const {
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        double total = 0.0;
        for (int k = 0; k < N; ++k) {
            total += weights[k] * f(mid + half * nodes[k]);
        }
        return half * total;
    }
};

} // namespace eaee

#endif
