#ifndef EAEE_TESTS_FIXTURES_HPP
#define EAEE_TESTS_FIXTURES_HPP

#include "eaee/estimator.hpp"
#include "eaee/model.hpp"
#include "eaee/spectral.hpp"
#include "eaee/weight.hpp"

#include <memory>

namespace fixtures {

using namespace eaee;

inline std::shared_ptr<const Embedding> make_embedding(const Matrix& x) {
    Embedding emb;
    emb.x = x;
    emb.eigenvalues = x.colwise().squaredNorm().transpose();
    return std::make_shared<const Embedding>(emb);
}

inline RowContext context(const Matrix& x, const Vector& a_row, Index row, const WeightFunction& w,
                          double radius = 10.0) {
    return RowContext(row, a_row, make_embedding(x), std::make_shared<const WeightFunction>(w), radius);
}

/// n = 2, d = 1, A-row (0.5, 0.25), x~ = (1, 0.5)', row 0.
inline RowContext tiny(const WeightFunction& w = WeightFunction::constant()) {
    Matrix x(2, 1);
    x << 1.0, 0.5;
    Vector a(2);
    a << 0.5, 0.25;
    return context(x, a, 0, w);
}

struct Draw {
    GroundTruth truth;
    ObservedMatrix data;
    std::shared_ptr<const Embedding> embedding;
};

/// One RDPG draw from the latent curve.
inline Draw rdpg_draw(Index n, std::uint64_t seed) {
    Draw d;
    d.truth = generate_latent_curve(n);
    Rng rng(seed);
    d.data = sample_rdpg(d.truth, rng);
    d.embedding = std::make_shared<const Embedding>(spectral_embed(d.data, 1));
    return d;
}

inline RowContext row_context(const Draw& d, Index row, const WeightFunction& w, double radius = 1.0) {
    return RowContext::from_matrix(d.data.a, row, d.embedding, std::make_shared<const WeightFunction>(w), radius);
}

} // namespace fixtures

#endif
