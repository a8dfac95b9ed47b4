#ifndef EAEE_SPECTRAL_HPP
#define EAEE_SPECTRAL_HPP

#include "eaee/common.hpp"
#include "eaee/model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <sstream>
#include <vector>

namespace eaee {

struct EigenPairs {
    Vector values;  // sorted by |lambda| descending
    Matrix vectors; // n x d, orthonormal columns
};

/*
 * Top-d eigenpairs of a symmetric matrix, ranked by magnitude.
 *
 * Full dense decomposition (Householder tridiagonalisation + implicit QR) and
 * a selection step. Each eigenvector's sign is fixed so that its entries sum
 * to a non-negative value (ties broken by the largest-magnitude entry), which
 * makes embeddings of RDPG-type data come out in the positive orthant and keeps
 * results reproducible across solver versions.
 */
inline EigenPairs top_eigen(const Matrix& a, Index d) {
    require(a.rows() == a.cols(), "top_eigen: matrix must be square");
    const Index n = a.rows();
    require(d >= 1 && d <= n, "top_eigen: rank must satisfy 1 <= d <= n");
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12) {
        std::ostringstream msg;
        msg << "top_eigen: matrix is not symmetric (max |A_ij - A_ji| = " << asym << ")";
        throw std::invalid_argument(msg.str());
    }

    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("top_eigen: symmetric eigensolver failed to converge");
    }
    const Vector& values = solver.eigenvalues();

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index lhs, Index rhs) {
        return std::abs(values(lhs)) > std::abs(values(rhs));
    });

    EigenPairs out;
    out.values.resize(d);
    out.vectors.resize(n, d);
    for (Index k = 0; k < d; ++k) {
        const Index src = order[static_cast<std::size_t>(k)];
        out.values(k) = values(src);
        Vector u = solver.eigenvectors().col(src);
        const double total = u.sum();
        Index argmax = 0;
        u.cwiseAbs().maxCoeff(&argmax);
        const bool flip = std::abs(total) > 1e-10 * std::sqrt(static_cast<double>(n))
                              ? total < 0.0
                              : u(argmax) < 0.0;
        out.vectors.col(k) = flip ? Vector(-u) : u;
    }
    return out;
}

/// Spectral embedding X~ = U_A S_A^{1/2} together with the retained eigenvalues.
struct Embedding {
    Matrix x;
    Vector eigenvalues;

    Index n() const { return x.rows(); }
    Index rank() const { return x.cols(); }
    Vector row(Index i) const { return x.row(i).transpose(); }

    /// U_A recovered as X~ diag(lambda)^{-1/2}.
    Matrix eigenvectors() const {
        return x * eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
    }
};

inline Embedding spectral_embed(const Matrix& a, Index d) {
    EigenPairs pairs = top_eigen(a, d);
    for (Index k = 0; k < d; ++k) {
        if (!(pairs.values(k) > 0.0)) {
            std::ostringstream msg;
            msg << "spectral_embed: indefinite top spectrum, eigenvalue " << k + 1 << " is "
                << pairs.values(k);
            throw std::domain_error(msg.str());
        }
    }
    Embedding out;
    out.eigenvalues = pairs.values;
    out.x = pairs.vectors * pairs.values.cwiseSqrt().asDiagonal();
    return out;
}

inline Embedding spectral_embed(const ObservedMatrix& a, Index d) { return spectral_embed(a.a, d); }

/*
 * Orthogonal W minimising ||xhat W - xref||_F (orthogonal Procrustes):
 * W = U V' from the SVD xhat' xref = U S V'.
 */
inline Matrix align(const Matrix& xhat, const Matrix& xref) {
    require(xhat.rows() == xref.rows() && xhat.cols() == xref.cols(),
            "align: matrices must have the same shape");
    const Matrix cross = xhat.transpose() * xref;
    Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || !(sv(0) > 0.0) || sv(sv.size() - 1) <= 1e-12 * sv(0)) {
        throw SingularMatrixError("align: cross-product matrix is rank deficient");
    }
    return svd.matrixU() * svd.matrixV().transpose();
}

/// Sum of squared errors after optimal orthogonal alignment of xhat onto xref.
inline double sse(const Matrix& xhat, const Matrix& xref) {
    const Matrix w = align(xhat, xref);
    return (xhat * w - xref).squaredNorm();
}

/// max_i ||row_i(xhat W - xref)||_2 after Procrustes alignment.
inline double two_to_infinity_error(const Matrix& xhat, const Matrix& xref) {
    const Matrix w = align(xhat, xref);
    return (xhat * w - xref).rowwise().norm().maxCoeff();
}

} // namespace eaee

#endif
