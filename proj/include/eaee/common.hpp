#ifndef EAEE_COMMON_HPP
#define EAEE_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace eaee {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a weight function (or a criterion built on it) is evaluated
/// outside its declared domain. `index` is the offending neighbour j, or -1.
class DomainError : public std::domain_error {
public:
    DomainError(const std::string& what, Index index = -1)
        : std::domain_error(what), index_(index) {}
    Index index() const noexcept { return index_; }

private:
    Index index_;
};

/// Iterative solver failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A matrix that must be inverted is (numerically) singular.
class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw std::invalid_argument(message);
    }
}

/// Ratio of extreme singular values; +inf for an exactly singular matrix.
inline double condition_number(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) {
        return 1.0;
    }
    const double smallest = sv(sv.size() - 1);
    if (smallest <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return sv(0) / smallest;
}

/// Condition number of a symmetric positive semidefinite matrix (eigenvalue ratio).
inline double spd_condition_number(const Matrix& m) {
    if (m.rows() == 1) {
        return m(0, 0) > 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    if (ev.size() == 0) {
        return 1.0;
    }
    if (!(ev(0) > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    return ev(ev.size() - 1) / ev(0);
}

} // namespace eaee

#endif
