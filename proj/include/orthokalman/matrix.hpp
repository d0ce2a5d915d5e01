#pragma once

// Dense kernel used by the filter: storage types, Householder triangularization
// applied jointly to companion blocks and a right-hand side, Cholesky
// factorization and triangular solves.
//
// Matrices are Eigen::MatrixXd, stored column-major. Nothing outside this header
// relies on the storage order.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "orthokalman/errors.hpp"

namespace orthokalman {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Result of triangularize(). `companions` and `rhs` are the full transformed
/// inputs; callers split them by row range.
struct Triangularized {
    Matrix r_top;       // min(p, q) x q, upper triangular (trapezoidal if p < q)
    Matrix r_residual;  // (p - q) x q when p > q, zero up to roundoff
    std::vector<Matrix> companions;
    Vector rhs;
};

namespace detail {

inline std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Applies I - beta v v^T to the trailing rows of `block`, starting at `row`.
template <typename Block>
void reflect_rows(Block&& block, const Vector& v, double beta, Index row) {
    if (block.cols() == 0) {
        return;
    }
    auto tail = block.bottomRows(block.rows() - row);
    Eigen::RowVectorXd w = v.transpose() * tail;
    tail.noalias() -= (beta * v) * w;
}

}  // namespace detail

/// Orthogonally reduces `stacked` (p x q) to upper triangular form with
/// Householder reflections, applying the same transformation to every companion
/// block and to `rhs`. The transformation itself is not kept.
inline Triangularized triangularize(Matrix stacked, std::vector<Matrix> companions, Vector rhs) {
    const Index p = stacked.rows();
    const Index q = stacked.cols();
    if (p < 1 || q < 1) {
        throw DimensionError("triangularize: empty block " + detail::shape(stacked));
    }
    for (const Matrix& c : companions) {
        if (c.rows() != p) {
            throw DimensionError("triangularize: companion has " + std::to_string(c.rows()) +
                                 " rows, expected " + std::to_string(p));
        }
    }
    if (rhs.size() != p) {
        throw DimensionError("triangularize: right-hand side has length " +
                             std::to_string(rhs.size()) + ", expected " + std::to_string(p));
    }

    const Index steps = std::min(p - 1, q);
    Vector v;
    for (Index j = 0; j < steps; ++j) {
        const Index len = p - j;
        auto x = stacked.col(j).tail(len);
        const double norm = x.norm();
        if (norm == 0.0) {
            continue;
        }
        const double alpha = x(0) > 0.0 ? -norm : norm;
        v = x;
        v(0) -= alpha;
        const double vv = v.squaredNorm();
        if (vv == 0.0) {
            continue;
        }
        const double beta = 2.0 / vv;

        stacked(j, j) = alpha;
        stacked.col(j).tail(len - 1).setZero();
        if (j + 1 < q) {
            detail::reflect_rows(stacked.rightCols(q - j - 1), v, beta, j);
        }
        for (Matrix& c : companions) {
            detail::reflect_rows(c, v, beta, j);
        }
        const double s = beta * v.dot(rhs.tail(len));
        rhs.tail(len) -= s * v;
    }

    Triangularized out;
    const Index top = std::min(p, q);
    out.r_top = stacked.topRows(top).triangularView<Eigen::Upper>();
    out.r_residual = stacked.bottomRows(p - top);
    out.companions = std::move(companions);
    out.rhs = std::move(rhs);
    return out;
}

/// Same as above without a right-hand side.
inline Triangularized triangularize(Matrix stacked, std::vector<Matrix> companions = {}) {
    Vector rhs = Vector::Zero(stacked.rows());
    return triangularize(std::move(stacked), std::move(companions), std::move(rhs));
}

/// Upper triangular U with U^T U = spd.
inline Matrix cholesky_upper(const Matrix& spd) {
    const Index n = spd.rows();
    if (spd.cols() != n) {
        throw DimensionError("cholesky_upper: matrix is " + detail::shape(spd) + ", not square");
    }
    Matrix u = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        double d = spd(j, j) - u.col(j).head(j).squaredNorm();
        if (!(d > 0.0)) {
            throw NotPositiveDefinite(
                "matrix is not positive definite (pivot " + std::to_string(j) + ")", j);
        }
        const double ujj = std::sqrt(d);
        u(j, j) = ujj;
        for (Index k = j + 1; k < n; ++k) {
            u(j, k) = (spd(j, k) - u.col(j).head(j).dot(u.col(k).head(j))) / ujj;
        }
    }
    return u;
}

namespace detail {

inline void check_triangular_system(const Matrix& u, Index rhs_rows, const char* who) {
    if (u.rows() != u.cols()) {
        throw DimensionError(std::string(who) + ": triangular factor is " + shape(u) +
                             ", not square");
    }
    if (rhs_rows != u.rows()) {
        throw DimensionError(std::string(who) + ": right-hand side has " +
                             std::to_string(rhs_rows) + " rows, expected " +
                             std::to_string(u.rows()));
    }
    for (Index i = 0; i < u.rows(); ++i) {
        if (u(i, i) == 0.0) {
            throw SingularMatrix(std::string(who) + ": zero diagonal entry at " +
                                     std::to_string(i),
                                 i);
        }
    }
}

}  // namespace detail

/// Back substitution: x with U x = rhs, U upper triangular.
inline Matrix solve_upper_triangular(const Matrix& u, Matrix rhs) {
    detail::check_triangular_system(u, rhs.rows(), "solve_upper_triangular");
    u.triangularView<Eigen::Upper>().solveInPlace(rhs);
    return rhs;
}

inline Vector solve_upper_triangular(const Matrix& u, Vector rhs) {
    detail::check_triangular_system(u, rhs.size(), "solve_upper_triangular");
    u.triangularView<Eigen::Upper>().solveInPlace(rhs);
    return rhs;
}

/// Forward substitution with the transpose: x with U^T x = rhs.
inline Matrix solve_upper_transposed(const Matrix& u, Matrix rhs) {
    detail::check_triangular_system(u, rhs.rows(), "solve_upper_transposed");
    u.transpose().triangularView<Eigen::Lower>().solveInPlace(rhs);
    return rhs;
}

inline Vector solve_upper_transposed(const Matrix& u, Vector rhs) {
    detail::check_triangular_system(u, rhs.size(), "solve_upper_transposed");
    u.transpose().triangularView<Eigen::Lower>().solveInPlace(rhs);
    return rhs;
}

/// Rows of `top` followed by rows of `bottom`.
inline Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
    if (top.cols() != bottom.cols()) {
        throw DimensionError("stack_rows: " + detail::shape(top) + " over " +
                             detail::shape(bottom));
    }
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

inline Vector stack_rows(const Vector& top, const Vector& bottom) {
    Vector out(top.size() + bottom.size());
    out.head(top.size()) = top;
    out.tail(bottom.size()) = bottom;
    return out;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace orthokalman
