#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "orthokalman/errors.hpp"
#include "orthokalman/matrix.hpp"

namespace orthokalman {

enum class CovarianceKind {
    Explicit,         // C itself
    InverseFactor,    // W with W^T W = C^{-1}
    Inverse,          // C^{-1}
    DiagonalWeights,  // w with W = diag(w), i.e. inverse standard deviations
};

inline const char* to_string(CovarianceKind kind) {
    switch (kind) {
        case CovarianceKind::Explicit: return "C";
        case CovarianceKind::InverseFactor: return "W";
        case CovarianceKind::Inverse: return "C_inverse";
        case CovarianceKind::DiagonalWeights: return "w";
    }
    return "?";
}

/// An input covariance matrix C in one of four representations. The filter only
/// ever needs to multiply by an inverse factor W of C = (W^T W)^{-1}, which is
/// what weigh() does. W is defined up to a left orthogonal factor, so only the
/// Gram matrices of weighed results are meaningful.
///
/// Immutable after construction; singular or indefinite input is rejected by the
/// factory functions.
class CovarianceSpec {
public:
    static CovarianceSpec explicit_covariance(Matrix c) {
        check_symmetric(c, "C");
        CovarianceSpec spec(CovarianceKind::Explicit, c.rows());
        spec.factor_ = cholesky_upper(c);  // C = U^T U, W = U^{-T}
        spec.data_ = std::move(c);
        return spec;
    }

    static CovarianceSpec inverse_factor(Matrix w) {
        if (w.cols() < 1 || w.rows() < w.cols()) {
            throw InvalidCovariance("inverse factor W must have at least as many rows as columns, got " +
                                    detail::shape(w));
        }
        check_finite(w, "W");
        try {
            cholesky_upper(w.transpose() * w);
        } catch (const NotPositiveDefinite&) {
            throw InvalidCovariance("inverse factor W is rank deficient");
        }
        CovarianceSpec spec(CovarianceKind::InverseFactor, w.cols());
        spec.factor_ = w;
        spec.data_ = std::move(w);
        return spec;
    }

    static CovarianceSpec inverse_covariance(Matrix c_inverse) {
        check_symmetric(c_inverse, "C_inverse");
        CovarianceSpec spec(CovarianceKind::Inverse, c_inverse.rows());
        spec.factor_ = cholesky_upper(c_inverse);  // C^{-1} = U^T U, W = U
        spec.data_ = std::move(c_inverse);
        return spec;
    }

    static CovarianceSpec diagonal_weights(const Vector& w) {
        if (w.size() < 1) {
            throw InvalidCovariance("diagonal weights must not be empty");
        }
        for (Index i = 0; i < w.size(); ++i) {
            if (!(w(i) > 0.0) || !std::isfinite(w(i))) {
                throw InvalidCovariance("diagonal weight " + std::to_string(i) +
                                        " is not a positive finite number");
            }
        }
        CovarianceSpec spec(CovarianceKind::DiagonalWeights, w.size());
        spec.data_ = w;
        spec.factor_ = w;
        return spec;
    }

    /// diag(sigma^2) expressed as diagonal weights 1/sigma.
    static CovarianceSpec from_standard_deviations(const Vector& sigma) {
        return diagonal_weights(sigma.cwiseInverse());
    }

    static CovarianceSpec identity(Index dim) { return diagonal_weights(Vector::Ones(dim)); }

    CovarianceKind kind() const noexcept { return kind_; }
    Index dim() const noexcept { return dim_; }

    /// The data the spec was built from; a column vector for diagonal weights.
    const Matrix& data() const noexcept { return data_; }

    /// Row count of weigh() results.
    Index weighed_rows() const noexcept {
        return kind_ == CovarianceKind::InverseFactor ? factor_.rows() : dim_;
    }

    /// W * a.
    Matrix weigh(const Matrix& a) const {
        if (a.rows() != dim_) {
            throw DimensionError("weigh: operand has " + std::to_string(a.rows()) +
                                 " rows, covariance dimension is " + std::to_string(dim_));
        }
        switch (kind_) {
            case CovarianceKind::Explicit: return solve_upper_transposed(factor_, a);
            case CovarianceKind::InverseFactor: return factor_ * a;
            case CovarianceKind::Inverse: return factor_.triangularView<Eigen::Upper>() * a;
            case CovarianceKind::DiagonalWeights: return factor_.col(0).asDiagonal() * a;
        }
        return {};
    }

    Vector weigh(const Vector& v) const {
        if (v.size() != dim_) {
            throw DimensionError("weigh: vector has length " + std::to_string(v.size()) +
                                 ", covariance dimension is " + std::to_string(dim_));
        }
        switch (kind_) {
            case CovarianceKind::Explicit: return solve_upper_transposed(factor_, v);
            case CovarianceKind::InverseFactor: return factor_ * v;
            case CovarianceKind::Inverse: return factor_.triangularView<Eigen::Upper>() * v;
            case CovarianceKind::DiagonalWeights: return factor_.col(0).cwiseProduct(v);
        }
        return {};
    }

    /// Explicit W with W^T W = C^{-1}: upper triangular for C and C^{-1} input,
    /// diagonal for weights, and the given matrix for inverse-factor input.
    Matrix to_inverse_factor() const {
        switch (kind_) {
            case CovarianceKind::Explicit: {
                // U^{-T} is lower triangular; re-triangularize to an upper factor.
                Matrix lower = solve_upper_transposed(factor_, Matrix(Matrix::Identity(dim_, dim_)));
                return triangularize(std::move(lower)).r_top;
            }
            case CovarianceKind::InverseFactor: return factor_;
            case CovarianceKind::Inverse: return factor_;
            case CovarianceKind::DiagonalWeights: return Matrix(factor_.col(0).asDiagonal());
        }
        return {};
    }

    /// C, reconstructed from whichever representation is stored.
    Matrix covariance() const {
        if (kind_ == CovarianceKind::Explicit) {
            return data_;
        }
        const Matrix w = to_inverse_factor();
        return (w.transpose() * w).inverse();
    }

private:
    CovarianceSpec(CovarianceKind kind, Index dim) : kind_(kind), dim_(dim) {}

    static void check_finite(const Matrix& m, const char* name) {
        if (!m.allFinite()) {
            throw InvalidCovariance(std::string(name) + " has non-finite entries");
        }
    }

    static void check_symmetric(const Matrix& m, const char* name) {
        if (m.rows() != m.cols() || m.rows() < 1) {
            throw InvalidCovariance(std::string(name) + " must be square and non-empty, got " +
                                    detail::shape(m));
        }
        check_finite(m, name);
        const double scale = m.cwiseAbs().maxCoeff();
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
            throw InvalidCovariance(std::string(name) + " is not symmetric");
        }
    }

    CovarianceKind kind_;
    Index dim_;
    Matrix data_;
    Matrix factor_;
};

}  // namespace orthokalman
