#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "orthokalman/matrix.hpp"

namespace orthokalman {

/// Seeded noise source with a fully specified stream, so that runs can be
/// reproduced by other implementations:
///
///  - raw bits: std::mt19937_64 (MT19937-64, seeded with the 64-bit seed);
///  - uniform(): (bits >> 11) * 2^-53, a double in [0, 1);
///  - normal(): Marsaglia polar method on u = 2 * uniform() - 1, returning the
///    first value of each accepted pair and caching the second.
///
/// std::normal_distribution is not used because its algorithm is
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        double v = 0.0;
        double s = 0.0;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * scale;
        has_spare_ = true;
        return u * scale;
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    /// Integer in [lo, hi].
    Index integer(Index lo, Index hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<Index>(engine_() % span);
    }

    Vector normal_vector(Index n, double sigma = 1.0) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) {
            v(i) = sigma * normal();
        }
        return v;
    }

    Matrix normal_matrix(Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) {
                m(i, j) = normal();
            }
        }
        return m;
    }

    /// Haar-distributed orthogonal matrix: Q of a Gaussian matrix with the signs
    /// of R's diagonal folded in.
    Matrix orthogonal(Index n) {
        const Matrix g = normal_matrix(n, n);
        Eigen::HouseholderQR<Matrix> qr(g);
        Matrix q = qr.householderQ();
        const Matrix r = qr.matrixQR();
        for (Index j = 0; j < n; ++j) {
            if (r(j, j) < 0.0) {
                q.col(j) *= -1.0;
            }
        }
        return q;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace orthokalman
