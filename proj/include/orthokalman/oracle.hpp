#pragma once

// Dense reference solver for equivalence tests. Assembles the whole weighted
// system U (A u - b) and solves it in one shot with a column-pivoted QR, which
// shares no code path with the incremental filter.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/QR>

#include "orthokalman/errors.hpp"
#include "orthokalman/matrix.hpp"
#include "orthokalman/model.hpp"

namespace orthokalman::oracle {

struct RowRange {
    Index first = 0;
    Index count = 0;
};

struct AssembledSystem {
    Matrix A;
    Vector b;
    Matrix weight;                   // block diagonal U with U^T U = cov(e)^{-1}
    std::vector<Index> col_offsets;  // step i owns columns [col_offsets[i], col_offsets[i+1])
    std::vector<RowRange> row_ranges;  // one per equation block, in row order
};

/// Lays out o_0, c_1, o_1, c_2, ... and the matching blocks G_0, [-F_1 H_1], G_1, ...
inline AssembledSystem assemble(std::span<const StepInput> steps) {
    if (steps.empty()) {
        throw DimensionError("assemble: no steps");
    }
    AssembledSystem sys;
    sys.col_offsets.push_back(0);
    Index rows = 0;
    Index weight_rows = 0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const StepInput& s = steps[i];
        const Index n = s.state_dim();
        if (n < 1) {
            throw DimensionError("assemble: step " + std::to_string(i) +
                                 " has no state dimension");
        }
        if (i == 0 && s.evolution) {
            throw DimensionError("assemble: the first step cannot have an evolution");
        }
        if (i > 0 && !s.evolution) {
            throw DimensionError("assemble: step " + std::to_string(i) + " has no evolution");
        }
        sys.col_offsets.push_back(sys.col_offsets.back() + n);
        if (s.evolution) {
            rows += s.evolution->F.rows();
            weight_rows += s.evolution->K.weighed_rows();
        }
        if (s.observation) {
            rows += s.observation->G.rows();
            weight_rows += s.observation->C.weighed_rows();
        }
    }

    const Index cols = sys.col_offsets.back();
    sys.A = Matrix::Zero(rows, cols);
    sys.b = Vector::Zero(rows);
    sys.weight = Matrix::Zero(weight_rows, rows);

    Index row = 0;
    Index wrow = 0;
    auto place_weight = [&](const CovarianceSpec& spec, Index first) {
        const Matrix w = spec.to_inverse_factor();
        sys.weight.block(wrow, first, w.rows(), w.cols()) = w;
        wrow += w.rows();
    };

    for (std::size_t i = 0; i < steps.size(); ++i) {
        const StepInput& s = steps[i];
        const Index col = sys.col_offsets[i];
        const Index n = sys.col_offsets[i + 1] - col;
        if (s.evolution) {
            const Evolution& e = *s.evolution;
            const Index prev_col = sys.col_offsets[i - 1];
            const Index prev_n = col - prev_col;
            const Index l = e.F.rows();
            const Matrix h = e.H ? *e.H : default_evolution_matrix(l, n);
            if (e.F.cols() != prev_n || h.rows() != l || h.cols() != n || e.c.size() != l ||
                e.K.dim() != l) {
                throw DimensionError("assemble: inconsistent evolution blocks at step " +
                                     std::to_string(i));
            }
            sys.A.block(row, prev_col, l, prev_n) = -e.F;
            sys.A.block(row, col, l, n) = h;
            sys.b.segment(row, l) = e.c;
            place_weight(e.K, row);
            sys.row_ranges.push_back({row, l});
            row += l;
        }
        if (s.observation) {
            const Observation& ob = *s.observation;
            const Index m = ob.G.rows();
            if (ob.G.cols() != n || ob.o.size() != m || ob.C.dim() != m) {
                throw DimensionError("assemble: inconsistent observation blocks at step " +
                                     std::to_string(i));
            }
            sys.A.block(row, col, m, n) = ob.G;
            sys.b.segment(row, m) = ob.o;
            place_weight(ob.C, row);
            sys.row_ranges.push_back({row, m});
            row += m;
        }
    }
    return sys;
}

struct GlsSolution {
    std::vector<Vector> estimates;
    std::vector<Matrix> covariances;
};

/// argmin ||U (A u - b)||_2 and the diagonal blocks of (A^T U^T U A)^{-1}.
inline GlsSolution solve_gls(const AssembledSystem& sys, double rank_tolerance = 1e-10) {
    const Matrix ua = sys.weight * sys.A;
    const Vector ub = sys.weight * sys.b;
    Eigen::ColPivHouseholderQR<Matrix> qr(ua);
    qr.setThreshold(rank_tolerance);
    if (qr.rank() < ua.cols()) {
        throw RankDeficient("unobservable scenario: weighted coefficient matrix has rank " +
                                std::to_string(qr.rank()) + " < " + std::to_string(ua.cols()),
                            qr.rank(), ua.cols());
    }
    const Vector u = qr.solve(ub);
    const Matrix gram = ua.transpose() * ua;
    const Matrix cov = gram.inverse();

    GlsSolution out;
    const std::size_t steps = sys.col_offsets.size() - 1;
    for (std::size_t i = 0; i < steps; ++i) {
        const Index first = sys.col_offsets[i];
        const Index n = sys.col_offsets[i + 1] - first;
        out.estimates.push_back(u.segment(first, n));
        out.covariances.push_back(cov.block(first, first, n, n));
    }
    return out;
}

}  // namespace orthokalman::oracle
