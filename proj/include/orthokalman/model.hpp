#pragma once

#include <optional>

#include "orthokalman/covariance.hpp"
#include "orthokalman/matrix.hpp"

namespace orthokalman {

/// H u_i = F u_{i-1} + c + noise, noise ~ (0, K). When H is absent the filter
/// uses [I | 0].
struct Evolution {
    Index dim = 0;  // dimension of the new state
    std::optional<Matrix> H;
    Matrix F;
    Vector c;
    CovarianceSpec K;
};

/// o = G u_i + noise, noise ~ (0, C).
struct Observation {
    Matrix G;
    Vector o;
    CovarianceSpec C;
};

/// Inputs of one time step. The first step has no evolution; it needs either an
/// observation or an explicit `dim`.
struct StepInput {
    std::optional<Index> dim;
    std::optional<Evolution> evolution;
    std::optional<Observation> observation;

    Index state_dim() const {
        if (evolution) {
            return evolution->dim;
        }
        if (observation) {
            return observation->G.cols();
        }
        return dim.value_or(0);
    }
};

/// H used when the caller supplies none: [I_rows | 0].
inline Matrix default_evolution_matrix(Index rows, Index dim) {
    Matrix h = Matrix::Zero(rows, dim);
    h.leftCols(rows).setIdentity();
    return h;
}

}  // namespace orthokalman
