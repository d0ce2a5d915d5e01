// Tracks a point rotating about the origin, printing filtered and smoothed
// estimates next to the truth.

#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "orthokalman.hpp"

using namespace orthokalman;

int main() {
    const double alpha = 2.0 * std::numbers::pi / 16.0;
    Matrix F(2, 2);
    F << std::cos(alpha), -std::sin(alpha), std::sin(alpha), std::cos(alpha);
    const Matrix G = Matrix::Identity(2, 2);
    const auto K = CovarianceSpec::from_standard_deviations(Vector::Constant(2, 1e-3));
    const auto C = CovarianceSpec::from_standard_deviations(Vector::Constant(2, 0.1));

    Rng rng(7);
    Filter filter;
    Vector u(2);
    u << 1.0, 0.0;
    std::vector<Vector> truth;
    std::vector<Estimate> filtered;
    for (int k = 0; k < 16; ++k) {
        if (k > 0) {
            u = F * u + rng.normal_vector(2, 1e-3);
            filter.evolve(2, std::nullopt, F, Vector::Zero(2), K);
        }
        filter.observe(G, u + rng.normal_vector(2, 0.1), C);
        truth.push_back(u);
        filtered.push_back(filter.estimate());
    }
    filter.smooth();

    std::printf("%4s %10s %10s %10s %10s %10s %10s\n", "step", "x", "y", "filt x", "filt y",
                "smooth x", "smooth y");
    for (int k = 0; k < 16; ++k) {
        const Estimate s = filter.estimate(k);
        std::printf("%4d %10.4f %10.4f %10.4f %10.4f %10.4f %10.4f\n", k, truth[k](0),
                    truth[k](1), filtered[k].state(0), filtered[k].state(1), s.state(0),
                    s.state(1));
    }
    const Estimate last = filter.estimate();
    std::printf("final standard deviations: %.4g %.4g\n", last.standard_deviations()(0),
                last.standard_deviations()(1));
    return 0;
}
