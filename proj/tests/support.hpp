#pragma once

#include "data.hpp"
#include "moments.hpp"
#include "rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace testing {

inline Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    magic::CounterRng rng(magic::derive_key(seed, 0, 77));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

// A and B share a common component so the objective has an interior minimum.
inline magic::MomentComponents random_components(Eigen::Index n, Eigen::Index r, std::uint64_t seed,
                                                 double beta0 = 0.4) {
    const Eigen::MatrixXd b = normal_matrix(n, r, seed).array() + 0.3;
    const Eigen::MatrixXd noise = normal_matrix(n, r, seed + 1000);
    return magic::make_components(beta0 * b + noise, b);
}

// Binary instruments with a pairwise interaction signal in d.
inline magic::Dataset binary_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed, double beta = 0.5,
                                     double alpha = 1.0, double direct = 0.3) {
    magic::CounterRng rng(magic::derive_key(seed, 0, 31));
    magic::Dataset ds;
    ds.z.resize(n, p);
    ds.y.resize(n);
    ds.d.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) ds.z(i, j) = rng.bernoulli(0.5) ? 1.0 : 0.0;
        const double u = rng.normal();
        const double e = 0.5 * u + rng.normal();
        double d = u + ds.z.row(i).sum();
        for (Eigen::Index j = 0; j < p; ++j)
            for (Eigen::Index k = j + 1; k < p; ++k) d += alpha * (ds.z(i, j) - 0.5) * (ds.z(i, k) - 0.5);
        ds.d[i] = d;
        ds.y[i] = beta * d + direct * ds.z(i, 0) + e;
    }
    for (Eigen::Index j = 0; j < p; ++j) ds.instrument_names.push_back("z" + std::to_string(j + 1));
    return ds;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace testing
