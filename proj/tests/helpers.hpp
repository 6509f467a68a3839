#pragma once

#include <random>
#include <vector>

#include "lokf/core.hpp"
#include "lokf/rng.hpp"

namespace lokf::testing {

inline Matrix gaussian(Eigen::Index n, Eigen::Index q, Rng& rng) {
    std::normal_distribution<double> nd;
    Matrix m(n, q);
    for (Eigen::Index j = 0; j < q; ++j)
        for (Eigen::Index i = 0; i < n; ++i) m(i, j) = nd(rng);
    return m;
}

inline Matrix bernoulli(Eigen::Index n, Eigen::Index q, double prob, Rng& rng) {
    std::bernoulli_distribution b(prob);
    Matrix m(n, q);
    for (Eigen::Index j = 0; j < q; ++j)
        for (Eigen::Index i = 0; i < n; ++i) m(i, j) = b(rng) ? 1.0 : 0.0;
    return m;
}

/// Small dataset with binary x, independent binary knockoffs and binary z.
inline DataBundle small_bundle(int n, int p, int m, std::uint64_t seed, double signal = 0.0) {
    Rng rng(seed);
    DataBundle d;
    d.x = bernoulli(n, p, 0.5, rng);
    d.xk = bernoulli(n, p, 0.5, rng);
    d.z = bernoulli(n, m, 0.5, rng);
    std::normal_distribution<double> nd;
    d.y.resize(n);
    for (int i = 0; i < n; ++i) d.y[i] = signal * d.x(i, 0) + nd(rng);
    return d;
}

}  // namespace lokf::testing
