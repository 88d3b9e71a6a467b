#pragma once

// Random inputs shared by the unit tests.

#include <cmath>
#include <random>

#include "mrc/corematrix.hpp"

namespace mrc::testing {

inline Matrix random_corr(std::mt19937_64& gen, int d, int rank) {
    std::normal_distribution<double> nd;
    Matrix g(d, rank);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < rank; ++j) g(i, j) = nd(gen);
    Matrix c = g * g.transpose();
    Vector s = c.diagonal().cwiseSqrt().cwiseInverse();
    c = s.asDiagonal() * c * s.asDiagonal();
    c.diagonal().setOnes();
    return 0.5 * (c + c.transpose());
}

// With enforce_weak, kappa and c are drawn first and a is scaled under the
// weak-condition margin.
inline MrcParams random_params(std::mt19937_64& gen, int d, bool enforce_weak) {
    std::uniform_real_distribution<double> uk(0.1, 2.0), ua(0.0, 1.2), uu(0.0, 1.0);
    if (!enforce_weak) {
        Vector kap(d), a(d);
        for (int i = 0; i < d; ++i) kap(i) = uk(gen), a(i) = ua(gen);
        return make_params(validate_correlation(SymMatrix::from_dense(random_corr(gen, d, d))), kap,
                           validate_correlation(SymMatrix::from_dense(random_corr(gen, d, 1 + gen() % d))), a);
    }
    while (true) {
        Vector kap(d);
        for (int i = 0; i < d; ++i) kap(i) = 0.8 + 0.7 * uu(gen);
        auto c = validate_correlation(SymMatrix::from_dense(random_corr(gen, d, d + 1)));
        Matrix m = kap.asDiagonal() * c.dense() + c.dense() * kap.asDiagonal();
        const double lam = min_eigenvalue(SymMatrix::from_dense(m));
        if (lam <= 0.0) continue;
        Vector a(d);
        for (int i = 0; i < d; ++i) a(i) = d > 2 ? uu(gen) * std::sqrt(lam / (d - 2)) : ua(gen);
        return make_params(validate_correlation(SymMatrix::from_dense(random_corr(gen, d, d))), kap, c, a);
    }
}

}  // namespace mrc::testing
