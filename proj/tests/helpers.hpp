#pragma once

#include <memory>

#include "delaysa/chain.hpp"
#include "delaysa/operators.hpp"

namespace delaysa::testing {

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix M(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
    int i = 0;
    for (const auto& r : rows) {
        int k = 0;
        for (double v : r) M(i, k++) = v;
        ++i;
    }
    return M;
}

inline Vector vec(std::initializer_list<double> v) {
    Vector x(static_cast<int>(v.size()));
    int i = 0;
    for (double e : v) x(i++) = e;
    return x;
}

inline MarkovChain two_state(double p, double q) {
    return build_chain(mat({{1 - p, p}, {q, 1 - q}}));
}

// Scalar SGD with targets 0 and 2 on a two-state chain.
inline SgdOperator scalar_sgd(double p = 0.3, double q = 0.3) {
    return SgdOperator(two_state(p, q), mat({{0.0}, {2.0}}));
}

// 20 states, 10 orthonormal features, gamma 0.5, rewards uniform on [0,1] with std 0.1.
inline TdOperator appendix_td(std::uint64_t seed = 20) {
    return TdOperator(random_ergodic_chain(seed, 20, 0.0, 0.1), orthonormal_features(20, 10, seed + 1), 0.5);
}

inline TdOperator random_td(std::uint64_t seed, int n, int d, double gamma, double sparsity = 0.3) {
    return TdOperator(random_ergodic_chain(seed, n, sparsity, 0.1), orthonormal_features(n, d, seed + 7), gamma);
}

inline SgdOperator random_sgd(std::uint64_t seed, int n, int d) {
    MarkovChain c = random_ergodic_chain(seed, n, 0.3, 0.0);
    Stream rng(seed, 1, Purpose::Test);
    Matrix B(n, d);
    for (int s = 0; s < n; ++s)
        for (int k = 0; k < d; ++k) B(s, k) = 2.0 + rng.normal();
    return SgdOperator(std::move(c), B);
}

// Random Q instance with uniform behavior and orthonormal features.
inline QOperator random_q(std::uint64_t seed, int S, int A, int d, double gamma) {
    std::vector<Matrix> P, R;
    for (int a = 0; a < A; ++a) {
        MarkovChain c = random_ergodic_chain(seed * 31 + a, S, 0.0, 0.0);
        P.push_back(c.P());
        R.push_back(c.reward_mean());
    }
    return QOperator(P, R, Matrix::Constant(S, A, 1.0 / A), 0.1, orthonormal_features(S * A, d, seed), gamma);
}

// One state, two actions with features 1 and 2, behavior mostly on the first:
// the greedy target keeps pointing at the rarely sampled action.
inline QOperator baird_like(double gamma = 0.99) {
    std::vector<Matrix> P = {mat({{1.0}}), mat({{1.0}})};
    std::vector<Matrix> R = {mat({{-1.0}}), mat({{-1.0}})};
    return QOperator(P, R, mat({{0.9, 0.1}}), 0.0, mat({{1.0}, {2.0}}), gamma);
}

}  // namespace delaysa::testing
