#pragma once

#include <map>
#include <vector>

#include "delaysa/chain.hpp"
#include "delaysa/operators.hpp"

namespace delaysa {

// Origin, the unit basis vectors, and `n_random` random unit directions at
// each radius in {1, sigma, 2 sigma}.
std::vector<Vector> default_theta_grid(int d, double sigma, std::uint64_t seed, int n_random = 8);

// Smallest t such that for every theta in the grid, every start observation
// o_0 and every t' >= t:
//   |E[g(theta, o_t') | o_0] - g_bar(theta)| <= alpha (|theta| + 1).
// Expectations are exact (powers of P). The search stops once a TV
// certificate shows no later violation is possible.
int operator_mixing_time(const Operator& op, double alpha, const std::vector<Vector>& grid,
                         int cap = 100000);

struct MixingReport {
    std::map<double, int> tv_times;
    double lambda2 = 0.0;
    std::map<double, int> tau_mix_operator;
};

MixingReport mixing_report(const Operator& op, const std::vector<double>& tv_eps,
                           const std::vector<double>& alphas, const std::vector<Vector>& grid);

}  // namespace delaysa
