#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "delaysa/rng.hpp"

namespace delaysa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Finite, irreducible, aperiodic Markov chain with a reward attached to every
// transition. Immutable once built; use build_chain() to get one.
class MarkovChain {
public:
    int n() const { return static_cast<int>(P_.rows()); }
    const Matrix& P() const { return P_; }
    const Matrix& reward_mean() const { return reward_mean_; }
    double reward_noise_std() const { return reward_noise_std_; }
    // Stationary law, computed once at construction.
    const Vector& pi() const { return pi_; }

private:
    friend MarkovChain build_chain(Matrix P, Matrix reward_mean, double reward_noise_std);
    MarkovChain() = default;

    Matrix P_;
    Matrix reward_mean_;
    double reward_noise_std_ = 0.0;
    Vector pi_;
};

// Validates P (row sums, irreducibility, aperiodicity) and solves for pi.
// An empty reward_mean means all-zero rewards.
MarkovChain build_chain(Matrix P, Matrix reward_mean = Matrix(), double reward_noise_std = 0.0);

struct StationaryDistribution {
    Vector pi;
};

StationaryDistribution stationary(const MarkovChain& chain);

// Solves pi P = pi directly; exposed so build_chain and tests share it.
Vector solve_stationary(const Matrix& P, int max_polish = 100000);

// Sequence of T states starting at s0.
std::vector<int> sample_path(const MarkovChain& chain, Stream& rng, long T, int s0);
std::vector<int> sample_path(const MarkovChain& chain, std::uint64_t seed, long T, int s0);

// Draws the next state from row s of P.
int sample_next(const MarkovChain& chain, int s, Stream& rng);

// Worst-case total-variation distance max_i TV(P^t(i, .), pi).
double worst_tv(const Matrix& Pt, const Vector& pi);

// Smallest t with worst-case TV(P^t, pi) <= eps.
int tv_mixing_time(const MarkovChain& chain, double eps, int cap = 100000);

// |lambda_2| of P.
double second_eigenvalue_modulus(const MarkovChain& chain);

// Random ergodic chain: entries uniform on (0,1), a fraction `sparsity` of
// them zeroed (a random cycle and the diagonal are always kept), rows
// normalised. Transition reward means are uniform on [0,1].
MarkovChain random_ergodic_chain(std::uint64_t seed, int n, double sparsity,
                                 double reward_noise_std);

// {"n", "P", "reward_mean", "reward_noise_std"} or
// {"recipe": "random-ergodic", "seed", "n", "sparsity", "reward_noise_std"}.
MarkovChain chain_from_json(const nlohmann::json& j);
nlohmann::json chain_to_json(const MarkovChain& chain);

}  // namespace delaysa
