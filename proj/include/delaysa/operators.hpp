#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "delaysa/chain.hpp"

namespace delaysa {

struct TdObs {
    double reward;
    int s;
    int s_next;
};

struct QObs {
    double reward;
    int s;
    int a;
    int s_next;
};

struct SgdObs {
    int s;
};

using Observation = std::variant<TdObs, QObs, SgdObs>;

bool operator==(const TdObs& a, const TdObs& b);
bool operator==(const QObs& a, const QObs& b);
bool operator==(const SgdObs& a, const SgdObs& b);

struct OperatorConstants {
    double mu = 0.0;
    double L = 1.0;
    double sigma = 1.0;
};

// A root-finding problem driven by a Markov chain. The chain state x_t
// produces the observation o_t, either from x_t alone (lag 0) or from the
// transition (x_t, x_{t+1}) (lag 1).
class Operator {
public:
    virtual ~Operator() = default;

    virtual std::string kind() const = 0;
    virtual int dim() const = 0;
    virtual const MarkovChain& chain() const = 0;
    virtual int observation_lag() const = 0;

    // g(theta, o)
    virtual Vector noisy_update(const Vector& theta, const Observation& obs) const = 0;
    // Expectation of g under the stationary observation law.
    virtual Vector mean_field(const Vector& theta) const = 0;
    // Root of the mean field, computed once.
    virtual const Vector& fixed_point() const = 0;

    // Builds o_t from the chain transition, drawing reward noise from rng.
    virtual Observation observe(int x, int x_next, Stream& rng) const = 0;

    // Row x holds E[g(theta, o_t) | x_t = x] with rewards at their means.
    virtual Matrix state_expectations(const Vector& theta) const = 0;

    // Every observation with positive probability, rewards at their mean.
    // With reward_extremes the truncated noise endpoints are added as well.
    virtual std::vector<Observation> enumerate_observations(bool reward_extremes) const = 0;

    // Closed-form constants when the instance admits them.
    virtual std::optional<OperatorConstants> analytic_constants() const { return std::nullopt; }

protected:
    void check_dim(const Vector& theta) const;
};

// Truncated Gaussian reward noise: resampled until within 5 standard deviations.
double draw_reward(double mean, double std, Stream& rng);

// TD(0) with linear features. Observation (R, s, s').
class TdOperator : public Operator {
public:
    TdOperator(MarkovChain chain, Matrix Phi, double gamma);

    std::string kind() const override { return "td"; }
    int dim() const override { return static_cast<int>(Phi_.cols()); }
    const MarkovChain& chain() const override { return chain_; }
    int observation_lag() const override { return 1; }
    Vector noisy_update(const Vector& theta, const Observation& obs) const override;
    Vector mean_field(const Vector& theta) const override;
    const Vector& fixed_point() const override { return theta_star_; }
    Observation observe(int x, int x_next, Stream& rng) const override;
    Matrix state_expectations(const Vector& theta) const override;
    std::vector<Observation> enumerate_observations(bool reward_extremes) const override;
    std::optional<OperatorConstants> analytic_constants() const override;

    const Matrix& Phi() const { return Phi_; }
    double gamma() const { return gamma_; }
    const Matrix& A() const { return A_; }
    const Vector& b() const { return b_; }
    const Vector& expected_reward() const { return rbar_; }

private:
    MarkovChain chain_;
    Matrix Phi_;
    double gamma_;
    Vector rbar_;
    Matrix A_;
    Vector b_;
    Vector theta_star_;
};

// Q-learning with linear features over state-action pairs. The driving chain
// lives on pairs x = s * n_actions + a and moves by P_a(s, .) followed by the
// behavior policy at the next state. Observation (R, s, a, s').
class QOperator : public Operator {
public:
    // transitions[a] is P_a (n_states x n_states); rewards[a](s, s') its mean
    // reward; behavior(s, a) > 0; Phi has n_states * n_actions rows.
    QOperator(std::vector<Matrix> transitions, std::vector<Matrix> rewards, Matrix behavior,
              double reward_noise_std, Matrix Phi, double gamma);

    std::string kind() const override { return "q"; }
    int dim() const override { return static_cast<int>(Phi_.cols()); }
    const MarkovChain& chain() const override { return chain_; }
    int observation_lag() const override { return 1; }
    Vector noisy_update(const Vector& theta, const Observation& obs) const override;
    Vector mean_field(const Vector& theta) const override;
    const Vector& fixed_point() const override;
    Observation observe(int x, int x_next, Stream& rng) const override;
    Matrix state_expectations(const Vector& theta) const override;
    std::vector<Observation> enumerate_observations(bool reward_extremes) const override;

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    // Greedy action at s, ties to the lowest index.
    int greedy_action(const Vector& theta, int s) const;

private:
    Vector phi(int s, int a) const { return Phi_.row(s * n_actions_ + a).transpose(); }
    Vector solve_fixed_point() const;

    int n_states_;
    int n_actions_;
    std::vector<Matrix> transitions_;
    std::vector<Matrix> rewards_;
    Matrix behavior_;
    Matrix Phi_;
    double gamma_;
    MarkovChain chain_;
    mutable std::optional<Vector> theta_star_;
};

// Markovian SGD on f(theta, s) = 0.5 * |theta - b_s|^2. Observation s.
class SgdOperator : public Operator {
public:
    // Row s of targets is b_s.
    SgdOperator(MarkovChain chain, Matrix targets);

    std::string kind() const override { return "sgd"; }
    int dim() const override { return static_cast<int>(targets_.cols()); }
    const MarkovChain& chain() const override { return chain_; }
    int observation_lag() const override { return 0; }
    Vector noisy_update(const Vector& theta, const Observation& obs) const override;
    Vector mean_field(const Vector& theta) const override;
    const Vector& fixed_point() const override { return theta_star_; }
    Observation observe(int x, int x_next, Stream& rng) const override;
    Matrix state_expectations(const Vector& theta) const override;
    std::vector<Observation> enumerate_observations(bool reward_extremes) const override;
    std::optional<OperatorConstants> analytic_constants() const override;

    const Matrix& targets() const { return targets_; }

private:
    MarkovChain chain_;
    Matrix targets_;
    Vector theta_star_;
};

// Operators whose g does not depend on the observation; useful as a control.
class DeterministicOperator : public Operator {
public:
    // g(theta) = -(theta - center) on any chain.
    DeterministicOperator(MarkovChain chain, Vector center);

    std::string kind() const override { return "deterministic"; }
    int dim() const override { return static_cast<int>(center_.size()); }
    const MarkovChain& chain() const override { return chain_; }
    int observation_lag() const override { return 0; }
    Vector noisy_update(const Vector& theta, const Observation& obs) const override;
    Vector mean_field(const Vector& theta) const override;
    const Vector& fixed_point() const override { return center_; }
    Observation observe(int x, int x_next, Stream& rng) const override;
    Matrix state_expectations(const Vector& theta) const override;
    std::vector<Observation> enumerate_observations(bool reward_extremes) const override;
    std::optional<OperatorConstants> analytic_constants() const override;

private:
    MarkovChain chain_;
    Vector center_;
};

// First d columns of the Q factor of a seeded n x n Gaussian matrix.
Matrix orthonormal_features(int n, int d, std::uint64_t seed);

struct AuditResult {
    OperatorConstants constants;
    // lambda_min of the symmetric part of A, TD only.
    std::optional<double> analytic_mu;
};

// Empirical constants from probes around the fixed point. Throws
// MonotonicityViolation when the estimated mu is not positive.
AuditResult audit_constants(const Operator& op, int n_probe, double radius, std::uint64_t seed);

// Constants for step-size rules: analytic where available, otherwise audited
// values with mu shrunk and L inflated by `margin`.
OperatorConstants step_size_constants(const Operator& op, double margin = 0.1,
                                      int n_probe = 400, std::uint64_t seed = 0);

}  // namespace delaysa
