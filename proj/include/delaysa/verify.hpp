#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "delaysa/metrics.hpp"

namespace delaysa {

struct BoundCheck {
    std::string name;
    std::vector<double> lhs_series;
    std::vector<double> rhs_series;
    bool holds = true;
    // Worst (lhs - slack) / rhs; slack is the lhs CI half-width for Monte-Carlo checks.
    double max_ratio = 0.0;
    long worst_t = -1;
    long tau_prime = 0;
    double tolerance = 0.0;
    bool applicable = true;
    std::string note;
};

// Sliding maximum of series over [t - window, t].
std::vector<double> windowed_max(const std::vector<double>& series, long window);

// Per-t expected-drift bounds across an ensemble with iterates:
//   E|theta_t - theta_{t-tau_mix}|^2 <= 2 a^2 tau_mix^2 L^2 (2 r_{t,2} + 3 sigma^2),  t >= tau_mix
//   E|theta_t - theta_{t-tau_t}|^2   <= 2 a^2 tau_max^2 L^2 (2 r_{t,2} + 3 sigma^2)
// with r_{t,2} the windowed max of E[r_l^2] over [t - tau', t], tau' = 2 tau_max + tau_mix.
// Iterates before time 0 are taken as theta_0.
std::vector<BoundCheck> check_drift_lemma(const std::vector<RunTrace>& traces, const OperatorConstants& c,
                                          double alpha, int tau_mix, int tau_max, double tol = 0.05);

// max_t E[r_t^2] <= 9 sigma^2 (1 + tol). Throws StepSizeTooLarge unless
// alpha <= mu / (196 L^2 tau_bar).
BoundCheck check_uniform_boundedness(const EnsembleResult& ens, double sigma, double alpha, double mu, double L,
                                     int tau_bar, double tol = 0.05);

// Path-wise |theta_t - theta_{t-tau}| <= 4 L alpha tau (r_t + 2 beta), beta = L eps + L sigma.
// Skipped (applicable = false) when alpha tau L > 1/4.
BoundCheck check_adaptive_drift(const RunTrace& trace, double alpha, double L, double epsilon, double sigma, int tau);

enum class Theorem { Two, Three };

struct TheoremInputs {
    double alpha = 0.0;
    OperatorConstants c;
    int tau_mix = 1;
    int tau_max = 0;
    double epsilon = 0.0;
    // Mean of tau_0..tau_{t-1} averaged over seeds, per t (Theorem Three).
    std::vector<double> tau_avg_prefix;
};

// Theorem Two:   E[r_t^2] <= exp(-2 a mu (t - tau')) 2B + 98 L^2 a (tau_mix + tau_max) B / mu, B = 9 sigma^2,
//                requires a <= mu / (196 L^2 tau_bar).
// Theorem Three: E[r_t^2] <= exp(-a mu t / (4 tau_avg + 4)) 6 sigma^2 + 1418 L^2 a tau_mix (eps + sigma)^2 / mu,
//                requires a <= mu / (1152 L^2 tau_mix) and eps = a.
// Evaluated at checkpoints t = tau', 2 tau', ...
BoundCheck check_theorem_bound(const EnsembleResult& ens, Theorem which, const TheoremInputs& in, double tol = 0.05);

nlohmann::json to_json(const BoundCheck& b);
nlohmann::json verification_report(const std::vector<BoundCheck>& checks);

}  // namespace delaysa
