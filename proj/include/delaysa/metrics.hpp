#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "delaysa/engine.hpp"

namespace delaysa {

struct EnsembleResult {
    std::vector<double> mean_sq_err;
    std::vector<double> ci_half_width;  // 95%, normal approximation; zeros for one seed
    int n_seeds = 0;                    // traces that entered the mean
    int diverged_count = 0;
};

EnsembleResult ensemble_mse(const std::vector<RunTrace>& traces);
EnsembleResult ensemble_mean(const std::vector<std::vector<double>>& series);

// Cumulative updates after step t (index 0 is 0), averaged over non-diverged traces.
std::vector<double> mean_updates_cumulative(const std::vector<RunTrace>& traces);

struct WeightScheme {
    std::vector<double> log_w;  // log w_t, w_t = (1 - alpha mu / 2)^-(t+1)
    double log_W = 0.0;         // log of sum_t w_t
    std::vector<double> probabilities() const;
};

WeightScheme make_weights(long T, double alpha, double mu);

std::pair<long, Vector> select_weighted_iterate(const RunTrace& trace, double alpha, double mu, Stream& rng);
// Index draw only; shared by the iterate selector and the frequency tests.
long draw_weighted_index(const WeightScheme& w, Stream& rng);

struct RateFit {
    double rate = 0.0;
    double floor = 0.0;
    long t_lo = 0;
    long t_hi = 0;
    double r_squared = 0.0;
    double intercept = 0.0;
};

// Tail mean as the floor; least squares of log(y - floor (1 - 1e-6)) against
// t over the first contiguous run of points with y >= threshold * floor.
RateFit fit_rate(const std::vector<double>& series, double floor_fraction = 0.1, double threshold = 3.0);

bool update_count_check(const std::vector<std::uint8_t>& mask, double tau_avg, long T);

// Mean of the last `fraction` of the series.
double tail_mean(const std::vector<double>& series, double fraction = 0.1);

}  // namespace delaysa
