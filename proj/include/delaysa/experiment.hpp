#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "delaysa/metrics.hpp"
#include "delaysa/mixing.hpp"
#include "delaysa/verify.hpp"

namespace delaysa {

struct AlgorithmConfig {
    std::string name;
    Rule rule = NonDelayed{};
    StepSizeMode step = ManualStep{0.1};
    bool epsilon_is_alpha = false;  // adaptive rule with "epsilon": "alpha"
};

struct SweepConfig {
    std::string param;  // tau | tau_max | alpha | epsilon
    std::vector<double> values;
};

struct ExperimentConfig {
    std::string name = "experiment";
    nlohmann::json chain;    // chain recipe or explicit matrices; may be null for q problems
    nlohmann::json problem;  // {"kind": "td"|"q"|"sgd", ...}
    nlohmann::json delay;    // schedule fragment
    std::vector<AlgorithmConfig> algorithms;
    long T = 20000;
    int n_seeds = 20;
    std::uint64_t seed_base = 0;
    bool record_iterates = false;
    bool record_err_norms = false;
    double floor_fraction = 0.1;
    double fit_threshold = 3.0;
    long csv_stride = 1;
    std::optional<SweepConfig> sweep;
    nlohmann::json raw;
};

// Throws ConfigInvalid with a readable message on schema errors.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct Problem {
    std::unique_ptr<Operator> op;
    OperatorConstants constants;
    std::string constants_source;  // "analytic" or "audited"
    std::vector<Vector> grid;
};

// Builds chain, operator and constants. Assumption failures surface as ConfigInvalid.
Problem build_problem(const ExperimentConfig& cfg);
DelaySchedule build_schedule(const ExperimentConfig& cfg);

struct AlgorithmResult {
    AlgorithmConfig config;
    StepSizeChoice step;
    double epsilon = 0.0;
    std::vector<RunTrace> traces;
    std::optional<EnsembleResult> ensemble;  // empty when every run diverged
    std::vector<double> updates_cumulative;
    int diverged = 0;
    double final_window_mse = 0.0;
    std::optional<RateFit> fit;
    std::vector<std::optional<double>> per_seed_rates;
    double update_fraction = 0.0;
    double tau_avg = 0.0;  // mean over seeds
    int tau_max_observed = 0;
};

struct ExperimentResult {
    ExperimentConfig config;
    double r0_sq = 0.0;
    OperatorConstants constants;
    std::string constants_source;
    std::vector<AlgorithmResult> algorithms;
    bool any_all_diverged() const;
};

// Worker count: explicit request, else DELAYSA_THREADS, else hardware threads;
// DELAYSA_THREADS also caps an explicit request.
int worker_count(int requested);

// Runs every (algorithm, seed) pair. Traces are kept when keep_traces is set
// (iterates only if the config records them).
ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads, bool keep_traces = false);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Problem& problem, int threads,
                                bool keep_traces = false);

void write_results_csv(const ExperimentResult& r, const std::string& path);
nlohmann::json summary_json(const ExperimentResult& r);
void write_plot_svg(const ExperimentResult& r, const std::string& path);
// results.csv, summary.json, plot.svg under dir.
void write_run_artifacts(const ExperimentResult& r, const std::string& dir);

// Copy of cfg with the sweep parameter set to value.
ExperimentConfig apply_sweep_value(const ExperimentConfig& cfg, const std::string& param, double value);

struct ScalingRow {
    double value = 0.0;
    std::string algo;
    double alpha = 0.0;
    int tau_mix = 0;
    int tau_bar = 0;
    std::optional<RateFit> fit;
    double final_mse = 0.0;
};

struct SweepResult {
    SweepConfig sweep;
    std::vector<ScalingRow> rows;
    // Per algorithm: slope of log(rate) against log(tau_bar), when at least two rates exist.
    std::vector<std::pair<std::string, double>> slopes;
};

SweepResult run_sweep(const ExperimentConfig& cfg, const SweepConfig& sweep, int threads,
                      const std::string& out_dir = "");
void write_scaling_csv(const SweepResult& s, const std::string& path);

struct VerificationResult {
    std::vector<BoundCheck> checks;
    nlohmann::json report;
    bool all_hold = true;
};

// Assumption audits plus every applicable bound check on a fresh run with iterates.
VerificationResult run_verification(const ExperimentConfig& cfg, int threads);

// The three qualitative claims about the non-delayed, time-varying and
// adaptive curves of one experiment.
struct OrderingReport {
    bool found = false;  // all three rules present
    bool all_reduce_10x = false;
    bool final_order = false;  // non-delayed <= adaptive < time-varying
    bool rate_order = false;   // rate(non-delayed) >= rate(time-varying)
    double nd_final = 0, tv_final = 0, ad_final = 0;
    std::optional<double> nd_rate, tv_rate;
    std::string detail;
};

OrderingReport appendix_orderings(const ExperimentResult& r);

// Least-squares slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace delaysa
