#pragma once

#include <cstdint>
#include <limits>
#include <variant>
#include <vector>

#include "delaysa/operators.hpp"
#include "delaysa/schedule.hpp"

namespace delaysa {

struct NonDelayed {};
struct ConstantDelay {
    int tau = 0;
};
struct TimeVarying {};
struct DelayAdaptive {
    double epsilon = 0.0;
};
using Rule = std::variant<NonDelayed, ConstantDelay, TimeVarying, DelayAdaptive>;

struct ManualStep {
    double alpha = 0.0;
};
// alpha = mu / (C L^2 tau_bar)
struct TheoremRule {
    double C = 2.0;
};
using StepSizeMode = std::variant<ManualStep, TheoremRule>;

struct RunConfig {
    Rule rule = NonDelayed{};
    double alpha = 0.0;
    long T = 1;
    Vector theta0;  // empty means the zero vector
    std::uint64_t seed = 0;
    std::uint64_t run = 0;
    bool record_iterates = false;
    bool record_err_norms = false;
    // Keeps the full history and checks every ring-buffer lookup against it.
    bool shadow_check = false;
    // Time-varying and adaptive rules: hold theta at theta0 for t < freeze_until.
    long freeze_until = 0;
};

struct RunTrace {
    std::vector<double> sq_err;          // T+1
    std::vector<std::uint8_t> update_mask;  // T
    std::vector<int> delays;             // T
    std::vector<double> err_norms;       // T when recorded
    std::vector<Vector> iterates;        // T+1 when recorded
    bool diverged = false;
    long diverged_at = -1;
    double alpha = 0.0;

    long T() const { return static_cast<long>(update_mask.size()); }
};

// Ring of the last `capacity` (theta, observation) pairs.
class HistoryBuffer {
public:
    struct Entry {
        long t = -1;
        Vector theta;
        Observation obs;
    };

    HistoryBuffer(std::size_t capacity, int dim);

    void push(long t, const Vector& theta, const Observation& obs);
    // Entry written at time t; throws std::out_of_range if it has been overwritten.
    const Entry& lookup(long t) const;
    std::size_t capacity() const { return ring_.size(); }

private:
    std::vector<Entry> ring_;
    long newest_ = -1;
};

// theta + alpha g(theta, obs). A non-finite result is reported by the run
// loop as divergence, not raised here.
Vector step_non_delayed(const Vector& theta, const Observation& obs, double alpha, const Operator& op);

RunTrace run_non_delayed(const RunConfig& cfg, const Operator& op);
RunTrace run_constant_delay(const RunConfig& cfg, const Operator& op);
RunTrace run_time_varying(const RunConfig& cfg, const Operator& op, const DelaySchedule& sched);
RunTrace run_delay_adaptive(const RunConfig& cfg, const Operator& op, const DelaySchedule& sched);
// Dispatches on cfg.rule.
RunTrace run_rule(const RunConfig& cfg, const Operator& op, const DelaySchedule& sched);

struct StepSizeChoice {
    double alpha = 0.0;
    int tau_mix = -1;  // -1 when the mixing time could not be computed
    int tau_bar = 1;
};

// Delay scale entering the step-size rule: tau_mix for the non-delayed and
// adaptive rules, max(tau_mix, tau) for constant delay, max(tau_mix, tau_max)
// for time-varying delays.
int tau_bar_for(const Rule& rule, int tau_mix, int tau_max);

double theorem_alpha(double C, const OperatorConstants& c, int tau_bar);

// Manual: alpha as given, tau_mix evaluated there. TheoremRule: two passes of
// alpha -> tau_mix(alpha) -> alpha starting from tau_mix = 1.
StepSizeChoice resolve_step_size(const StepSizeMode& mode, const Rule& rule, const Operator& op,
                                 const OperatorConstants& c, int tau_max,
                                 const std::vector<Vector>& grid);

}  // namespace delaysa
