#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "delaysa/rng.hpp"

namespace delaysa {

// Generator of admissible delays 0 <= tau_t <= min(t, tau_max).
struct DelaySchedule {
    enum class Kind { Constant, UniformRandom, Bursty, Trace };

    Kind kind = Kind::Constant;
    int tau_max = 0;
    int tau = 0;     // Constant
    int base = 0;    // Bursty: delay between spikes
    int spike = 0;   // Bursty: delay at multiples of period
    int period = 1;  // Bursty
    std::vector<int> trace;

    static DelaySchedule constant(int tau);
    static DelaySchedule uniform(int tau_max);
    static DelaySchedule bursty(int base, int spike, int period);
    static DelaySchedule from_trace(std::vector<int> trace);
    static DelaySchedule zero() { return constant(0); }
};

struct DelayStats {
    int tau_max_observed = 0;
    double tau_avg = 0.0;
};

int next_delay(const DelaySchedule& sched, long t, Stream& rng);

// tau_0 .. tau_{T-1}.
std::vector<int> generate_delays(const DelaySchedule& sched, long T, Stream& rng);

DelayStats stats(const std::vector<int>& delays);

// One integer per line; blank lines ignored.
std::vector<int> load_trace_file(const std::string& path);

// {"kind": "constant"|"uniform"|"bursty"|"trace"|"zero", "tau", "tau_max",
//  "base", "spike", "period", "trace", "trace_file"}
DelaySchedule schedule_from_json(const nlohmann::json& j);
nlohmann::json schedule_to_json(const DelaySchedule& s);

}  // namespace delaysa
