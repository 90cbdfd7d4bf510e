#include "delaysa/schedule.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "delaysa/errors.hpp"

namespace delaysa {

DelaySchedule DelaySchedule::constant(int tau) {
    if (tau < 0) throw InvalidInstance("delay must be nonnegative");
    DelaySchedule s;
    s.kind = Kind::Constant;
    s.tau = tau;
    s.tau_max = tau;
    return s;
}

DelaySchedule DelaySchedule::uniform(int tau_max) {
    if (tau_max < 1) throw InvalidInstance("uniform delays need tau_max >= 1");
    DelaySchedule s;
    s.kind = Kind::UniformRandom;
    s.tau_max = tau_max;
    return s;
}

DelaySchedule DelaySchedule::bursty(int base, int spike, int period) {
    if (base < 0 || spike < 0 || period < 1) throw InvalidInstance("invalid bursty schedule");
    DelaySchedule s;
    s.kind = Kind::Bursty;
    s.base = base;
    s.spike = spike;
    s.period = period;
    s.tau_max = std::max(base, spike);
    return s;
}

DelaySchedule DelaySchedule::from_trace(std::vector<int> trace) {
    if (std::any_of(trace.begin(), trace.end(), [](int v) { return v < 0; }))
        throw InvalidInstance("trace delays must be nonnegative");
    DelaySchedule s;
    s.kind = Kind::Trace;
    s.tau_max = trace.empty() ? 0 : *std::max_element(trace.begin(), trace.end());
    s.trace = std::move(trace);
    return s;
}

int next_delay(const DelaySchedule& sched, long t, Stream& rng) {
    long raw = 0;
    switch (sched.kind) {
        case DelaySchedule::Kind::Constant:
            raw = sched.tau;
            break;
        case DelaySchedule::Kind::UniformRandom:
            raw = 1 + static_cast<long>(rng.below(static_cast<std::uint64_t>(sched.tau_max)));
            break;
        case DelaySchedule::Kind::Bursty:
            raw = (t % sched.period == 0) ? sched.spike : sched.base;
            break;
        case DelaySchedule::Kind::Trace:
            if (t >= static_cast<long>(sched.trace.size()))
                throw TraceExhausted("delay trace has " + std::to_string(sched.trace.size()) +
                                     " entries, needed index " + std::to_string(t));
            raw = sched.trace[t];
            break;
    }
    return static_cast<int>(std::min({raw, t, static_cast<long>(sched.tau_max)}));
}

std::vector<int> generate_delays(const DelaySchedule& sched, long T, Stream& rng) {
    std::vector<int> out(static_cast<std::size_t>(std::max(0L, T)));
    for (long t = 0; t < T; ++t) out[t] = next_delay(sched, t, rng);
    return out;
}

DelayStats stats(const std::vector<int>& delays) {
    if (delays.empty()) throw InvalidInstance("delay statistics need a nonempty sequence");
    DelayStats s;
    s.tau_max_observed = *std::max_element(delays.begin(), delays.end());
    s.tau_avg = std::accumulate(delays.begin(), delays.end(), 0.0) / static_cast<double>(delays.size());
    return s;
}

std::vector<int> load_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open delay trace '" + path + "'");
    std::vector<int> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        try {
            std::size_t used = 0;
            const int v = std::stoi(line.substr(b), &used);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigInvalid("bad delay trace line '" + line + "'");
        }
    }
    return out;
}

DelaySchedule schedule_from_json(const nlohmann::json& j) {
    const auto kind = j.value("kind", std::string("zero"));
    if (kind == "zero") return DelaySchedule::zero();
    if (kind == "constant") return DelaySchedule::constant(j.at("tau").get<int>());
    if (kind == "uniform") return DelaySchedule::uniform(j.at("tau_max").get<int>());
    if (kind == "bursty")
        return DelaySchedule::bursty(j.at("base").get<int>(), j.at("spike").get<int>(),
                                     j.at("period").get<int>());
    if (kind == "trace") {
        std::vector<int> tr = j.contains("trace_file")
                                  ? load_trace_file(j.at("trace_file").get<std::string>())
                                  : j.at("trace").get<std::vector<int>>();
        DelaySchedule s = DelaySchedule::from_trace(std::move(tr));
        if (j.contains("tau_max")) s.tau_max = j.at("tau_max").get<int>();
        return s;
    }
    throw ConfigInvalid("unknown delay kind '" + kind + "'");
}

nlohmann::json schedule_to_json(const DelaySchedule& s) {
    nlohmann::json j;
    switch (s.kind) {
        case DelaySchedule::Kind::Constant:
            j["kind"] = "constant";
            j["tau"] = s.tau;
            break;
        case DelaySchedule::Kind::UniformRandom:
            j["kind"] = "uniform";
            break;
        case DelaySchedule::Kind::Bursty:
            j["kind"] = "bursty";
            j["base"] = s.base;
            j["spike"] = s.spike;
            j["period"] = s.period;
            break;
        case DelaySchedule::Kind::Trace:
            j["kind"] = "trace";
            j["trace_length"] = s.trace.size();
            break;
    }
    j["tau_max"] = s.tau_max;
    return j;
}

}  // namespace delaysa
