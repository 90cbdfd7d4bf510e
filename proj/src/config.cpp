#include <fstream>
#include <limits>
#include <sstream>

#include "delaysa/errors.hpp"
#include "delaysa/experiment.hpp"

namespace delaysa {

namespace {

using json = nlohmann::json;

StepSizeMode parse_step(const json& j) {
    const auto mode = j.value("mode", std::string("manual"));
    if (mode == "manual") {
        if (!j.contains("alpha")) throw ConfigInvalid("manual step size needs \"alpha\"");
        const double a = j.at("alpha").get<double>();
        if (!(a > 0.0)) throw ConfigInvalid("alpha must be positive");
        return ManualStep{a};
    }
    if (mode == "theorem") {
        const double C = j.value("C", 2.0);
        if (!(C >= 2.0)) throw ConfigInvalid("theorem step-size rule needs C >= 2");
        return TheoremRule{C};
    }
    throw ConfigInvalid("unknown step-size mode '" + mode + "'");
}

AlgorithmConfig parse_algorithm(const json& j, const std::optional<StepSizeMode>& default_step) {
    AlgorithmConfig a;
    const auto rule = j.at("rule").get<std::string>();
    a.name = j.value("name", rule);
    if (rule == "non_delayed") {
        a.rule = NonDelayed{};
    } else if (rule == "constant_delay") {
        const int tau = j.at("tau").get<int>();
        if (tau < 0) throw ConfigInvalid("constant delay must be >= 0");
        a.rule = ConstantDelay{tau};
    } else if (rule == "time_varying") {
        a.rule = TimeVarying{};
    } else if (rule == "adaptive") {
        const json& e = j.at("epsilon");
        if (e.is_string()) {
            const auto s = e.get<std::string>();
            if (s == "alpha") {
                a.epsilon_is_alpha = true;
                a.rule = DelayAdaptive{0.0};
            } else if (s == "inf") {
                a.rule = DelayAdaptive{std::numeric_limits<double>::infinity()};
            } else {
                throw ConfigInvalid("epsilon must be a number, \"alpha\" or \"inf\"");
            }
        } else {
            const double eps = e.get<double>();
            if (!(eps >= 0.0)) throw ConfigInvalid("epsilon must be >= 0");
            a.rule = DelayAdaptive{eps};
        }
    } else {
        throw ConfigInvalid("unknown rule '" + rule + "'");
    }
    if (j.contains("step_size")) a.step = parse_step(j.at("step_size"));
    else if (default_step) a.step = *default_step;
    else throw ConfigInvalid("algorithm '" + a.name + "' has no step size");
    return a;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    try {
        if (!j.is_object()) throw ConfigInvalid("config must be a JSON object");
        ExperimentConfig c;
        c.raw = j;
        c.name = j.value("name", std::string("experiment"));
        c.chain = j.value("chain", json());
        c.problem = j.at("problem");
        c.delay = j.value("delay", json{{"kind", "zero"}});
        c.T = j.value("T", 20000L);
        c.n_seeds = j.value("n_seeds", 20);
        c.seed_base = j.value("seed_base", std::uint64_t{0});
        if (j.contains("record")) {
            c.record_iterates = j["record"].value("iterates", false);
            c.record_err_norms = j["record"].value("err_norms", false);
        }
        if (j.contains("fit")) {
            c.floor_fraction = j["fit"].value("floor_fraction", 0.1);
            c.fit_threshold = j["fit"].value("threshold", 3.0);
        }
        c.csv_stride = j.value("csv_stride", 1L);
        std::optional<StepSizeMode> default_step;
        if (j.contains("step_size")) default_step = parse_step(j.at("step_size"));
        const json& algos = j.at("algorithms");
        if (!algos.is_array() || algos.empty()) throw ConfigInvalid("\"algorithms\" must be a nonempty array");
        for (const auto& a : algos) c.algorithms.push_back(parse_algorithm(a, default_step));
        for (std::size_t i = 0; i < c.algorithms.size(); ++i)
            for (std::size_t k = 0; k < i; ++k)
                if (c.algorithms[i].name == c.algorithms[k].name)
                    throw ConfigInvalid("duplicate algorithm name '" + c.algorithms[i].name + "'");
        if (j.contains("sweep")) {
            SweepConfig s;
            s.param = j["sweep"].at("param").get<std::string>();
            s.values = j["sweep"].at("values").get<std::vector<double>>();
            c.sweep = s;
        }
        if (c.T < 1) throw ConfigInvalid("T must be >= 1");
        if (c.n_seeds < 1) throw ConfigInvalid("n_seeds must be >= 1");
        if (c.csv_stride < 1) throw ConfigInvalid("csv_stride must be >= 1");
        if (!(c.floor_fraction > 0.0 && c.floor_fraction < 1.0)) throw ConfigInvalid("fit.floor_fraction must lie in (0,1)");
        return c;
    } catch (const ConfigInvalid&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("config schema error: ") + e.what());
    } catch (const Error& e) {
        throw ConfigInvalid(e.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot read config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigInvalid("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

}  // namespace delaysa
