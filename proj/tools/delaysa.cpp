// delaysa: experiment runner for delayed stochastic approximation.
//
//   delaysa run|sweep|verify|reproduce-appendix --config <path> [--out <dir>] [--seeds N] [--threads N]
//
// Exit codes: 0 ok, 2 config error, 3 divergence, 4 verification failure.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "delaysa/errors.hpp"
#include "delaysa/experiment.hpp"

#ifndef DELAYSA_CONFIG_DIR
#define DELAYSA_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;
using namespace delaysa;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDiverged = 3;
constexpr int kVerifyFailed = 4;

struct CommonArgs {
    std::string config;
    std::string out = "out";
    int seeds = 0;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool config_required = true) {
    auto* opt = cmd->add_option("--config", a.config, "experiment config (JSON)");
    if (config_required) opt->required();
    cmd->add_option("--out", a.out, "output directory");
    cmd->add_option("--seeds", a.seeds, "override n_seeds");
    cmd->add_option("--threads", a.threads, "worker threads (capped by DELAYSA_THREADS)");
}

ExperimentConfig load(const CommonArgs& a) {
    ExperimentConfig cfg = load_config(a.config);
    if (a.seeds > 0) cfg.n_seeds = a.seeds;
    return cfg;
}

void print_summary(const ExperimentResult& r) {
    std::cout << r.config.name << ": r0^2 = " << r.r0_sq << "\n";
    for (const auto& a : r.algorithms) {
        std::cout << "  " << a.config.name << ": alpha=" << a.step.alpha << " tau_mix=" << a.step.tau_mix;
        if (a.ensemble) {
            std::cout << " final_mse=" << a.final_window_mse << " update_fraction=" << a.update_fraction;
            if (a.fit) std::cout << " rate=" << a.fit->rate;
        } else {
            std::cout << " all runs diverged";
        }
        if (a.diverged) std::cout << " diverged=" << a.diverged;
        std::cout << "\n";
    }
}

int cmd_run(const CommonArgs& a) {
    const ExperimentConfig cfg = load(a);
    const ExperimentResult r = run_experiment(cfg, a.threads);
    write_run_artifacts(r, a.out);
    print_summary(r);
    return r.any_all_diverged() ? kDiverged : kOk;
}

int cmd_sweep(const CommonArgs& a, const std::string& param, const std::vector<double>& values) {
    const ExperimentConfig cfg = load(a);
    SweepConfig s;
    if (cfg.sweep) s = *cfg.sweep;
    if (!param.empty()) s.param = param;
    if (!values.empty()) s.values = values;
    if (s.param.empty() || s.values.empty()) throw ConfigInvalid("sweep needs a parameter and values");
    fs::create_directories(a.out);
    const SweepResult sr = run_sweep(cfg, s, a.threads, a.out);
    write_scaling_csv(sr, (fs::path(a.out) / "scaling.csv").string());
    nlohmann::json j;
    j["param"] = s.param;
    j["values"] = s.values;
    j["slopes"] = nlohmann::json::object();
    for (const auto& [name, slope] : sr.slopes) j["slopes"][name] = slope;
    std::ofstream(fs::path(a.out) / "scaling.json") << j.dump(2) << '\n';
    for (const auto& row : sr.rows) {
        std::cout << s.param << "=" << row.value << " " << row.algo << " tau_bar=" << row.tau_bar
                  << " alpha=" << row.alpha << " rate=";
        if (row.fit) std::cout << row.fit->rate;
        else std::cout << "n/a";
        std::cout << "\n";
    }
    for (const auto& [name, slope] : sr.slopes)
        std::cout << "log-log slope of rate vs tau_bar (" << name << "): " << slope << "\n";
    return kOk;
}

int cmd_verify(const CommonArgs& a) {
    const ExperimentConfig cfg = load(a);
    const VerificationResult vr = run_verification(cfg, a.threads);
    fs::create_directories(a.out);
    std::ofstream(fs::path(a.out) / "verification.json") << vr.report.dump(2) << '\n';
    for (const auto& c : vr.checks) {
        const char* status = !c.applicable ? "SKIP" : (c.holds ? "OK  " : "FAIL");
        std::cout << status << " " << c.name << " max_ratio=" << c.max_ratio;
        if (!c.note.empty()) std::cout << " (" << c.note << ")";
        std::cout << "\n";
    }
    return vr.all_hold ? kOk : kVerifyFailed;
}

int cmd_reproduce(CommonArgs a) {
    if (a.config.empty()) a.config = (fs::path(DELAYSA_CONFIG_DIR) / "appendix_h.json").string();
    const ExperimentConfig cfg = load(a);
    const ExperimentResult r = run_experiment(cfg, a.threads);
    write_run_artifacts(r, a.out);
    print_summary(r);
    const OrderingReport o = appendix_orderings(r);
    std::cout << (o.all_reduce_10x ? "PASS" : "FAIL") << " every curve ends at least 10x below r0^2\n";
    std::cout << (o.final_order ? "PASS" : "FAIL") << " final MSE: non-delayed <= adaptive < time-varying\n";
    std::cout << (o.rate_order ? "PASS" : "FAIL") << " decay rate: non-delayed >= time-varying\n";
    std::cout << o.detail << "\n";
    return (o.all_reduce_10x && o.final_order && o.rate_order) ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"delayed stochastic approximation experiments"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args, verify_args, repro_args;
    std::string sweep_param;
    std::vector<double> sweep_values;
    auto* run = app.add_subcommand("run", "run every algorithm of a config over its seeds");
    add_common(run, run_args);
    auto* sweep = app.add_subcommand("sweep", "repeat a run over values of one parameter");
    add_common(sweep, sweep_args);
    sweep->add_option("--param", sweep_param, "tau, tau_max, alpha or epsilon");
    sweep->add_option("--values", sweep_values, "values to sweep")->delimiter(',');
    auto* verify = app.add_subcommand("verify", "audit assumptions and check the lemma bounds");
    add_common(verify, verify_args);
    auto* repro = app.add_subcommand("reproduce-appendix", "run the bundled TD comparison and check its orderings");
    add_common(repro, repro_args, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) return cmd_run(run_args);
        if (*sweep) return cmd_sweep(sweep_args, sweep_param, sweep_values);
        if (*verify) return cmd_verify(verify_args);
        if (*repro) return cmd_reproduce(repro_args);
    } catch (const ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const AllDiverged& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kDiverged;
    } catch (const NonFinite& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kDiverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kOk;
}
