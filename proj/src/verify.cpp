#include "delaysa/verify.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "delaysa/errors.hpp"

namespace delaysa {

std::vector<double> windowed_max(const std::vector<double>& series, long window) {
    std::vector<double> out(series.size());
    std::deque<long> dq;
    for (long t = 0; t < static_cast<long>(series.size()); ++t) {
        while (!dq.empty() && series[dq.back()] <= series[t]) dq.pop_back();
        dq.push_back(t);
        while (dq.front() < t - window) dq.pop_front();
        out[t] = series[dq.front()];
    }
    return out;
}

namespace {

double ratio(double lhs, double rhs) {
    if (lhs <= 0.0) return 0.0;
    if (rhs <= 0.0) return std::numeric_limits<double>::infinity();
    return lhs / rhs;
}

void finish(BoundCheck& b, const std::vector<double>& slack, const std::vector<long>& times) {
    b.max_ratio = 0.0;
    for (std::size_t i = 0; i < b.lhs_series.size(); ++i) {
        const double r = ratio(b.lhs_series[i] - (slack.empty() ? 0.0 : slack[i]), b.rhs_series[i]);
        if (r > b.max_ratio) {
            b.max_ratio = r;
            b.worst_t = times.empty() ? static_cast<long>(i) : times[i];
        }
    }
    b.holds = b.max_ratio <= 1.0 + b.tolerance;
}

}  // namespace

std::vector<BoundCheck> check_drift_lemma(const std::vector<RunTrace>& traces, const OperatorConstants& c,
                                          double alpha, int tau_mix, int tau_max, double tol) {
    std::vector<const RunTrace*> ok;
    for (const auto& tr : traces) {
        if (tr.diverged) continue;
        if (tr.iterates.empty()) throw MissingIterates("drift check needs recorded iterates");
        ok.push_back(&tr);
    }
    if (ok.empty()) throw AllDiverged("no usable traces for the drift check");
    const long T = ok.front()->T();
    const long tau_prime = 2L * tau_max + tau_mix;
    std::vector<std::vector<double>> sq;
    for (auto* tr : ok) sq.push_back(tr->sq_err);
    const auto r2 = windowed_max(ensemble_mean(sq).mean_sq_err, tau_prime);

    auto at = [](const RunTrace* tr, long j) -> const Vector& { return tr->iterates[std::max(0L, j)]; };
    const double n = static_cast<double>(ok.size());

    auto build = [&](const std::string& name, int scale, bool use_delays, long t0) {
        BoundCheck b;
        b.name = name;
        b.tau_prime = tau_prime;
        b.tolerance = tol;
        std::vector<double> slack;
        std::vector<long> times;
        const double coef = 2.0 * alpha * alpha * double(scale) * double(scale) * c.L * c.L;
        const long t_end = use_delays ? T - 1 : T;
        for (long t = t0; t <= t_end; ++t) {
            double m = 0.0, m2 = 0.0;
            for (auto* tr : ok) {
                const long lag = use_delays ? tr->delays[t] : scale;
                const double v = (at(tr, t) - at(tr, t - lag)).squaredNorm();
                m += v;
                m2 += v * v;
            }
            m /= n;
            const double var = ok.size() > 1 ? std::max(0.0, (m2 - n * m * m) / (n - 1.0)) : 0.0;
            b.lhs_series.push_back(m);
            b.rhs_series.push_back(coef * (2.0 * r2[t] + 3.0 * c.sigma * c.sigma));
            slack.push_back(1.96 * std::sqrt(var / n));
            times.push_back(t);
        }
        finish(b, slack, times);
        return b;
    };

    std::vector<BoundCheck> out;
    out.push_back(build("drift_tau_mix", std::max(tau_mix, 0), false, std::min<long>(tau_mix, T)));
    out.push_back(build("drift_tau_max", std::max(tau_max, 0), true, 0));
    return out;
}

BoundCheck check_uniform_boundedness(const EnsembleResult& ens, double sigma, double alpha, double mu, double L,
                                     int tau_bar, double tol) {
    const double limit = mu / (196.0 * L * L * std::max(tau_bar, 1));
    if (alpha > limit * (1.0 + 1e-12))
        throw StepSizeTooLarge("alpha " + std::to_string(alpha) + " exceeds mu/(196 L^2 tau_bar) = " +
                               std::to_string(limit));
    BoundCheck b;
    b.name = "uniform_boundedness";
    b.tolerance = tol;
    b.lhs_series = ens.mean_sq_err;
    b.rhs_series.assign(ens.mean_sq_err.size(), 9.0 * sigma * sigma);
    finish(b, {}, {});
    return b;
}

BoundCheck check_adaptive_drift(const RunTrace& trace, double alpha, double L, double epsilon, double sigma,
                                int tau) {
    BoundCheck b;
    b.name = "adaptive_drift_tau_" + std::to_string(tau);
    b.tolerance = 0.0;
    if (alpha * tau * L > 0.25) {
        b.applicable = false;
        b.note = "alpha tau L > 1/4, check skipped";
        return b;
    }
    if (trace.iterates.empty()) throw MissingIterates("adaptive drift check needs recorded iterates");
    const double beta = L * epsilon + L * sigma;
    const long n = static_cast<long>(trace.iterates.size());
    for (long t = 0; t < n; ++t) {
        const Vector& past = trace.iterates[std::max(0L, t - tau)];
        b.lhs_series.push_back((trace.iterates[t] - past).norm());
        b.rhs_series.push_back(4.0 * L * alpha * tau * (std::sqrt(trace.sq_err[t]) + 2.0 * beta));
    }
    finish(b, {}, {});
    return b;
}

BoundCheck check_theorem_bound(const EnsembleResult& ens, Theorem which, const TheoremInputs& in, double tol) {
    const auto& c = in.c;
    const double a = in.alpha;
    const long tau_prime = 2L * in.tau_max + in.tau_mix;
    const long T = static_cast<long>(ens.mean_sq_err.size()) - 1;
    BoundCheck b;
    b.tau_prime = tau_prime;
    b.tolerance = tol;
    std::vector<double> slack;
    std::vector<long> times;
    const long stride = std::max(tau_prime, 1L);

    if (which == Theorem::Two) {
        b.name = "theorem_two_bound";
        const int tau_bar = std::max({in.tau_mix, in.tau_max, 1});
        const double limit = c.mu / (196.0 * c.L * c.L * tau_bar);
        if (a > limit * (1.0 + 1e-12))
            throw StepSizeTooLarge("alpha exceeds mu/(196 L^2 tau_bar) = " + std::to_string(limit));
        if (T < 3L * tau_bar) {
            b.applicable = false;
            b.note = "horizon shorter than 3 tau_bar";
            return b;
        }
        const double B = 9.0 * c.sigma * c.sigma;
        const double var_term = 98.0 * c.L * c.L * a * (in.tau_mix + in.tau_max) * B / c.mu;
        for (long t = stride; t <= T; t += stride) {
            b.lhs_series.push_back(ens.mean_sq_err[t]);
            b.rhs_series.push_back(std::exp(-2.0 * a * c.mu * double(t - tau_prime)) * 2.0 * B + var_term);
            slack.push_back(ens.ci_half_width[t]);
            times.push_back(t);
        }
    } else {
        b.name = "theorem_three_bound";
        const double limit = c.mu / (1152.0 * c.L * c.L * std::max(in.tau_mix, 1));
        if (a > limit * (1.0 + 1e-12))
            throw StepSizeTooLarge("alpha exceeds mu/(1152 L^2 tau_mix) = " + std::to_string(limit));
        if (std::abs(in.epsilon - a) > 1e-15 * std::max(1.0, a)) {
            b.applicable = false;
            b.note = "explicit constants are derived for epsilon = alpha only";
            return b;
        }
        if (T < std::max(in.tau_mix, 1)) {
            b.applicable = false;
            b.note = "horizon shorter than tau_mix";
            return b;
        }
        const double var_term =
            1418.0 * c.L * c.L * a * in.tau_mix * (in.epsilon + c.sigma) * (in.epsilon + c.sigma) / c.mu;
        for (long t = stride; t <= T; t += stride) {
            const double tau_avg = (t - 1 < static_cast<long>(in.tau_avg_prefix.size())) ? in.tau_avg_prefix[t - 1]
                                                                                         : in.tau_avg_prefix.back();
            b.lhs_series.push_back(ens.mean_sq_err[t]);
            b.rhs_series.push_back(std::exp(-a * c.mu * double(t) / (4.0 * tau_avg + 4.0)) * 6.0 * c.sigma * c.sigma +
                                   var_term);
            slack.push_back(ens.ci_half_width[t]);
            times.push_back(t);
        }
    }
    finish(b, slack, times);
    return b;
}

nlohmann::json to_json(const BoundCheck& b) {
    nlohmann::json j;
    j["name"] = b.name;
    j["applicable"] = b.applicable;
    j["holds"] = b.holds;
    j["max_ratio"] = std::isfinite(b.max_ratio) ? nlohmann::json(b.max_ratio) : nlohmann::json("inf");
    j["worst_t"] = b.worst_t;
    j["window"] = b.tau_prime;
    j["tolerance"] = b.tolerance;
    if (!b.note.empty()) j["note"] = b.note;
    return j;
}

nlohmann::json verification_report(const std::vector<BoundCheck>& checks) {
    nlohmann::json j;
    j["checks"] = nlohmann::json::array();
    bool all = true;
    for (const auto& c : checks) {
        j["checks"].push_back(to_json(c));
        if (c.applicable && !c.holds) all = false;
    }
    j["all_hold"] = all;
    return j;
}

}  // namespace delaysa
