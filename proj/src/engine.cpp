#include "delaysa/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "delaysa/errors.hpp"
#include "delaysa/mixing.hpp"

namespace delaysa {

HistoryBuffer::HistoryBuffer(std::size_t capacity, int dim) : ring_(std::max<std::size_t>(1, capacity)) {
    for (auto& e : ring_) e.theta = Vector::Zero(dim);
}

void HistoryBuffer::push(long t, const Vector& theta, const Observation& obs) {
    Entry& e = ring_[static_cast<std::size_t>(t) % ring_.size()];
    e.t = t;
    e.theta = theta;
    e.obs = obs;
    newest_ = t;
}

const HistoryBuffer::Entry& HistoryBuffer::lookup(long t) const {
    const Entry& e = ring_[static_cast<std::size_t>(t) % ring_.size()];
    if (t < 0 || t > newest_ || e.t != t)
        throw std::out_of_range("history entry " + std::to_string(t) + " is not in the buffer");
    return e;
}

Vector step_non_delayed(const Vector& theta, const Observation& obs, double alpha, const Operator& op) {
    return theta + alpha * op.noisy_update(theta, obs);
}

namespace {

enum class Mode { Plain, Constant, Varying, Adaptive };

int initial_state(const MarkovChain& chain, Stream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (int s = 0; s < chain.n(); ++s) {
        acc += chain.pi()(s);
        if (u < acc) return s;
    }
    return chain.n() - 1;
}

bool same_obs(const Observation& a, const Observation& b) {
    return a.index() == b.index() &&
           std::visit(
               [&](const auto& x) {
                   using T = std::decay_t<decltype(x)>;
                   return x == std::get<T>(b);
               },
               a);
}

RunTrace run_loop(const RunConfig& cfg, const Operator& op, const DelaySchedule* sched, Mode mode,
                  int tau_const, double eps) {
    if (cfg.T < 1) throw InvalidInstance("horizon T must be >= 1");
    if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) throw InvalidInstance("alpha must be finite and >= 0");
    const int d = op.dim();
    const Vector theta0 = cfg.theta0.size() == 0 ? Vector::Zero(d) : cfg.theta0;
    if (theta0.size() != d) throw DimensionMismatch("theta0 has the wrong dimension");
    const Vector& star = op.fixed_point();
    const MarkovChain& chain = op.chain();

    Stream path_rng(cfg.seed, cfg.run, Purpose::Path);
    Stream reward_rng(cfg.seed, cfg.run, Purpose::Reward);
    Stream delay_rng(cfg.seed, cfg.run, Purpose::Delay);
    Stream start_rng(cfg.seed, cfg.run, Purpose::Start);

    std::size_t capacity = 1;
    long freeze = cfg.freeze_until;
    if (mode == Mode::Constant) {
        capacity = static_cast<std::size_t>(tau_const) + 1;
        freeze = tau_const;
    } else if (mode == Mode::Varying || mode == Mode::Adaptive) {
        capacity = static_cast<std::size_t>(sched->tau_max) + 1;
    }
    HistoryBuffer buf(capacity, d);

    const long T = cfg.T;
    RunTrace tr;
    tr.alpha = cfg.alpha;
    tr.sq_err.assign(T + 1, 0.0);
    tr.update_mask.assign(T, 0);
    tr.delays.assign(T, 0);
    if (cfg.record_err_norms) tr.err_norms.assign(T, 0.0);
    if (cfg.record_iterates) tr.iterates.reserve(T + 1);

    std::vector<Vector> shadow_theta;
    std::vector<Observation> shadow_obs;

    Vector theta = theta0;
    tr.sq_err[0] = (theta - star).squaredNorm();
    if (cfg.record_iterates) tr.iterates.push_back(theta);

    int x = initial_state(chain, start_rng);
    for (long t = 0; t < T; ++t) {
        const int xn = sample_next(chain, x, path_rng);
        const Observation obs = op.observe(x, xn, reward_rng);
        x = xn;

        int tau = 0;
        if (mode == Mode::Constant) tau = tau_const;
        else if (mode == Mode::Varying || mode == Mode::Adaptive) tau = next_delay(*sched, t, delay_rng);
        tr.delays[t] = tau;

        buf.push(t, theta, obs);
        if (cfg.shadow_check) {
            shadow_theta.push_back(theta);
            shadow_obs.push_back(obs);
        }

        if (t < freeze) {
            tr.update_mask[t] = 1;
            if (cfg.record_err_norms && t - tau >= 0) {
                const auto& old = buf.lookup(t - tau);
                tr.err_norms[t] = (op.noisy_update(theta, obs) - op.noisy_update(old.theta, old.obs)).norm();
            }
            theta = theta0;
        } else if (mode == Mode::Plain) {
            tr.update_mask[t] = 1;
            theta = step_non_delayed(theta, obs, cfg.alpha, op);
        } else {
            const auto& old = buf.lookup(t - tau);
            if (cfg.shadow_check) {
                const std::size_t k = static_cast<std::size_t>(t - tau);
                if (!(old.theta.array() == shadow_theta[k].array()).all() || !same_obs(old.obs, shadow_obs[k]))
                    throw std::logic_error("history buffer disagrees with full history at t=" + std::to_string(t));
            }
            const Vector g = op.noisy_update(old.theta, old.obs);
            if (cfg.record_err_norms) tr.err_norms[t] = (op.noisy_update(theta, obs) - g).norm();
            bool fire = true;
            if (mode == Mode::Adaptive) fire = (theta - old.theta).norm() <= eps;
            tr.update_mask[t] = fire ? 1 : 0;
            if (fire) theta = theta + cfg.alpha * g;
        }

        const double e2 = (theta - star).squaredNorm();
        if (!std::isfinite(e2)) {
            tr.diverged = true;
            tr.diverged_at = t + 1;
            std::fill(tr.sq_err.begin() + t + 1, tr.sq_err.end(), std::numeric_limits<double>::quiet_NaN());
            break;
        }
        tr.sq_err[t + 1] = e2;
        if (cfg.record_iterates) tr.iterates.push_back(theta);
    }
    return tr;
}

}  // namespace

RunTrace run_non_delayed(const RunConfig& cfg, const Operator& op) {
    return run_loop(cfg, op, nullptr, Mode::Plain, 0, 0.0);
}

RunTrace run_constant_delay(const RunConfig& cfg, const Operator& op) {
    const auto* r = std::get_if<ConstantDelay>(&cfg.rule);
    const int tau = r ? r->tau : 0;
    if (tau < 0) throw InvalidInstance("constant delay must be nonnegative");
    return run_loop(cfg, op, nullptr, Mode::Constant, tau, 0.0);
}

RunTrace run_time_varying(const RunConfig& cfg, const Operator& op, const DelaySchedule& sched) {
    return run_loop(cfg, op, &sched, Mode::Varying, 0, 0.0);
}

RunTrace run_delay_adaptive(const RunConfig& cfg, const Operator& op, const DelaySchedule& sched) {
    const auto* r = std::get_if<DelayAdaptive>(&cfg.rule);
    const double eps = r ? r->epsilon : 0.0;
    if (!(eps >= 0.0)) throw InvalidInstance("epsilon must be >= 0");
    return run_loop(cfg, op, &sched, Mode::Adaptive, 0, eps);
}

RunTrace run_rule(const RunConfig& cfg, const Operator& op, const DelaySchedule& sched) {
    return std::visit(
        [&](const auto& r) -> RunTrace {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, NonDelayed>) return run_non_delayed(cfg, op);
            else if constexpr (std::is_same_v<R, ConstantDelay>) return run_constant_delay(cfg, op);
            else if constexpr (std::is_same_v<R, TimeVarying>) return run_time_varying(cfg, op, sched);
            else return run_delay_adaptive(cfg, op, sched);
        },
        cfg.rule);
}

int tau_bar_for(const Rule& rule, int tau_mix, int tau_max) {
    const int m = std::max(tau_mix, 1);
    if (const auto* c = std::get_if<ConstantDelay>(&rule)) return std::max(m, c->tau);
    if (std::holds_alternative<TimeVarying>(rule)) return std::max(m, tau_max);
    return m;
}

double theorem_alpha(double C, const OperatorConstants& c, int tau_bar) {
    return c.mu / (C * c.L * c.L * static_cast<double>(std::max(tau_bar, 1)));
}

StepSizeChoice resolve_step_size(const StepSizeMode& mode, const Rule& rule, const Operator& op,
                                 const OperatorConstants& c, int tau_max,
                                 const std::vector<Vector>& grid) {
    StepSizeChoice out;
    if (const auto* m = std::get_if<ManualStep>(&mode)) {
        if (!(m->alpha > 0.0)) throw InvalidInstance("manual step size must be positive");
        out.alpha = m->alpha;
        try {
            out.tau_mix = operator_mixing_time(op, out.alpha, grid);
        } catch (const CapExceeded&) {
            out.tau_mix = -1;
        }
        out.tau_bar = tau_bar_for(rule, out.tau_mix, tau_max);
        return out;
    }
    const double C = std::get<TheoremRule>(mode).C;
    if (!(C >= 2.0)) throw InvalidInstance("theorem rule needs C >= 2");
    int tau_mix = 1;
    double alpha = theorem_alpha(C, c, tau_bar_for(rule, tau_mix, tau_max));
    for (int pass = 0; pass < 2; ++pass) {
        tau_mix = operator_mixing_time(op, alpha, grid);
        alpha = theorem_alpha(C, c, tau_bar_for(rule, tau_mix, tau_max));
    }
    out.alpha = alpha;
    out.tau_mix = tau_mix;
    out.tau_bar = tau_bar_for(rule, tau_mix, tau_max);
    return out;
}

}  // namespace delaysa
