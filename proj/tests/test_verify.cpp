#include <gtest/gtest.h>

#include <cmath>

#include "delaysa/errors.hpp"
#include "delaysa/verify.hpp"
#include "helpers.hpp"

using namespace delaysa;
using namespace delaysa::testing;

namespace {

std::vector<RunTrace> ensemble(const Operator& op, Rule rule, double alpha, long T, int seeds,
                               const DelaySchedule& sched, Vector theta0 = Vector()) {
    std::vector<RunTrace> out;
    for (int s = 0; s < seeds; ++s) {
        RunConfig c;
        c.rule = rule;
        c.alpha = alpha;
        c.T = T;
        c.seed = 500 + s;
        c.theta0 = theta0;
        c.record_iterates = true;
        out.push_back(run_rule(c, op, sched));
    }
    return out;
}

}  // namespace

TEST(WindowedMax, MatchesNaiveRescan) {
    Stream rng(1, 0, Purpose::Test);
    std::vector<double> y(2000);
    for (double& v : y) v = rng.normal();
    for (long w : {0L, 1L, 7L, 100L, 5000L}) {
        const auto fast = windowed_max(y, w);
        for (long t = 0; t < static_cast<long>(y.size()); ++t) {
            double m = -INFINITY;
            for (long l = std::max(0L, t - w); l <= t; ++l) m = std::max(m, y[l]);
            ASSERT_EQ(fast[t], m) << w << " " << t;
        }
    }
}

// ============================================================ drift lemma

TEST(DriftLemma, FrozenIteratesHold) {
    const SgdOperator op = scalar_sgd();
    const auto tr = ensemble(op, TimeVarying{}, 0.0, 300, 5, DelaySchedule::uniform(10));
    for (const auto& b : check_drift_lemma(tr, *op.analytic_constants(), 0.0, 3, 10)) {
        EXPECT_TRUE(b.holds) << b.name;
        EXPECT_EQ(b.max_ratio, 0.0);
    }
}

TEST(DriftLemma, ScalarSgdNonDelayed) {
    const SgdOperator op = scalar_sgd();
    const auto tr = ensemble(op, NonDelayed{}, 0.1, 2000, 50, DelaySchedule::zero());
    const auto checks = check_drift_lemma(tr, *op.analytic_constants(), 0.1, 1, 0);
    ASSERT_EQ(checks.size(), 2u);
    for (const auto& b : checks) {
        EXPECT_TRUE(b.holds) << b.name;
        EXPECT_LT(b.max_ratio, 1.0) << b.name;
    }
}

TEST(DriftLemma, TdWithDelays) {
    const TdOperator op = appendix_td();
    const auto tr = ensemble(op, TimeVarying{}, 0.01, 3000, 10, DelaySchedule::uniform(20));
    for (const auto& b : check_drift_lemma(tr, *op.analytic_constants(), 0.01, 4, 20)) EXPECT_TRUE(b.holds) << b.name;
}

TEST(DriftLemma, NeedsIterates) {
    RunTrace t;
    t.sq_err = {1, 1};
    t.update_mask = {1};
    t.delays = {0};
    EXPECT_THROW(check_drift_lemma({t}, OperatorConstants{}, 0.1, 1, 0), MissingIterates);
}

// ============================================================ uniform boundedness

TEST(UniformBoundedness, StartAtFixedPoint) {
    const SgdOperator op = random_sgd(2, 4, 2);
    const OperatorConstants c = *op.analytic_constants();
    const double a = c.mu / (196.0 * c.L * c.L * 10);
    const auto tr = ensemble(op, TimeVarying{}, a, 3000, 10, DelaySchedule::uniform(10), op.fixed_point());
    const EnsembleResult e = ensemble_mse(tr);
    EXPECT_EQ(e.mean_sq_err[0], 0.0);
    const BoundCheck b = check_uniform_boundedness(e, c.sigma, a, c.mu, c.L, 10);
    EXPECT_TRUE(b.holds);
}

TEST(UniformBoundedness, AppendixTdAtRuleStep) {
    const TdOperator op = appendix_td();
    const OperatorConstants c = *op.analytic_constants();
    const double a = c.mu / (196.0 * c.L * c.L * 200);
    const auto tr = ensemble(op, TimeVarying{}, a, 5000, 20, DelaySchedule::uniform(200));
    const BoundCheck b = check_uniform_boundedness(ensemble_mse(tr), c.sigma, a, c.mu, c.L, 200);
    EXPECT_TRUE(b.holds) << b.max_ratio;
}

TEST(UniformBoundedness, RefusesLargeStep) {
    const EnsembleResult e = ensemble_mean({{0.0, 0.0}});
    const double a = 10.0 / 196.0;
    EXPECT_THROW(check_uniform_boundedness(e, 1.0, a, 1.0, 1.0, 1), StepSizeTooLarge);
    EXPECT_NO_THROW(check_uniform_boundedness(e, 1.0, a / 10.0, 1.0, 1.0, 1));
}

// ============================================================ adaptive drift

TEST(AdaptiveDrift, NoMovementHoldsTrivially) {
    RunTrace t;
    t.iterates.assign(20, vec({1.0}));
    t.sq_err.assign(20, 1.0);
    const BoundCheck b = check_adaptive_drift(t, 0.01, 1.0, 0.01, 1.0, 5);
    EXPECT_TRUE(b.holds);
    EXPECT_EQ(b.max_ratio, 0.0);
}

TEST(AdaptiveDrift, ScalarSgdPathwise) {
    const SgdOperator op = scalar_sgd();
    const OperatorConstants c = *op.analytic_constants();
    const double a = 0.04;
    for (const auto& tr : ensemble(op, DelayAdaptive{a}, a, 3000, 5, DelaySchedule::uniform(20))) {
        const BoundCheck b = check_adaptive_drift(tr, a, c.L, a, c.sigma, 5);
        EXPECT_TRUE(b.applicable);
        EXPECT_TRUE(b.holds) << b.max_ratio;
        EXPECT_EQ(b.tolerance, 0.0);
    }
}

TEST(AdaptiveDrift, PreconditionSkips) {
    RunTrace t;
    t.iterates.assign(3, vec({0.0}));
    t.sq_err.assign(3, 0.0);
    const BoundCheck b = check_adaptive_drift(t, 0.1, 1.0, 0.1, 1.0, 3);
    EXPECT_FALSE(b.applicable);
}

// ============================================================ theorem bounds

TEST(TheoremBound, TwoAtUnitScales) {
    const SgdOperator op = scalar_sgd();
    TheoremInputs in;
    in.c = *op.analytic_constants();
    in.tau_mix = 1;
    in.tau_max = 1;
    in.alpha = in.c.mu / (196.0 * in.c.L * in.c.L);
    const auto tr = ensemble(op, TimeVarying{}, in.alpha, 4000, 50, DelaySchedule::constant(1));
    const BoundCheck b = check_theorem_bound(ensemble_mse(tr), Theorem::Two, in);
    EXPECT_TRUE(b.applicable);
    EXPECT_TRUE(b.holds);
    EXPECT_EQ(b.lhs_series.size(), 4000u / 3u);
}

TEST(TheoremBound, TwoTailBelowVarianceTerm) {
    const SgdOperator op = random_sgd(3, 4, 2);
    TheoremInputs in;
    in.c = *op.analytic_constants();
    in.tau_mix = 2;
    in.tau_max = 10;
    in.alpha = in.c.mu / (196.0 * in.c.L * in.c.L * 10);
    const auto tr = ensemble(op, TimeVarying{}, in.alpha, 40000, 10, DelaySchedule::uniform(10));
    const EnsembleResult e = ensemble_mse(tr);
    const double B = 9 * in.c.sigma * in.c.sigma;
    const double var_term = 98.0 * in.c.L * in.c.L * in.alpha * (in.tau_mix + in.tau_max) * B / in.c.mu;
    EXPECT_LE(tail_mean(e.mean_sq_err), var_term * 1.05);
    EXPECT_TRUE(check_theorem_bound(e, Theorem::Two, in).holds);
}

TEST(TheoremBound, ThreeWithEpsilonAlpha) {
    const SgdOperator op = scalar_sgd();
    TheoremInputs in;
    in.c = *op.analytic_constants();
    in.tau_mix = 1;
    in.tau_max = 20;
    in.alpha = in.c.mu / (1152.0 * in.c.L * in.c.L);
    in.epsilon = in.alpha;
    const auto sched = DelaySchedule::uniform(20);
    const auto tr = ensemble(op, DelayAdaptive{in.alpha}, in.alpha, 6000, 20, sched);
    in.tau_avg_prefix.assign(6000, 0.0);
    for (const auto& t : tr) {
        double acc = 0;
        for (long k = 0; k < 6000; ++k) {
            acc += t.delays[k];
            in.tau_avg_prefix[k] += acc / (k + 1) / tr.size();
        }
    }
    const BoundCheck b = check_theorem_bound(ensemble_mse(tr), Theorem::Three, in);
    EXPECT_TRUE(b.applicable);
    EXPECT_TRUE(b.holds);

    in.epsilon = 2 * in.alpha;
    EXPECT_FALSE(check_theorem_bound(ensemble_mse(tr), Theorem::Three, in).applicable);
}

TEST(TheoremBound, RefusesLargeStep) {
    const EnsembleResult e = ensemble_mean({std::vector<double>(100, 0.0)});
    TheoremInputs in;
    in.c = OperatorConstants{1.0, 1.0, 1.0};
    in.alpha = 0.1;
    in.epsilon = 0.1;
    in.tau_avg_prefix = {1.0};
    EXPECT_THROW(check_theorem_bound(e, Theorem::Two, in), StepSizeTooLarge);
    EXPECT_THROW(check_theorem_bound(e, Theorem::Three, in), StepSizeTooLarge);
}

// ============================================================ reporting

TEST(Checks, MonotoneInTolerance) {
    const EnsembleResult e = ensemble_mean({{1.0, 9.5, 9.2}});
    bool prev = false;
    for (double tol : {0.0, 0.01, 0.05, 0.1, 0.5}) {
        const BoundCheck b = check_uniform_boundedness(e, 1.0, 0.001, 1.0, 1.0, 1, tol);
        if (prev) EXPECT_TRUE(b.holds) << tol;
        prev = prev || b.holds;
        EXPECT_NEAR(b.max_ratio, 9.5 / 9.0, 1e-12);
    }
    EXPECT_TRUE(prev);
}

TEST(Checks, ReportJson) {
    BoundCheck ok, bad, skipped;
    ok.name = "a";
    bad.name = "b";
    bad.holds = false;
    skipped.name = "c";
    skipped.holds = false;
    skipped.applicable = false;
    EXPECT_FALSE(verification_report({ok, bad}).at("all_hold").get<bool>());
    const auto j = verification_report({ok, skipped});
    EXPECT_TRUE(j.at("all_hold").get<bool>());
    EXPECT_EQ(j.at("checks").size(), 2u);
    EXPECT_EQ(j.at("checks")[0].at("name"), "a");
}
