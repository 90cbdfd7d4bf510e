#include <gtest/gtest.h>

#include <cmath>

#include "delaysa/errors.hpp"
#include "delaysa/operators.hpp"
#include "helpers.hpp"

using namespace delaysa;
using namespace delaysa::testing;

namespace {

// Stationary average of g over transitions, built from scratch.
Vector td_mean_field_oracle(const TdOperator& op, const Vector& theta) {
    const auto& c = op.chain();
    Vector acc = Vector::Zero(op.dim());
    for (int s = 0; s < c.n(); ++s)
        for (int sn = 0; sn < c.n(); ++sn) {
            const double w = c.pi()(s) * c.P()(s, sn);
            if (w == 0.0) continue;
            acc += w * op.noisy_update(theta, TdObs{c.reward_mean()(s, sn), s, sn});
        }
    return acc;
}

Vector random_theta(Stream& rng, int d, double scale) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = scale * rng.normal();
    return v;
}

}  // namespace

// ============================================================ noisy updates

TEST(NoisyUpdate, TdByHand) {
    const TdOperator op(two_state(0.5, 0.5), Matrix::Identity(2, 2), 0.5);
    const Vector g = op.noisy_update(vec({1, 2}), TdObs{1.0, 0, 1});
    // delta = 1 + 0.5 * 2 - 1 = 1, times phi(0) = e_0
    EXPECT_DOUBLE_EQ(g(0), 1.0);
    EXPECT_DOUBLE_EQ(g(1), 0.0);
}

TEST(NoisyUpdate, SgdByHand) {
    const SgdOperator op = scalar_sgd();
    EXPECT_DOUBLE_EQ(op.noisy_update(vec({1}), SgdObs{1})(0), 1.0);
    EXPECT_DOUBLE_EQ(op.noisy_update(vec({1}), SgdObs{0})(0), -1.0);
}

TEST(NoisyUpdate, QByHand) {
    const QOperator op = baird_like(0.99);
    // Greedy at theta = 1 picks the feature-2 action: -1 + 0.99 * 2 - 1.
    EXPECT_NEAR(op.noisy_update(vec({1}), QObs{-1.0, 0, 0, 0})(0), -0.02, 1e-15);
    // theta = -1 picks the feature-1 action: (-1 - 0.99 + 2) * 2.
    EXPECT_NEAR(op.noisy_update(vec({-1}), QObs{-1.0, 0, 1, 0})(0), 0.02, 1e-15);
}

TEST(NoisyUpdate, QGreedyTiesGoLow) {
    const QOperator op = baird_like();
    EXPECT_EQ(op.greedy_action(vec({0}), 0), 0);
    EXPECT_EQ(op.greedy_action(vec({1}), 0), 1);
    EXPECT_EQ(op.greedy_action(vec({-1}), 0), 0);
}

TEST(NoisyUpdate, DimensionChecks) {
    const SgdOperator op = scalar_sgd();
    EXPECT_THROW(op.noisy_update(vec({1, 2}), SgdObs{0}), DimensionMismatch);
    EXPECT_THROW(op.noisy_update(vec({1}), TdObs{0.0, 0, 1}), DimensionMismatch);
    EXPECT_THROW(op.mean_field(Vector(3)), DimensionMismatch);
    const TdOperator td = appendix_td();
    EXPECT_THROW(td.noisy_update(Vector::Zero(9), TdObs{0.0, 0, 1}), DimensionMismatch);
}

// ============================================================ mean field

TEST(MeanField, TdMatchesClosedFormAndEnumeration) {
    const TdOperator op = appendix_td();
    const auto& c = op.chain();
    const Matrix D = c.pi().asDiagonal();
    const Matrix A = op.Phi().transpose() * D * (Matrix::Identity(20, 20) - 0.5 * c.P()) * op.Phi();
    const Vector rbar = (c.P().cwiseProduct(c.reward_mean())).rowwise().sum();
    const Vector b = op.Phi().transpose() * D * rbar;
    EXPECT_LE((A - op.A()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((b - op.b()).cwiseAbs().maxCoeff(), 1e-12);

    Stream rng(1, 0, Purpose::Test);
    for (int k = 0; k < 20; ++k) {
        const Vector th = random_theta(rng, 10, 3.0);
        EXPECT_LE((op.mean_field(th) - td_mean_field_oracle(op, th)).norm(), 1e-10);
        EXPECT_LE((op.mean_field(th) - (b - A * th)).norm(), 1e-10);
    }
}

TEST(MeanField, SgdMatchesEnumeration) {
    const SgdOperator op = random_sgd(3, 6, 3);
    Stream rng(2, 0, Purpose::Test);
    for (int k = 0; k < 20; ++k) {
        const Vector th = random_theta(rng, 3, 2.0);
        Vector acc = Vector::Zero(3);
        for (int s = 0; s < 6; ++s) acc += op.chain().pi()(s) * op.noisy_update(th, SgdObs{s});
        EXPECT_LE((op.mean_field(th) - acc).norm(), 1e-10);
    }
}

TEST(MeanField, QMatchesEnumeration) {
    const QOperator op = random_q(5, 3, 2, 4, 0.6);
    const auto& c = op.chain();
    Stream rng(3, 0, Purpose::Test);
    for (int k = 0; k < 20; ++k) {
        const Vector th = random_theta(rng, 4, 2.0);
        Vector acc = Vector::Zero(4);
        for (int x = 0; x < c.n(); ++x)
            for (int xn = 0; xn < c.n(); ++xn) {
                const double w = c.pi()(x) * c.P()(x, xn);
                if (w == 0.0) continue;
                acc += w * op.noisy_update(th, QObs{c.reward_mean()(x, xn), x / 2, x % 2, xn / 2});
            }
        EXPECT_LE((op.mean_field(th) - acc).norm(), 1e-10);
    }
}

TEST(MeanField, StateExpectationsAverageToMeanField) {
    const TdOperator op = random_td(4, 8, 3, 0.9);
    const Vector th = vec({1, -2, 0.5});
    EXPECT_LE((op.state_expectations(th).transpose() * op.chain().pi() - op.mean_field(th)).norm(), 1e-12);
}

// ============================================================ fixed points

TEST(FixedPoint, AppendixTdResidual) {
    const TdOperator op = appendix_td();
    EXPECT_LE(op.mean_field(op.fixed_point()).norm(), 1e-10);
}

TEST(FixedPoint, RandomTdResiduals) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const TdOperator op = random_td(seed, 12, 5, 0.95);
        EXPECT_LE(op.mean_field(op.fixed_point()).norm(), 1e-10) << seed;
    }
}

TEST(FixedPoint, SgdIsStationaryMean) {
    const SgdOperator op = scalar_sgd(0.1, 0.3);
    // pi = (0.75, 0.25) so theta* = 0.5
    EXPECT_NEAR(op.fixed_point()(0), 0.5, 1e-14);
}

TEST(FixedPoint, QResidual) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const QOperator op = random_q(seed, 3, 2, 3, 0.5);
        EXPECT_LE(op.mean_field(op.fixed_point()).norm(), 1e-10) << seed;
    }
    const QOperator b = baird_like();
    EXPECT_NEAR(b.fixed_point()(0), -1.1 / 0.211, 1e-9);
}

// ============================================================ constants

TEST(Constants, SgdAuditIsExact) {
    const SgdOperator op = random_sgd(1, 5, 3);
    const AuditResult a = audit_constants(op, 200, 5.0, 9);
    EXPECT_NEAR(a.constants.mu, 1.0, 1e-9);
    EXPECT_NEAR(a.constants.L, 1.0, 1e-9);
    EXPECT_FALSE(a.analytic_mu.has_value());
}

TEST(Constants, TdAuditMatchesAnalytic) {
    for (std::uint64_t seed : {20ull, 3ull, 8ull}) {
        const TdOperator op = seed == 20 ? appendix_td() : random_td(seed, 15, 6, 0.9);
        const auto an = op.analytic_constants();
        ASSERT_TRUE(an);
        const AuditResult a = audit_constants(op, 400, 3.0, seed);
        ASSERT_TRUE(a.analytic_mu);
        EXPECT_NEAR(a.constants.mu, an->mu, 0.01 * an->mu) << seed;
        EXPECT_LE(a.constants.L, an->L * (1 + 1e-12)) << seed;
    }
}

TEST(Constants, LosingMonotoneQIsRejected) {
    EXPECT_THROW(audit_constants(baird_like(0.99), 400, 20.0, 1), MonotonicityViolation);
}

TEST(Constants, AuditNeedsEnoughProbes) {
    EXPECT_THROW(audit_constants(scalar_sgd(), 10, 1.0, 0), InvalidInstance);
}

TEST(Constants, StepSizeConstantsPreferAnalytic) {
    const TdOperator op = appendix_td();
    const OperatorConstants c = step_size_constants(op);
    EXPECT_EQ(c.mu, op.analytic_constants()->mu);
    EXPECT_EQ(c.L, op.analytic_constants()->L);
}

TEST(Constants, StepSizeConstantsApplyMargin) {
    const QOperator op = random_q(2, 3, 2, 3, 0.3);
    const double radius = std::max(1.0, 2.0 * op.fixed_point().norm());
    const AuditResult a = audit_constants(op, 400, radius, 0);
    const OperatorConstants c = step_size_constants(op, 0.1, 400, 0);
    EXPECT_NEAR(c.mu, 0.9 * a.constants.mu, 1e-15);
    EXPECT_NEAR(c.L, 1.1 * a.constants.L, 1e-15);
}

// Growth, Lipschitz and strong monotonicity hold with the analytic constants.
TEST(Constants, TdInvariantsHold) {
    Stream rng(11, 0, Purpose::Test);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const TdOperator op = random_td(seed, 10, 4, 0.8);
        const OperatorConstants c = *op.analytic_constants();
        const auto obs = op.enumerate_observations(true);
        for (int k = 0; k < 30; ++k) {
            const Vector a = random_theta(rng, 4, 4.0), b = random_theta(rng, 4, 4.0);
            const double gap = (op.mean_field(a) - op.mean_field(b)).dot(a - b);
            EXPECT_LE(gap, -c.mu * (a - b).squaredNorm() * (1 - 1e-9));
            for (const auto& o : obs) {
                EXPECT_LE(op.noisy_update(a, o).norm(), c.L * (a.norm() + c.sigma) * (1 + 1e-12));
                EXPECT_LE((op.noisy_update(a, o) - op.noisy_update(b, o)).norm(),
                          c.L * (a - b).norm() * (1 + 1e-12));
            }
        }
    }
}

TEST(Constants, SgdGrowthBound) {
    const SgdOperator op = random_sgd(6, 4, 2);
    const OperatorConstants c = *op.analytic_constants();
    Stream rng(12, 0, Purpose::Test);
    for (int k = 0; k < 50; ++k) {
        const Vector a = random_theta(rng, 2, 5.0);
        for (const auto& o : op.enumerate_observations(false))
            EXPECT_LE(op.noisy_update(a, o).norm(), c.L * (a.norm() + c.sigma) * (1 + 1e-12));
    }
}

// ============================================================ instances

TEST(Instances, OrthonormalFeatures) {
    const Matrix F = orthonormal_features(20, 10, 21);
    EXPECT_LE((F.transpose() * F - Matrix::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(F, orthonormal_features(20, 10, 21));
    EXPECT_NE(F, orthonormal_features(20, 10, 22));
}

TEST(Instances, TdRejectsBadInput) {
    const MarkovChain c = two_state(0.2, 0.2);
    EXPECT_THROW(TdOperator(c, mat({{1, 0}, {0, 2}}), 0.5), InvalidInstance);
    EXPECT_THROW(TdOperator(c, Matrix::Identity(2, 2), 1.0), InvalidInstance);
    EXPECT_THROW(TdOperator(c, Matrix::Identity(3, 2), 0.5), DimensionMismatch);
}

TEST(Instances, TdObservationsCarryNoisyReward) {
    const TdOperator op = appendix_td();
    Stream rng(4, 0, Purpose::Reward);
    double sum = 0, sq = 0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        const auto o = std::get<TdObs>(op.observe(2, 5, rng));
        EXPECT_EQ(o.s, 2);
        EXPECT_EQ(o.s_next, 5);
        const double z = o.reward - op.chain().reward_mean()(2, 5);
        EXPECT_LE(std::abs(z), 0.5 + 1e-12);
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.002);
    EXPECT_NEAR(std::sqrt(sq / n), 0.1, 0.002);
}
