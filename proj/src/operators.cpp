#include "delaysa/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "delaysa/errors.hpp"

namespace delaysa {

bool operator==(const TdObs& a, const TdObs& b) {
    return a.reward == b.reward && a.s == b.s && a.s_next == b.s_next;
}
bool operator==(const QObs& a, const QObs& b) {
    return a.reward == b.reward && a.s == b.s && a.a == b.a && a.s_next == b.s_next;
}
bool operator==(const SgdObs& a, const SgdObs& b) { return a.s == b.s; }

void Operator::check_dim(const Vector& theta) const {
    if (theta.size() != dim())
        throw DimensionMismatch("theta has dimension " + std::to_string(theta.size()) +
                                ", operator expects " + std::to_string(dim()));
}

double draw_reward(double mean, double std, Stream& rng) {
    if (std <= 0.0) return mean;
    double z;
    do {
        z = rng.normal();
    } while (std::abs(z) > 5.0);
    return mean + std * z;
}

namespace {

template <class T>
const T& expect_obs(const Observation& obs, const char* who) {
    const T* p = std::get_if<T>(&obs);
    if (!p) throw DimensionMismatch(std::string("observation variant does not match ") + who);
    return *p;
}

std::vector<double> reward_values(double mean, double std, bool extremes) {
    if (!extremes || std <= 0.0) return {mean};
    return {mean, mean - 5.0 * std, mean + 5.0 * std};
}

}  // namespace

// ---------------------------------------------------------------- TD

TdOperator::TdOperator(MarkovChain chain, Matrix Phi, double gamma)
    : chain_(std::move(chain)), Phi_(std::move(Phi)), gamma_(gamma) {
    const int n = chain_.n();
    const int d = static_cast<int>(Phi_.cols());
    if (Phi_.rows() != n) throw DimensionMismatch("feature matrix must have one row per state");
    if (d < 1 || d > n) throw DimensionMismatch("feature dimension must lie in [1, n]");
    if (!(gamma_ >= 0.0 && gamma_ < 1.0)) throw InvalidInstance("gamma must lie in [0, 1)");
    if ((Phi_.transpose() * Phi_ - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
        throw InvalidInstance("feature columns must be orthonormal");

    const Matrix& P = chain_.P();
    rbar_ = P.cwiseProduct(chain_.reward_mean()).rowwise().sum();
    const Matrix D = chain_.pi().asDiagonal();
    A_ = Phi_.transpose() * D * (Matrix::Identity(n, n) - gamma_ * P) * Phi_;
    b_ = Phi_.transpose() * D * rbar_;

    Eigen::FullPivLU<Matrix> lu(A_);
    if (lu.rank() < d || std::abs(lu.determinant()) < 1e-300)
        throw SingularSystem("TD matrix A is singular");
    theta_star_ = lu.solve(b_);
    for (int k = 0; k < 3; ++k) theta_star_ += lu.solve(Vector(b_ - A_ * theta_star_));
}

Vector TdOperator::noisy_update(const Vector& theta, const Observation& obs) const {
    check_dim(theta);
    const auto& o = expect_obs<TdObs>(obs, "td");
    const double td = o.reward + gamma_ * Phi_.row(o.s_next).dot(theta) - Phi_.row(o.s).dot(theta);
    return td * Phi_.row(o.s).transpose();
}

Vector TdOperator::mean_field(const Vector& theta) const {
    check_dim(theta);
    return b_ - A_ * theta;
}

Observation TdOperator::observe(int x, int x_next, Stream& rng) const {
    return TdObs{draw_reward(chain_.reward_mean()(x, x_next), chain_.reward_noise_std(), rng), x,
                 x_next};
}

Matrix TdOperator::state_expectations(const Vector& theta) const {
    check_dim(theta);
    const Vector v = Phi_ * theta;
    const Vector delta = rbar_ + gamma_ * (chain_.P() * v) - v;
    return delta.asDiagonal() * Phi_;
}

std::vector<Observation> TdOperator::enumerate_observations(bool reward_extremes) const {
    std::vector<Observation> out;
    for (int s = 0; s < chain_.n(); ++s)
        for (int sn = 0; sn < chain_.n(); ++sn) {
            if (chain_.P()(s, sn) <= 0.0) continue;
            for (double r : reward_values(chain_.reward_mean()(s, sn), chain_.reward_noise_std(),
                                          reward_extremes))
                out.push_back(TdObs{r, s, sn});
        }
    return out;
}

std::optional<OperatorConstants> TdOperator::analytic_constants() const {
    OperatorConstants c;
    const Matrix S = 0.5 * (A_ + A_.transpose());
    c.mu = Eigen::SelfAdjointEigenSolver<Matrix>(S).eigenvalues().minCoeff();

    double lip = 0.0;
    double reward_growth = 0.0;
    const double spread = 5.0 * chain_.reward_noise_std();
    for (int s = 0; s < chain_.n(); ++s)
        for (int sn = 0; sn < chain_.n(); ++sn) {
            if (chain_.P()(s, sn) <= 0.0) continue;
            const double ns = Phi_.row(s).norm();
            lip = std::max(lip, ns * (gamma_ * Phi_.row(sn) - Phi_.row(s)).norm());
            reward_growth =
                std::max(reward_growth, (std::abs(chain_.reward_mean()(s, sn)) + spread) * ns);
        }
    c.L = std::max(1.0, lip);
    c.sigma = std::max({1.0, theta_star_.norm(), reward_growth / c.L});
    return c;
}

// ---------------------------------------------------------------- Q

namespace {

MarkovChain pair_chain(const std::vector<Matrix>& P, const std::vector<Matrix>& R,
                       const Matrix& behavior, double noise) {
    const int S = static_cast<int>(behavior.rows());
    const int A = static_cast<int>(behavior.cols());
    Matrix Pp = Matrix::Zero(S * A, S * A);
    Matrix Rp = Matrix::Zero(S * A, S * A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            for (int sn = 0; sn < S; ++sn)
                for (int an = 0; an < A; ++an) {
                    Pp(s * A + a, sn * A + an) = P[a](s, sn) * behavior(sn, an);
                    Rp(s * A + a, sn * A + an) = R[a](s, sn);
                }
    return build_chain(std::move(Pp), std::move(Rp), noise);
}

}  // namespace

QOperator::QOperator(std::vector<Matrix> transitions, std::vector<Matrix> rewards, Matrix behavior,
                     double reward_noise_std, Matrix Phi, double gamma)
    : n_states_(static_cast<int>(behavior.rows())),
      n_actions_(static_cast<int>(behavior.cols())),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      behavior_(std::move(behavior)),
      Phi_(std::move(Phi)),
      gamma_(gamma),
      chain_([&]() -> MarkovChain {
          if (n_states_ < 1 || n_actions_ < 1) throw InvalidInstance("empty Q problem");
          if (static_cast<int>(transitions_.size()) != n_actions_ ||
              static_cast<int>(rewards_.size()) != n_actions_)
              throw DimensionMismatch("need one transition and reward matrix per action");
          for (int a = 0; a < n_actions_; ++a)
              if (transitions_[a].rows() != n_states_ || transitions_[a].cols() != n_states_ ||
                  rewards_[a].rows() != n_states_ || rewards_[a].cols() != n_states_)
                  throw DimensionMismatch("per-action matrices must be n_states square");
          if ((behavior_.array() <= 0.0).any())
              throw InvalidInstance("behavior policy must give every action positive probability");
          for (int s = 0; s < n_states_; ++s)
              if (std::abs(behavior_.row(s).sum() - 1.0) > 1e-12)
                  throw NonStochasticRow("behavior policy row does not sum to 1");
          if (Phi_.rows() != n_states_ * n_actions_)
              throw DimensionMismatch("feature matrix must have one row per state-action pair");
          if (!(gamma_ >= 0.0 && gamma_ < 1.0)) throw InvalidInstance("gamma must lie in [0, 1)");
          return pair_chain(transitions_, rewards_, behavior_, reward_noise_std);
      }()) {}

int QOperator::greedy_action(const Vector& theta, int s) const {
    int best = 0;
    double best_v = phi(s, 0).dot(theta);
    for (int a = 1; a < n_actions_; ++a) {
        const double v = phi(s, a).dot(theta);
        if (v > best_v) {
            best_v = v;
            best = a;
        }
    }
    return best;
}

Vector QOperator::noisy_update(const Vector& theta, const Observation& obs) const {
    check_dim(theta);
    const auto& o = expect_obs<QObs>(obs, "q");
    const Vector f = phi(o.s, o.a);
    const double q_next = phi(o.s_next, greedy_action(theta, o.s_next)).dot(theta);
    return (o.reward + gamma_ * q_next - f.dot(theta)) * f;
}

Observation QOperator::observe(int x, int x_next, Stream& rng) const {
    const double r = draw_reward(chain_.reward_mean()(x, x_next), chain_.reward_noise_std(), rng);
    return QObs{r, x / n_actions_, x % n_actions_, x_next / n_actions_};
}

Matrix QOperator::state_expectations(const Vector& theta) const {
    check_dim(theta);
    Vector best(n_states_);
    for (int s = 0; s < n_states_; ++s) best(s) = phi(s, greedy_action(theta, s)).dot(theta);
    Matrix H(n_states_ * n_actions_, dim());
    for (int s = 0; s < n_states_; ++s)
        for (int a = 0; a < n_actions_; ++a) {
            const Vector f = phi(s, a);
            double target = 0.0;
            for (int sn = 0; sn < n_states_; ++sn) {
                const double p = transitions_[a](s, sn);
                if (p > 0.0) target += p * (rewards_[a](s, sn) + gamma_ * best(sn));
            }
            H.row(s * n_actions_ + a) = ((target - f.dot(theta)) * f).transpose();
        }
    return H;
}

Vector QOperator::mean_field(const Vector& theta) const {
    return state_expectations(theta).transpose() * chain_.pi();
}

std::vector<Observation> QOperator::enumerate_observations(bool reward_extremes) const {
    std::vector<Observation> out;
    for (int s = 0; s < n_states_; ++s)
        for (int a = 0; a < n_actions_; ++a)
            for (int sn = 0; sn < n_states_; ++sn) {
                if (transitions_[a](s, sn) <= 0.0) continue;
                for (double r : reward_values(rewards_[a](s, sn), chain_.reward_noise_std(),
                                              reward_extremes))
                    out.push_back(QObs{r, s, a, sn});
            }
    return out;
}

const Vector& QOperator::fixed_point() const {
    if (!theta_star_) theta_star_ = solve_fixed_point();
    return *theta_star_;
}

// Damped Newton on the piecewise-linear mean field: with the greedy policy
// frozen, g_bar(theta) = b_g - A_g theta, so a full step solves A_g theta = b_g.
Vector QOperator::solve_fixed_point() const {
    const int d = dim();
    const Vector& pi = chain_.pi();
    Vector theta = Vector::Zero(d);
    Vector g = mean_field(theta);
    for (int it = 0; it < 500; ++it) {
        if (g.norm() <= 1e-12) return theta;
        Matrix Ag = Matrix::Zero(d, d);
        for (int s = 0; s < n_states_; ++s)
            for (int a = 0; a < n_actions_; ++a) {
                const Vector f = phi(s, a);
                Vector next = Vector::Zero(d);
                for (int sn = 0; sn < n_states_; ++sn) {
                    const double p = transitions_[a](s, sn);
                    if (p > 0.0) next += p * phi(sn, greedy_action(theta, sn));
                }
                Ag += pi(s * n_actions_ + a) * f * (f - gamma_ * next).transpose();
            }
        Eigen::FullPivLU<Matrix> lu(Ag);
        const Vector dir = lu.rank() == d ? Vector(lu.solve(g)) : g;
        double eta = 1.0;
        bool accepted = false;
        for (int k = 0; k < 60; ++k, eta *= 0.5) {
            const Vector cand = theta + eta * dir;
            const Vector gc = mean_field(cand);
            if (gc.norm() < g.norm()) {
                theta = cand;
                g = gc;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (g.norm() <= 1e-10) return theta;
            break;
        }
    }
    if (g.norm() <= 1e-10) return theta;
    throw NoConvergence("Q fixed-point iteration did not converge");
}

// ---------------------------------------------------------------- SGD

SgdOperator::SgdOperator(MarkovChain chain, Matrix targets)
    : chain_(std::move(chain)), targets_(std::move(targets)) {
    if (targets_.rows() != chain_.n()) throw DimensionMismatch("need one target per state");
    if (targets_.cols() < 1) throw DimensionMismatch("targets must have positive dimension");
    if (!targets_.allFinite()) throw InvalidInstance("targets must be finite");
    theta_star_ = targets_.transpose() * chain_.pi();
}

Vector SgdOperator::noisy_update(const Vector& theta, const Observation& obs) const {
    check_dim(theta);
    const auto& o = expect_obs<SgdObs>(obs, "sgd");
    return targets_.row(o.s).transpose() - theta;
}

Vector SgdOperator::mean_field(const Vector& theta) const {
    check_dim(theta);
    return theta_star_ - theta;
}

Observation SgdOperator::observe(int x, int, Stream&) const { return SgdObs{x}; }

Matrix SgdOperator::state_expectations(const Vector& theta) const {
    check_dim(theta);
    return targets_.rowwise() - theta.transpose();
}

std::vector<Observation> SgdOperator::enumerate_observations(bool) const {
    std::vector<Observation> out;
    for (int s = 0; s < chain_.n(); ++s) out.push_back(SgdObs{s});
    return out;
}

std::optional<OperatorConstants> SgdOperator::analytic_constants() const {
    double bmax = 0.0;
    for (int s = 0; s < targets_.rows(); ++s) bmax = std::max(bmax, targets_.row(s).norm());
    return OperatorConstants{1.0, 1.0, std::max({1.0, bmax, theta_star_.norm()})};
}

// ---------------------------------------------------------------- deterministic

DeterministicOperator::DeterministicOperator(MarkovChain chain, Vector center)
    : chain_(std::move(chain)), center_(std::move(center)) {}

Vector DeterministicOperator::noisy_update(const Vector& theta, const Observation&) const {
    check_dim(theta);
    return center_ - theta;
}

Vector DeterministicOperator::mean_field(const Vector& theta) const {
    check_dim(theta);
    return center_ - theta;
}

Observation DeterministicOperator::observe(int x, int, Stream&) const { return SgdObs{x}; }

Matrix DeterministicOperator::state_expectations(const Vector& theta) const {
    check_dim(theta);
    Matrix H(chain_.n(), dim());
    H.rowwise() = (center_ - theta).transpose();
    return H;
}

std::vector<Observation> DeterministicOperator::enumerate_observations(bool) const {
    std::vector<Observation> out;
    for (int s = 0; s < chain_.n(); ++s) out.push_back(SgdObs{s});
    return out;
}

std::optional<OperatorConstants> DeterministicOperator::analytic_constants() const {
    return OperatorConstants{1.0, 1.0, std::max(1.0, center_.norm())};
}

// ---------------------------------------------------------------- recipes and audits

Matrix orthonormal_features(int n, int d, std::uint64_t seed) {
    if (d < 1 || d > n) throw DimensionMismatch("feature dimension must lie in [1, n]");
    Stream rng(seed, 0, Purpose::Recipe);
    Matrix G(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) G(i, j) = rng.normal();
    const Matrix Q = Eigen::HouseholderQR<Matrix>(G).householderQ();
    return Q.leftCols(d);
}

namespace {

Vector random_unit(int d, Stream& rng) {
    Vector u(d);
    do {
        for (int i = 0; i < d; ++i) u(i) = rng.normal();
    } while (u.norm() == 0.0);
    return u / u.norm();
}

// -<u, g(theta* + rho u) - g(theta*)> / rho for unit u.
double monotonicity_quotient(const Operator& op, const Vector& star, const Vector& gstar,
                             const Vector& u, double rho) {
    const Vector un = u / u.norm();
    return -un.dot(op.mean_field(star + rho * un) - gstar) / rho;
}

// Projected descent of the quotient over the unit sphere, gradients by
// central differences; only mean-field evaluations are used.
double refine_mu(const Operator& op, const Vector& star, const Vector& gstar, Vector u, double rho) {
    const int d = static_cast<int>(u.size());
    u /= u.norm();
    double q = monotonicity_quotient(op, star, gstar, u, rho);
    double eta = 0.5;
    const double h = 1e-5;
    for (int it = 0; it < 300 && eta > 1e-12; ++it) {
        Vector grad(d);
        for (int i = 0; i < d; ++i) {
            Vector up = u, um = u;
            up(i) += h;
            um(i) -= h;
            grad(i) = (monotonicity_quotient(op, star, gstar, up, rho) -
                       monotonicity_quotient(op, star, gstar, um, rho)) /
                      (2.0 * h);
        }
        grad -= grad.dot(u) * u;
        if (grad.norm() < 1e-13) break;
        bool improved = false;
        while (eta > 1e-12) {
            Vector cand = u - eta * grad / grad.norm();
            cand /= cand.norm();
            const double qc = monotonicity_quotient(op, star, gstar, cand, rho);
            if (qc < q) {
                u = cand;
                q = qc;
                eta *= 1.5;
                improved = true;
                break;
            }
            eta *= 0.5;
        }
        if (!improved) break;
    }
    return q;
}

}  // namespace

AuditResult audit_constants(const Operator& op, int n_probe, double radius, std::uint64_t seed) {
    if (n_probe < 100) throw InvalidInstance("audit needs at least 100 probes");
    if (!(radius > 0.0)) throw InvalidInstance("audit radius must be positive");
    const int d = op.dim();
    const Vector star = op.fixed_point();
    const Vector gstar = op.mean_field(star);
    Stream rng(seed, 0, Purpose::Probe);

    std::vector<Vector> dirs;
    std::vector<double> rhos;
    std::vector<Vector> probes;
    for (int i = 0; i < n_probe; ++i) {
        dirs.push_back(random_unit(d, rng));
        rhos.push_back(radius * (0.05 + 0.95 * rng.uniform()));
        probes.push_back(star + rhos.back() * dirs.back());
    }

    // mu: worst probe quotient, then refine the three worst directions.
    std::vector<std::pair<double, int>> qs;
    for (int i = 0; i < n_probe; ++i)
        qs.emplace_back(monotonicity_quotient(op, star, gstar, dirs[i], rhos[i]), i);
    std::sort(qs.begin(), qs.end());
    double mu = qs.front().first;
    for (int k = 0; k < std::min<int>(3, n_probe); ++k) {
        const int i = qs[k].second;
        mu = std::min(mu, refine_mu(op, star, gstar, dirs[i], rhos[i]));
    }

    const auto obs_mean = op.enumerate_observations(false);
    const auto obs_ext = op.enumerate_observations(true);

    double L = 0.0;
    for (int i = 0; i < n_probe; ++i) {
        const Vector& a = probes[i];
        const Vector& b = (i + 1 < n_probe) ? probes[i + 1] : star;
        for (const Vector* other : {&star, &b}) {
            const double dist = (a - *other).norm();
            if (dist == 0.0) continue;
            for (const auto& o : obs_mean)
                L = std::max(L, (op.noisy_update(a, o) - op.noisy_update(*other, o)).norm() / dist);
        }
    }
    L = std::max(L, 1.0);

    double sigma = std::max(1.0, star.norm());
    std::vector<Vector> pts = probes;
    pts.push_back(star);
    pts.push_back(Vector::Zero(d));
    for (const auto& th : pts)
        for (const auto& o : obs_ext)
            sigma = std::max(sigma, op.noisy_update(th, o).norm() / L - th.norm());

    AuditResult res;
    res.constants = {mu, L, sigma};
    if (auto a = op.analytic_constants(); a && op.kind() == "td") res.analytic_mu = a->mu;
    if (!(mu > 0.0))
        throw MonotonicityViolation("audited strong-monotonicity modulus is " + std::to_string(mu));
    return res;
}

OperatorConstants step_size_constants(const Operator& op, double margin, int n_probe,
                                      std::uint64_t seed) {
    if (auto a = op.analytic_constants()) {
        if (!(a->mu > 0.0))
            throw MonotonicityViolation("analytic strong-monotonicity modulus is not positive");
        return *a;
    }
    const double radius = std::max(1.0, 2.0 * op.fixed_point().norm());
    OperatorConstants c = audit_constants(op, n_probe, radius, seed).constants;
    c.mu *= (1.0 - margin);
    c.L *= (1.0 + margin);
    return c;
}

}  // namespace delaysa
