#include "delaysa/mixing.hpp"

#include <algorithm>
#include <cmath>

#include "delaysa/errors.hpp"

namespace delaysa {

std::vector<Vector> default_theta_grid(int d, double sigma, std::uint64_t seed, int n_random) {
    std::vector<Vector> grid;
    grid.push_back(Vector::Zero(d));
    for (int i = 0; i < d; ++i) grid.push_back(Vector::Unit(d, i));
    Stream rng(seed, 0, Purpose::Grid);
    for (int k = 0; k < n_random; ++k) {
        Vector u(d);
        do {
            for (int i = 0; i < d; ++i) u(i) = rng.normal();
        } while (u.norm() == 0.0);
        u /= u.norm();
        for (double r : {1.0, sigma, 2.0 * sigma}) grid.push_back(r * u);
    }
    return grid;
}

namespace {

struct GridPoint {
    Matrix H;
    Vector gbar;
    double threshold;
    double h_spread;  // max_x |h_x - g_bar|
    double obs_dev;   // max over observations of |g(theta, o) - g_bar|
};

double max_row_dev(const Matrix& M, const Vector& gbar) {
    double worst = 0.0;
    for (int x = 0; x < M.rows(); ++x)
        worst = std::max(worst, (M.row(x).transpose() - gbar).norm());
    return worst;
}

}  // namespace

int operator_mixing_time(const Operator& op, double alpha, const std::vector<Vector>& grid,
                         int cap) {
    if (!(alpha > 0.0)) throw InvalidInstance("alpha must be positive");
    if (grid.empty()) throw InvalidInstance("theta grid must be nonempty");
    const MarkovChain& chain = op.chain();
    const int lag = op.observation_lag();
    const auto observations = op.enumerate_observations(false);

    std::vector<GridPoint> pts;
    for (const auto& th : grid) {
        GridPoint g;
        g.H = op.state_expectations(th);
        g.gbar = op.mean_field(th);
        g.threshold = alpha * (th.norm() + 1.0);
        g.h_spread = max_row_dev(g.H, g.gbar);
        g.obs_dev = 0.0;
        if (lag == 1)
            for (const auto& o : observations)
                g.obs_dev = std::max(g.obs_dev, (op.noisy_update(th, o) - g.gbar).norm());
        pts.push_back(std::move(g));
    }

    long last_violation = -1;
    if (lag == 1)
        for (const auto& g : pts)
            if (g.obs_dev > g.threshold) last_violation = 0;

    // k is the power of P; the observation time is t = k + lag.
    Matrix Pk = Matrix::Identity(chain.n(), chain.n());
    for (int k = 0; k + lag <= cap; ++k) {
        const long t = k + lag;
        const double tv = worst_tv(Pk, chain.pi());
        bool certified = true;
        for (const auto& g : pts) {
            if (max_row_dev(Pk * g.H, g.gbar) > g.threshold) last_violation = t;
            if (2.0 * tv * g.h_spread > g.threshold) certified = false;
        }
        if (certified) return static_cast<int>(last_violation + 1);
        Pk = (Pk * chain.P()).eval();
    }
    throw CapExceeded("operator mixing time exceeds cap " + std::to_string(cap));
}

MixingReport mixing_report(const Operator& op, const std::vector<double>& tv_eps,
                           const std::vector<double>& alphas, const std::vector<Vector>& grid) {
    MixingReport r;
    for (double e : tv_eps) r.tv_times[e] = tv_mixing_time(op.chain(), e);
    r.lambda2 = second_eigenvalue_modulus(op.chain());
    for (double a : alphas) r.tau_mix_operator[a] = operator_mixing_time(op, a, grid);
    return r;
}

}  // namespace delaysa
