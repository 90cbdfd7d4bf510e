#include "delaysa/chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "delaysa/errors.hpp"

namespace delaysa {

namespace {

bool strongly_connected(const Matrix& P) {
    const int n = static_cast<int>(P.rows());
    auto reach_all = [&](bool transpose) {
        std::vector<char> seen(n, 0);
        std::queue<int> q;
        q.push(0);
        seen[0] = 1;
        int count = 1;
        while (!q.empty()) {
            const int i = q.front();
            q.pop();
            for (int j = 0; j < n; ++j) {
                const double w = transpose ? P(j, i) : P(i, j);
                if (w > 0.0 && !seen[j]) {
                    seen[j] = 1;
                    ++count;
                    q.push(j);
                }
            }
        }
        return count == n;
    };
    return reach_all(false) && reach_all(true);
}

// For an irreducible chain the period is the gcd over edges (i,j) of
// level(i)+1-level(j), with levels taken from a BFS tree.
bool aperiodic(const Matrix& P) {
    std::vector<int> level(P.rows(), -1);
    std::queue<int> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
        const int i = q.front();
        q.pop();
        for (int j = 0; j < P.rows(); ++j) {
            if (P(i, j) > 0.0 && level[j] < 0) {
                level[j] = level[i] + 1;
                q.push(j);
            }
        }
    }
    int g = 0;
    for (int i = 0; i < P.rows(); ++i)
        for (int j = 0; j < P.cols(); ++j)
            if (P(i, j) > 0.0) g = std::gcd(g, std::abs(level[i] + 1 - level[j]));
    return g == 1;
}

}  // namespace

Vector solve_stationary(const Matrix& P, int max_polish) {
    const int n = static_cast<int>(P.rows());
    Matrix M = P.transpose() - Matrix::Identity(n, n);
    M.row(n - 1).setOnes();
    Vector rhs = Vector::Zero(n);
    rhs(n - 1) = 1.0;
    Vector pi = M.fullPivLu().solve(rhs);
    for (int i = 0; i < n; ++i) pi(i) = std::max(pi(i), 0.0);
    pi /= pi.sum();

    // Power-iteration polish; also the fallback if the direct solve was poor.
    for (int it = 0; it < max_polish; ++it) {
        const double resid = (P.transpose() * pi - pi).cwiseAbs().maxCoeff();
        if (resid <= 1e-13) return pi;
        pi = (P.transpose() * pi).eval();
        pi /= pi.sum();
    }
    if ((P.transpose() * pi - pi).cwiseAbs().maxCoeff() <= 1e-10) return pi;
    throw NoConvergence("stationary distribution did not converge");
}

MarkovChain build_chain(Matrix P, Matrix reward_mean, double reward_noise_std) {
    if (P.rows() == 0 || P.rows() != P.cols())
        throw InvalidInstance("transition matrix must be square and nonempty");
    if (!P.allFinite()) throw NonStochasticRow("transition matrix has non-finite entries");
    if ((P.array() < 0.0).any()) throw NonStochasticRow("transition matrix has negative entries");
    for (int i = 0; i < P.rows(); ++i) {
        const double s = P.row(i).sum();
        if (std::abs(s - 1.0) > 1e-12)
            throw NonStochasticRow("row " + std::to_string(i) + " sums to " + std::to_string(s));
    }
    if (!strongly_connected(P)) throw Reducible("transition graph is not strongly connected");
    if (!aperiodic(P)) throw Periodic("chain is periodic");
    if (reward_mean.size() == 0) reward_mean = Matrix::Zero(P.rows(), P.cols());
    if (reward_mean.rows() != P.rows() || reward_mean.cols() != P.cols())
        throw DimensionMismatch("reward_mean must match P");
    if (!(reward_noise_std >= 0.0) || !std::isfinite(reward_noise_std))
        throw InvalidInstance("reward_noise_std must be finite and >= 0");

    MarkovChain c;
    c.P_ = std::move(P);
    c.reward_mean_ = std::move(reward_mean);
    c.reward_noise_std_ = reward_noise_std;
    c.pi_ = solve_stationary(c.P_);
    return c;
}

StationaryDistribution stationary(const MarkovChain& chain) {
    return {chain.pi()};
}

int sample_next(const MarkovChain& chain, int s, Stream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    const int n = chain.n();
    int last = 0;
    for (int j = 0; j < n; ++j) {
        const double p = chain.P()(s, j);
        if (p <= 0.0) continue;
        last = j;
        acc += p;
        if (u < acc) return j;
    }
    return last;  // rounding left a sliver above the cumulative sum
}

std::vector<int> sample_path(const MarkovChain& chain, Stream& rng, long T, int s0) {
    if (T < 1) throw InvalidInstance("path length must be >= 1");
    if (s0 < 0 || s0 >= chain.n()) throw InvalidInstance("start state out of range");
    std::vector<int> path(static_cast<std::size_t>(T));
    path[0] = s0;
    for (long t = 1; t < T; ++t) path[t] = sample_next(chain, path[t - 1], rng);
    return path;
}

std::vector<int> sample_path(const MarkovChain& chain, std::uint64_t seed, long T, int s0) {
    Stream rng(seed, 0, Purpose::Path);
    return sample_path(chain, rng, T, s0);
}

double worst_tv(const Matrix& Pt, const Vector& pi) {
    double worst = 0.0;
    for (int i = 0; i < Pt.rows(); ++i)
        worst = std::max(worst, 0.5 * (Pt.row(i).transpose() - pi).cwiseAbs().sum());
    return worst;
}

int tv_mixing_time(const MarkovChain& chain, double eps, int cap) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidInstance("eps must lie in (0, 1)");
    Matrix Pt = Matrix::Identity(chain.n(), chain.n());
    for (int t = 0; t <= cap; ++t) {
        if (worst_tv(Pt, chain.pi()) <= eps) return t;
        Pt = (Pt * chain.P()).eval();
    }
    throw CapExceeded("tv mixing time exceeds cap " + std::to_string(cap));
}

double second_eigenvalue_modulus(const MarkovChain& chain) {
    if (chain.n() == 1) return 0.0;
    Eigen::EigenSolver<Matrix> es(chain.P(), false);
    std::vector<double> mods;
    for (int i = 0; i < es.eigenvalues().size(); ++i) mods.push_back(std::abs(es.eigenvalues()(i)));
    std::sort(mods.rbegin(), mods.rend());
    return mods[1];
}

MarkovChain random_ergodic_chain(std::uint64_t seed, int n, double sparsity,
                                 double reward_noise_std) {
    if (n < 1) throw InvalidInstance("n must be positive");
    if (!(sparsity >= 0.0 && sparsity < 1.0)) throw InvalidInstance("sparsity must lie in [0, 1)");
    Stream rng(seed, 0, Purpose::Recipe);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);

    Matrix P(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double u = rng.uniform();
            const double keep = rng.uniform();
            P(i, j) = (keep < sparsity) ? 0.0 : u;
        }
    if (sparsity > 0.0) {
        for (int k = 0; k < n; ++k) {
            const int i = perm[k], j = perm[(k + 1) % n];
            if (P(i, j) == 0.0) P(i, j) = 0.5 + 0.5 * rng.uniform();
            if (P(i, i) == 0.0) P(i, i) = 0.5 + 0.5 * rng.uniform();
        }
    }
    for (int i = 0; i < n; ++i) {
        P.row(i) /= P.row(i).sum();
        // Make the row sum exact by folding the rounding residue into its largest entry.
        Eigen::Index jmax;
        P.row(i).maxCoeff(&jmax);
        P(i, jmax) += 1.0 - P.row(i).sum();
    }
    Matrix R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = rng.uniform();
    return build_chain(std::move(P), std::move(R), reward_noise_std);
}

namespace {

Matrix matrix_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw InvalidInstance(std::string(what) + " must be a nonempty array of rows");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Matrix M(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
            throw InvalidInstance(std::string(what) + " rows must have equal length");
        for (int k = 0; k < cols; ++k) M(i, k) = j[i][k].get<double>();
    }
    return M;
}

}  // namespace

MarkovChain chain_from_json(const nlohmann::json& j) {
    if (j.contains("recipe")) {
        const auto recipe = j.at("recipe").get<std::string>();
        if (recipe != "random-ergodic") throw InvalidInstance("unknown chain recipe '" + recipe + "'");
        return random_ergodic_chain(j.value("seed", std::uint64_t{0}), j.at("n").get<int>(),
                                    j.value("sparsity", 0.0), j.value("reward_noise_std", 0.0));
    }
    Matrix P = matrix_from_json(j.at("P"), "P");
    if (j.contains("n") && j.at("n").get<int>() != P.rows())
        throw DimensionMismatch("n does not match P");
    Matrix R = j.contains("reward_mean") ? matrix_from_json(j.at("reward_mean"), "reward_mean") : Matrix();
    return build_chain(std::move(P), std::move(R), j.value("reward_noise_std", 0.0));
}

nlohmann::json chain_to_json(const MarkovChain& chain) {
    nlohmann::json j;
    j["n"] = chain.n();
    auto rows = [](const Matrix& M) {
        nlohmann::json a = nlohmann::json::array();
        for (int i = 0; i < M.rows(); ++i) {
            nlohmann::json r = nlohmann::json::array();
            for (int k = 0; k < M.cols(); ++k) r.push_back(M(i, k));
            a.push_back(r);
        }
        return a;
    };
    j["P"] = rows(chain.P());
    j["reward_mean"] = rows(chain.reward_mean());
    j["reward_noise_std"] = chain.reward_noise_std();
    return j;
}

}  // namespace delaysa
