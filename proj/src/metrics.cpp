#include "delaysa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "delaysa/errors.hpp"

namespace delaysa {

EnsembleResult ensemble_mean(const std::vector<std::vector<double>>& series) {
    if (series.empty()) throw AllDiverged("no series to average");
    const std::size_t len = series.front().size();
    for (const auto& s : series)
        if (s.size() != len) throw DimensionMismatch("ensemble series must have equal length");
    EnsembleResult r;
    r.n_seeds = static_cast<int>(series.size());
    r.mean_sq_err.assign(len, 0.0);
    r.ci_half_width.assign(len, 0.0);
    const double n = static_cast<double>(series.size());
    for (std::size_t t = 0; t < len; ++t) {
        double m = 0.0;
        for (const auto& s : series) m += s[t];
        m /= n;
        r.mean_sq_err[t] = m;
        if (series.size() >= 2) {
            double v = 0.0;
            for (const auto& s : series) v += (s[t] - m) * (s[t] - m);
            v /= (n - 1.0);
            r.ci_half_width[t] = 1.96 * std::sqrt(v / n);
        }
    }
    return r;
}

EnsembleResult ensemble_mse(const std::vector<RunTrace>& traces) {
    std::vector<std::vector<double>> ok;
    int diverged = 0;
    for (const auto& tr : traces) {
        if (tr.diverged) ++diverged;
        else ok.push_back(tr.sq_err);
    }
    if (ok.empty()) throw AllDiverged("all " + std::to_string(traces.size()) + " runs diverged");
    EnsembleResult r = ensemble_mean(ok);
    r.diverged_count = diverged;
    return r;
}

std::vector<double> mean_updates_cumulative(const std::vector<RunTrace>& traces) {
    std::vector<double> out;
    int used = 0;
    for (const auto& tr : traces) {
        if (tr.diverged) continue;
        if (out.empty()) out.assign(tr.update_mask.size() + 1, 0.0);
        double c = 0.0;
        for (std::size_t t = 0; t < tr.update_mask.size(); ++t) {
            c += tr.update_mask[t];
            out[t + 1] += c;
        }
        ++used;
    }
    for (auto& v : out) v /= std::max(used, 1);
    return out;
}

WeightScheme make_weights(long T, double alpha, double mu) {
    const double am = alpha * mu;
    if (!(am < 2.0) || am < 0.0) throw InvalidInstance("weights need 0 <= alpha mu < 2");
    WeightScheme w;
    const double step = -std::log1p(-0.5 * am);
    w.log_w.resize(static_cast<std::size_t>(T) + 1);
    for (long t = 0; t <= T; ++t) w.log_w[t] = step * static_cast<double>(t + 1);
    const double mx = *std::max_element(w.log_w.begin(), w.log_w.end());
    // Kahan-compensated sum of the shifted weights.
    double s = 0.0, c = 0.0;
    for (double lw : w.log_w) {
        const double y = std::exp(lw - mx) - c;
        const double tt = s + y;
        c = (tt - s) - y;
        s = tt;
    }
    w.log_W = mx + std::log(s);
    return w;
}

std::vector<double> WeightScheme::probabilities() const {
    // Normalise by the sum of the same shifted exponentials rather than
    // exp(log_W): large log weights carry absolute rounding of order ulp(log_w).
    std::vector<double> p(log_w.size());
    if (log_w.empty()) return p;
    const double mx = *std::max_element(log_w.begin(), log_w.end());
    double s = 0.0, c = 0.0;
    for (std::size_t t = 0; t < log_w.size(); ++t) {
        p[t] = std::exp(log_w[t] - mx);
        const double y = p[t] - c;
        const double tt = s + y;
        c = (tt - s) - y;
        s = tt;
    }
    for (double& v : p) v /= s;
    return p;
}

long draw_weighted_index(const WeightScheme& w, Stream& rng) {
    const auto p = w.probabilities();
    const double u = rng.uniform();
    double acc = 0.0, c = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) {
        const double y = p[t] - c;
        const double tt = acc + y;
        c = (tt - acc) - y;
        acc = tt;
        if (u < acc) return static_cast<long>(t);
    }
    return static_cast<long>(p.size()) - 1;
}

std::pair<long, Vector> select_weighted_iterate(const RunTrace& trace, double alpha, double mu, Stream& rng) {
    if (trace.iterates.empty()) throw MissingIterates("trace was recorded without iterates");
    const long T = static_cast<long>(trace.iterates.size()) - 1;
    const long idx = draw_weighted_index(make_weights(T, alpha, mu), rng);
    return {idx, trace.iterates[idx]};
}

double tail_mean(const std::vector<double>& series, double fraction) {
    if (series.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * series.size())));
    double s = 0.0;
    for (std::size_t i = series.size() - k; i < series.size(); ++i) s += series[i];
    return s / static_cast<double>(k);
}

RateFit fit_rate(const std::vector<double>& series, double floor_fraction, double threshold) {
    if (series.size() < 50) throw WindowTooSmall("rate fit needs at least 50 points");
    if (!(floor_fraction > 0.0 && floor_fraction < 1.0)) throw InvalidInstance("floor_fraction must lie in (0,1)");
    RateFit f;
    f.floor = tail_mean(series, floor_fraction);
    const double cut = threshold * f.floor;
    const double shift = f.floor * (1.0 - 1e-6);
    auto usable = [&](double y) { return std::isfinite(y) && y >= cut && y - shift > 0.0; };

    const long n = static_cast<long>(series.size());
    long lo = 0;
    while (lo < n && !usable(series[lo])) ++lo;
    long hi = lo;
    while (hi + 1 < n && usable(series[hi + 1])) ++hi;
    if (lo >= n || hi - lo + 1 < 10)
        throw WindowTooSmall("only " + std::to_string(lo >= n ? 0 : hi - lo + 1) + " points above the floor");
    f.t_lo = lo;
    f.t_hi = hi;

    const double m = static_cast<double>(hi - lo + 1);
    double sx = 0, sy = 0;
    for (long t = lo; t <= hi; ++t) {
        sx += static_cast<double>(t);
        sy += std::log(series[t] - shift);
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0, syy = 0;
    for (long t = lo; t <= hi; ++t) {
        const double dx = static_cast<double>(t) - mx;
        const double dy = std::log(series[t] - shift) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    const double slope = sxy / sxx;
    f.rate = std::max(0.0, -slope);
    f.intercept = my - slope * mx;
    f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

bool update_count_check(const std::vector<std::uint8_t>& mask, double tau_avg, long T) {
    if (static_cast<long>(mask.size()) != T) throw DimensionMismatch("mask length must equal T");
    long count = 0;
    for (auto m : mask) count += m;
    return static_cast<double>(count) >= static_cast<double>(T) / (4.0 * tau_avg + 4.0);
}

}  // namespace delaysa
