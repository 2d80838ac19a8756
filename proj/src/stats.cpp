#include "qlimits/stats.hpp"

#include <algorithm>
#include <cmath>

#include "qlimits/errors.hpp"

namespace qlimits {

double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw ConfigError("mean: empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

double quantile(std::vector<double> xs, double p) {
    if (xs.empty()) throw ConfigError("quantile: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile: p must be in [0, 1]");
    std::sort(xs.begin(), xs.end());
    double h = p * static_cast<double>(xs.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= xs.size()) return xs.back();
    double frac = h - static_cast<double>(lo);
    return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

double ks_tail(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * static_cast<double>(k) * static_cast<double>(k) *
                               lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ConfigError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double fa = 0.0;
    double fb = 0.0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double va = a[i];
        double vb = b[j];
        // Advance both sides through ties before measuring the gap.
        if (va <= vb) fa = static_cast<double>(++i) / na;
        if (vb <= va) fb = static_cast<double>(++j) / nb;
        d = std::max(d, std::fabs(fa - fb));
    }
    KsResult r;
    r.statistic = d;
    double ne = std::sqrt(na * nb / (na + nb));
    r.p_value = ks_tail((ne + 0.12 + 0.11 / ne) * d);
    return r;
}

} // namespace qlimits
