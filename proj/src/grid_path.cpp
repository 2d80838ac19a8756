#include "qlimits/grid_path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qlimits/errors.hpp"

namespace qlimits {

namespace {
// Relative slack absorbing float noise in t/step without ever shifting an
// exact grid point to its neighbour.
constexpr double kIndexSlack = 1e-9;
} // namespace

GridPath::GridPath(double step, std::vector<double> values, Interp mode)
    : step_(step), values_(std::move(values)), mode_(mode) {
    if (!(step_ > 0.0)) throw ConfigError("GridPath: step must be positive");
    if (values_.empty()) throw ConfigError("GridPath: needs at least one value");
    for (double v : values_)
        if (!std::isfinite(v)) throw NumericalError("GridPath: non-finite value");
}

GridPath GridPath::constant(double step, std::size_t n_values, double value, Interp mode) {
    return GridPath(step, std::vector<double>(n_values, value), mode);
}

GridPath GridPath::sampled(double step, std::size_t n_values,
                           const std::function<double(double)>& f, Interp mode) {
    std::vector<double> v(n_values);
    for (std::size_t k = 0; k < n_values; ++k) v[k] = f(step * static_cast<double>(k));
    return GridPath(step, std::move(v), mode);
}

std::size_t GridPath::index_below(double t) const {
    double u = t / step_;
    auto k = static_cast<long long>(std::floor(u + kIndexSlack));
    if (k < 0) k = 0;
    auto last = static_cast<long long>(values_.size()) - 1;
    if (k > last) k = last;
    return static_cast<std::size_t>(k);
}

double GridPath::value(double t) const {
    double hz = horizon();
    double slack = kIndexSlack * step_;
    if (t < -slack || t > hz + slack)
        throw NumericalError("GridPath: evaluation outside [0, horizon]");
    if (t <= 0.0) return values_.front();
    if (t >= hz) return values_.back();
    std::size_t k = index_below(t);
    if (mode_ == Interp::Step) return values_[k];
    double tk = step_ * static_cast<double>(k);
    double w = (t - tk) / step_;
    if (w <= 0.0) return values_[k];
    if (k + 1 >= values_.size()) return values_.back();
    return values_[k] + w * (values_[k + 1] - values_[k]);
}

double sup_distance(const GridPath& g, const GridPath& h, double T) {
    double worst = 0.0;
    auto scan = [&](const GridPath& p) {
        std::size_t n = std::min<std::size_t>(
            p.size(), static_cast<std::size_t>(std::floor(T / p.step() + 1e-9)) + 1);
        for (std::size_t k = 0; k < n; ++k) {
            double t = p.step() * static_cast<double>(k);
            worst = std::max(worst, std::fabs(g.value(t) - h.value(t)));
        }
    };
    scan(g);
    scan(h);
    return worst;
}

} // namespace qlimits
