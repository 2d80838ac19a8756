#include "qlimits/volterra.hpp"

#include <algorithm>
#include <cmath>

#include "qlimits/detail/discrete_kernel.hpp"
#include "qlimits/errors.hpp"

namespace qlimits {

namespace {

using detail::DiscreteKernel;

// Solve y = c + coef * f(y, t) for the three variants; coef in [0, 1).
double solve_point(const FVariant& f, double c, double coef, double t) {
    if (coef == 0.0) return c + 0.0 * t;
    if (std::holds_alternative<FIdentity>(f)) return c / (1.0 - coef);
    if (const auto* r = std::get_if<FRegime>(&f)) {
        double ref = r->reference.value(t);
        if (ref > r->level + r->level_tol) return c / (1.0 - coef);
        if (ref < r->level - r->level_tol) return c;
        return c >= 0.0 ? c / (1.0 - coef) : c;  // f(y) = y^+
    }
    const auto& s = std::get<FShifted>(f);
    double m = s.shift.value(t);
    double mp = std::max(m, 0.0);
    double cand = (c + coef * (m - mp)) / (1.0 - coef);
    if (cand + m >= 0.0) return cand;
    return c - coef * mp;
}

} // namespace

double apply_f(const FVariant& f, double y, double t) {
    if (std::holds_alternative<FIdentity>(f)) return y;
    if (const auto* r = std::get_if<FRegime>(&f)) {
        double ref = r->reference.value(t);
        if (ref > r->level + r->level_tol) return y;
        if (ref < r->level - r->level_tol) return 0.0;
        return std::max(y, 0.0);
    }
    const auto& s = std::get<FShifted>(f);
    double m = s.shift.value(t);
    return std::max(y + m, 0.0) - std::max(m, 0.0);
}

double bound_rho(const MixedCdf& B, double T, double t0) {
    if (!(t0 > 0.0)) throw ConfigError("bound_rho: t0 must be positive");
    double m = B.eval(t0);
    if (m >= 1.0) throw NumericalError("bound_rho: window mass >= 1; shrink t0");
    auto n = static_cast<long long>(std::floor(T / t0 + 1e-9)) + 1;
    double g = 1.0 / (1.0 - m);
    double rho = 0.0;
    double term = 1.0;
    for (long long i = 0; i < n; ++i) {
        term *= g;
        rho += term;
        if (rho > 1e290) break;  // bound is astronomically loose anyway
    }
    return rho;
}

VolterraSolution solve_volterra(const VolterraProblem& p, const VolterraOptions& opt) {
    const GridPath& x = p.forcing;
    const double h = x.step();
    const std::size_t n = x.size();
    DiscreteKernel K(p.kernel, h, n - 1);

    // Contraction window: largest grid multiple with mass <= cap, falling
    // back to any sub-unit mass window if even B(h) exceeds the cap.
    std::size_t k0 = 0;
    for (std::size_t k = 1; k < n; ++k) {
        if (p.kernel.eval(h * static_cast<double>(k)) <= opt.window_mass_cap) k0 = k;
        else break;
    }
    if (k0 == 0) {
        if (p.kernel.eval(h) < 1.0 - 1e-9) k0 = 1;
        else
            throw NumericalError(
                "solve_volterra: kernel mass reaches 1 within one grid step; refine the grid");
    }
    double t0 = h * static_cast<double>(k0);
    double wmass = p.kernel.eval(t0);

    std::vector<double> y(n, 0.0);
    std::vector<double> w(n, 0.0);  // f(y_k, t_k), maintained alongside y
    for (std::size_t k = 0; k < n; ++k) w[k] = apply_f(p.f, 0.0, h * static_cast<double>(k));

    int sweeps = 0;
    std::size_t lo = 0;
    while (lo < n) {
        std::size_t hi = std::min(lo + k0, n - 1);  // window covers (lo, hi]
        std::size_t first = lo == 0 ? 0 : lo + 1;
        for (int it = 0; it < opt.max_sweeps; ++it) {
            ++sweeps;
            double change = 0.0;
            for (std::size_t k = first; k <= hi; ++k) {
                auto [rest, coef] = K.split_at(w, k);
                if (coef >= 1.0 - 1e-12)
                    throw NumericalError("solve_volterra: same-time kernel weight reaches 1");
                double t = h * static_cast<double>(k);
                double yk = solve_point(p.f, x[k] + rest, coef, t);
                change = std::max(change, std::fabs(yk - y[k]));
                y[k] = yk;
                w[k] = apply_f(p.f, yk, t);
            }
            if (change <= opt.tol) break;
            if (it + 1 == opt.max_sweeps)
                throw NumericalError("solve_volterra: window did not converge in " +
                                     std::to_string(opt.max_sweeps) + " sweeps");
        }
        if (hi == n - 1) break;
        lo = hi;
    }

    VolterraSolution sol;
    sol.y = GridPath(h, std::move(y), Interp::Linear);
    sol.sweeps = sweeps;
    sol.t0 = t0;
    sol.window_mass = wmass;
    sol.residual = volterra_residual(p, sol.y);
    if (sol.residual > opt.tol)
        throw NumericalError("solve_volterra: residual " + std::to_string(sol.residual) +
                             " exceeds tolerance");
    return sol;
}

double volterra_residual(const VolterraProblem& p, const GridPath& y) {
    const GridPath& x = p.forcing;
    const double h = x.step();
    const std::size_t n = std::min(x.size(), y.size());
    DiscreteKernel K(p.kernel, h, n - 1);
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) w[k] = apply_f(p.f, y[k], h * static_cast<double>(k));
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        worst = std::max(worst, std::fabs(y[k] - x[k] - K.at(w, k)));
    return worst;
}

} // namespace qlimits
