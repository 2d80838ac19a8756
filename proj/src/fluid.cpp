#include "qlimits/fluid.hpp"

#include <algorithm>
#include <cmath>

#include "qlimits/errors.hpp"

namespace qlimits {

namespace {

void validate_model(const FluidModel& m) {
    if (m.service_cdf.eval(0.0) >= 1.0)
        throw ConfigError("fluid model: service distribution puts all mass at 0");
    if (m.q0 < 0.0) throw ConfigError("fluid model: q0 must be nonnegative");
    const auto& e = m.arrival_curve.values();
    if (e.front() < -1e-12) throw ConfigError("fluid model: e(0) must be nonnegative");
    for (std::size_t k = 1; k < e.size(); ++k)
        if (e[k] < e[k - 1] - 1e-12)
            throw ConfigError("fluid model: arrival curve must be nondecreasing");
    if (m.initial_queue_cdf) {
        if (m.initial_queue_cdf->eval(0.0) >= 1.0)
            throw ConfigError("fluid model: initial-queue distribution puts all mass at 0");
        if (m.qhat0 < 0.0 || m.qtilde0 < 0.0)
            throw ConfigError("fluid model: qhat0/qtilde0 must be nonnegative");
    }
}

GridPath shifted_neg_one(double h, std::size_t n) {
    return GridPath::constant(h, n, -1.0, Interp::Linear);
}

FluidSolution solve_single_class(const FluidModel& m, const VolterraOptions& opt) {
    const GridPath& e = m.arrival_curve;
    const double h = e.step();
    const std::size_t n = e.size();
    const double over = std::max(m.q0 - 1.0, 0.0);
    const double under = std::min(m.q0, 1.0);

    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) {
        double t = h * static_cast<double>(k);
        x[k] = m.q0 - over * m.service_cdf.eval(t) - under * m.residual_cdf.eval(t) +
               e[k] - convolve_stieltjes(e, m.service_cdf, t);
    }

    VolterraProblem p{GridPath(h, std::move(x), Interp::Linear), m.service_cdf,
                      FShifted{shifted_neg_one(h, n)}};
    VolterraSolution vs = solve_volterra(p, opt);

    FluidSolution sol;
    sol.q = vs.y;
    std::vector<double> a(n);
    for (std::size_t k = 0; k < n; ++k)
        a[k] = over + e[k] - std::max(sol.q[k] - 1.0, 0.0);
    sol.a = GridPath(h, std::move(a), Interp::Linear);
    sol.residual = vs.residual;
    sol.sweeps = vs.sweeps;
    sol.t0 = vs.t0;
    sol.window_mass = vs.window_mass;
    sol.rho = bound_rho(m.service_cdf, e.horizon(), vs.t0);
    return sol;
}

FluidSolution solve_two_class(const FluidModel& m, const VolterraOptions& opt) {
    const GridPath& e = m.arrival_curve;
    const double h = e.step();
    const std::size_t n = e.size();
    const MixedCdf& Fhat = *m.initial_queue_cdf;

    // Initial population: qhat(t) = qhat0 (1 - Fhat(t)) + qtilde0 (1 - Ftilde(t))
    //                              + int (qhat(t-s) - 1)^+ dFhat(s).
    std::vector<double> xh(n);
    for (std::size_t k = 0; k < n; ++k) {
        double t = h * static_cast<double>(k);
        xh[k] = m.qhat0 * (1.0 - Fhat.eval(t)) + m.qtilde0 * (1.0 - m.residual_cdf.eval(t));
    }
    VolterraProblem ph{GridPath(h, std::move(xh), Interp::Linear), Fhat,
                       FShifted{shifted_neg_one(h, n)}};
    VolterraSolution vh = solve_volterra(ph, opt);
    const GridPath& qhat = vh.y;

    GridPath qhat_excess(h, std::vector<double>(n), Interp::Linear);
    for (std::size_t k = 0; k < n; ++k) qhat_excess[k] = std::max(qhat[k] - 1.0, 0.0);

    // Total content: q(t) = e(t) - int e(t-s) dF(s) + qhat(t)
    //                       - int (qhat(t-s) - 1)^+ dF(s) + int (q(t-s)-1)^+ dF(s).
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) {
        double t = h * static_cast<double>(k);
        x[k] = e[k] - convolve_stieltjes(e, m.service_cdf, t) + qhat[k] -
               convolve_stieltjes(qhat_excess, m.service_cdf, t);
    }
    VolterraProblem p{GridPath(h, std::move(x), Interp::Linear), m.service_cdf,
                      FShifted{shifted_neg_one(h, n)}};
    VolterraSolution vs = solve_volterra(p, opt);

    FluidSolution sol;
    sol.q = vs.y;
    std::vector<double> acheck(n), ahat(n), a(n);
    for (std::size_t k = 0; k < n; ++k) {
        double qe = std::max(sol.q[k] - 1.0, 0.0);
        acheck[k] = e[k] + qhat_excess[k] - qe;
        ahat[k] = m.qhat0 - qhat_excess[k];
        a[k] = acheck[k] + ahat[k];
    }
    sol.qhat = qhat;
    sol.acheck = GridPath(h, std::move(acheck), Interp::Linear);
    sol.ahat = GridPath(h, std::move(ahat), Interp::Linear);
    sol.a = GridPath(h, std::move(a), Interp::Linear);
    sol.residual = std::max(vh.residual, vs.residual);
    sol.sweeps = vh.sweeps + vs.sweeps;
    sol.t0 = vs.t0;
    sol.window_mass = vs.window_mass;
    sol.rho = bound_rho(m.service_cdf, e.horizon(), vs.t0);
    return sol;
}

} // namespace

FluidSolution solve_fluid(const FluidModel& m, const VolterraOptions& opt) {
    validate_model(m);
    return m.initial_queue_cdf ? solve_two_class(m, opt) : solve_single_class(m, opt);
}

RegularityReport check_regularity(const FluidSolution& sol, const MixedCdf& service_cdf,
                                      std::vector<double> eps_ladder, double threshold,
                                      double level_tol) {
    std::sort(eps_ladder.begin(), eps_ladder.end(), std::greater<double>());
    RegularityReport rep;
    rep.eps = eps_ladder;
    rep.threshold = threshold;
    const GridPath& q = sol.q;
    const double h = q.step();
    const std::size_t n = q.size();
    for (double eps : eps_ladder) {
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double t = h * static_cast<double>(k);
            double v = integrate_dF(service_cdf, t, [&](double u) {
                double d = std::fabs(q.value(t - u) - 1.0);
                return (d > level_tol && d < eps) ? 1.0 : 0.0;
            });
            worst = std::max(worst, v);
        }
        rep.values.push_back(worst);
    }
    rep.holds = !rep.values.empty() && rep.values.back() <= threshold;
    return rep;
}

} // namespace qlimits
