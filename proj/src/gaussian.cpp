#include "qlimits/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qlimits/errors.hpp"

namespace qlimits {

namespace {

double reltol(double x) { return 1e-9 * std::max(1.0, std::fabs(x)); }

// Integral over [0, tmin] of F(tmin - u) (1 - F(tmax - u)) da(u): the atom of
// da at 0 exactly, full grid cells of a at their midpoints, and a partial
// final cell when tmin falls inside one.
double z_cov_entry(const MixedCdf& F, const GridPath& a, double tmin, double tmax) {
    double val = a[0] * F.eval(tmin) * (1.0 - F.eval(tmax));
    if (tmin <= 0.0) return val;
    const double h = a.step();
    auto full = static_cast<std::size_t>(std::floor(tmin / h + 1e-9));
    full = std::min(full, a.size() - 1);
    for (std::size_t k = 0; k < full; ++k) {
        double da = a[k + 1] - a[k];
        if (da == 0.0) continue;
        double mid = h * (static_cast<double>(k) + 0.5);
        val += F.eval(tmin - mid) * (1.0 - F.eval(tmax - mid)) * da;
    }
    double lo = h * static_cast<double>(full);
    if (tmin - lo > reltol(tmin)) {
        double da = a.value(tmin) - a[full];
        double mid = 0.5 * (lo + tmin);
        val += F.eval(tmin - mid) * (1.0 - F.eval(tmax - mid)) * da;
    }
    return val;
}

void check_partition(const std::vector<double>& partition) {
    if (partition.empty()) throw ConfigError("partition must contain at least the point 0");
    if (std::fabs(partition.front()) > 1e-12)
        throw ConfigError("partition must start at 0");
    for (std::size_t i = 1; i < partition.size(); ++i)
        if (partition[i] < partition[i - 1])
            throw ConfigError("partition must be nondecreasing");
}

// Index of `v` in the sorted vector `xs` up to tolerance; -1 if absent.
std::ptrdiff_t find_level(const std::vector<double>& xs, double v) {
    auto it = std::lower_bound(xs.begin(), xs.end(), v - reltol(v));
    if (it == xs.end() || std::fabs(*it - v) > reltol(v)) return -1;
    return it - xs.begin();
}

void sort_dedupe(std::vector<double>& xs) {
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end(),
                         [](double p, double q) { return q - p <= reltol(q); }),
             xs.end());
}

} // namespace

Eigen::MatrixXd z_covariance(const MixedCdf& service_cdf, const GridPath& entry_curve,
                             const std::vector<double>& times) {
    const auto m = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd C(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i; j < m; ++j) {
            double tmin = std::min(times[i], times[j]);
            double tmax = std::max(times[i], times[j]);
            double v = z_cov_entry(service_cdf, entry_curve, tmin, tmax);
            C(i, j) = v;
            C(j, i) = v;
        }
    }
    return C;
}

Eigen::MatrixXd z_partition_covariance(const MixedCdf& service_cdf, const GridPath& entry_curve,
                                       const std::vector<double>& partition,
                                       const std::vector<double>& times) {
    check_partition(partition);
    const MixedCdf& F = service_cdf;
    const auto m = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd C(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i; j < m; ++j) {
            double tmin = std::min(times[i], times[j]);
            double tmax = std::max(times[i], times[j]);
            double v = entry_curve.value(0.0) * F.eval(tmin) * (1.0 - F.eval(tmax));
            for (std::size_t p = 1; p < partition.size(); ++p) {
                double s_prev = partition[p - 1];
                if (s_prev > tmin + reltol(tmin)) break;
                double da = entry_curve.value(partition[p]) - entry_curve.value(s_prev);
                // F(x) = 0 for x < 0 keeps terms with s_prev > tmin at zero.
                v += da * F.eval(tmin - s_prev) * (1.0 - F.eval(tmax - s_prev));
            }
            C(i, j) = v;
            C(j, i) = v;
        }
    }
    return C;
}

GaussianPathSampler::GaussianPathSampler(Eigen::MatrixXd covariance) {
    if (covariance.rows() != covariance.cols())
        throw ConfigError("GaussianPathSampler: covariance must be square");
    const Eigen::Index m = covariance.rows();
    if (m == 0) throw ConfigError("GaussianPathSampler: covariance is empty");
    double scale = covariance.cwiseAbs().maxCoeff();
    double asym = (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * (scale + 1.0))
        throw ConfigError("GaussianPathSampler: covariance is not symmetric");
    covariance_ = 0.5 * (covariance + covariance.transpose());

    // Spectral factorization: robust for rank-deficient covariances (a zero
    // row/column stays exactly zero in the samples) where a Cholesky-style
    // factorization would need regularization.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance_);
    if (eig.info() != Eigen::Success)
        throw NumericalError("GaussianPathSampler: factorization failed");
    Eigen::VectorXd d = eig.eigenvalues();
    double dmax = d.cwiseAbs().maxCoeff();
    if (d.minCoeff() < -1e-8 * (dmax + 1e-300))
        throw NumericalError("GaussianPathSampler: covariance is not positive semidefinite");
    Eigen::VectorXd root = d.cwiseMax(0.0).cwiseSqrt();
    transform_ = eig.eigenvectors() * root.asDiagonal();
}

std::vector<double> GaussianPathSampler::sample(RandomStream& rng) const {
    const Eigen::Index m = transform_.rows();
    Eigen::VectorXd xi(m);
    for (Eigen::Index i = 0; i < m; ++i) xi(i) = rng.normal();
    Eigen::VectorXd v = transform_ * xi;
    return {v.data(), v.data() + m};
}

std::vector<double> sample_gaussian_path(const Eigen::MatrixXd& covariance, RandomStream& rng) {
    return GaussianPathSampler(covariance).sample(rng);
}

double KieferGrid::at(double t, double x) const {
    std::ptrdiff_t i = find_level(t_grid, t);
    std::ptrdiff_t j = find_level(x_grid, x);
    if (i < 0 || j < 0)
        throw NumericalError("KieferGrid: field was not sampled at (" + std::to_string(t) +
                             ", " + std::to_string(x) + ")");
    return values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
}

KieferGrid sample_kiefer(std::vector<double> t_grid, std::vector<double> x_grid,
                         RandomStream& rng) {
    if (t_grid.empty() || x_grid.empty())
        throw ConfigError("sample_kiefer: grids must be nonempty");
    sort_dedupe(t_grid);
    sort_dedupe(x_grid);
    if (t_grid.front() < -1e-12) throw ConfigError("sample_kiefer: negative time level");
    t_grid.front() = std::max(t_grid.front(), 0.0);
    if (x_grid.front() < -1e-12 || x_grid.back() > 1.0 + 1e-12)
        throw ConfigError("sample_kiefer: x levels must lie in [0, 1]");
    x_grid.front() = std::max(x_grid.front(), 0.0);
    x_grid.back() = std::min(x_grid.back(), 1.0);

    // Internal x levels always reach 1 so each bridge can be pinned there.
    std::vector<double> xs = x_grid;
    if (xs.back() < 1.0 - 1e-12) xs.push_back(1.0);
    const std::size_t nx = xs.size();
    const std::size_t n_pub = x_grid.size();

    KieferGrid K;
    K.t_grid = t_grid;
    K.x_grid = x_grid;
    std::vector<double> cum(n_pub, 0.0);
    std::vector<double> w(nx);
    double prev_t = 0.0;
    for (double t : t_grid) {
        double dt = std::max(t - prev_t, 0.0);
        prev_t = t;
        // Brownian motion at the x levels, then pinned into a bridge.
        double acc = 0.0;
        double prev_x = 0.0;
        for (std::size_t j = 0; j < nx; ++j) {
            double dx = xs[j] - prev_x;
            prev_x = xs[j];
            acc += std::sqrt(std::max(dx, 0.0)) * rng.normal();
            w[j] = acc;
        }
        double w1 = w[nx - 1];
        double sdt = std::sqrt(dt);
        for (std::size_t j = 0; j < n_pub; ++j) cum[j] += sdt * (w[j] - xs[j] * w1);
        K.values.push_back(cum);
    }
    return K;
}

std::pair<std::vector<double>, std::vector<double>> kiefer_support(
    const MixedCdf& service_cdf, const GridPath& entry_curve,
    const std::vector<double>& partition, const std::vector<double>& out_times) {
    check_partition(partition);
    std::vector<double> ts;
    ts.reserve(partition.size());
    for (double s : partition) ts.push_back(entry_curve.value(s));
    std::vector<double> xs;
    for (double t : out_times) {
        for (std::size_t p = 1; p < partition.size(); ++p) {
            double s_prev = partition[p - 1];
            if (s_prev > t + reltol(t)) break;
            xs.push_back(service_cdf.eval(std::max(t - s_prev, 0.0)));
        }
        xs.push_back(service_cdf.eval(t));  // the V(0, t) lookup
    }
    sort_dedupe(ts);
    sort_dedupe(xs);
    return {std::move(ts), std::move(xs)};
}

std::vector<double> z_via_kiefer(const KieferGrid& field, const MixedCdf& service_cdf,
                                 const GridPath& entry_curve,
                                 const std::vector<double>& partition,
                                 const std::vector<double>& out_times) {
    check_partition(partition);
    const MixedCdf& F = service_cdf;
    std::vector<double> out;
    out.reserve(out_times.size());
    for (double t : out_times) {
        double sum = field.at(entry_curve.value(0.0), F.eval(t));
        for (std::size_t p = 1; p < partition.size(); ++p) {
            double s_prev = partition[p - 1];
            if (s_prev > t + reltol(t)) break;
            double x = F.eval(std::max(t - s_prev, 0.0));
            sum += field.at(entry_curve.value(partition[p]), x) -
                   field.at(entry_curve.value(s_prev), x);
        }
        out.push_back(-sum);
    }
    return out;
}

BridgeSampler::BridgeSampler(const MixedCdf& residual_cdf, const GridPath& grid_template) {
    step_ = grid_template.step();
    const std::size_t n = grid_template.size();
    std::vector<double> u(n);
    for (std::size_t k = 0; k < n; ++k) {
        double v = residual_cdf.eval(step_ * static_cast<double>(k));
        u[k] = std::clamp(v, 0.0, 1.0);
    }
    levels_ = u;
    sort_dedupe(levels_);
    if (levels_.back() < 1.0 - 1e-12) levels_.push_back(1.0);
    index_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::ptrdiff_t j = find_level(levels_, u[k]);
        if (j < 0) throw NumericalError("BridgeSampler: level lookup failed");
        index_[k] = static_cast<std::size_t>(j);
    }
}

GridPath BridgeSampler::sample(RandomStream& rng) const {
    const std::size_t m = levels_.size();
    std::vector<double> w(m);
    double acc = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double du = levels_[j] - prev;
        prev = levels_[j];
        acc += std::sqrt(std::max(du, 0.0)) * rng.normal();
        w[j] = acc;
    }
    double w1 = w[m - 1];  // levels_ ends at 1 by construction
    std::vector<double> out(index_.size());
    for (std::size_t k = 0; k < index_.size(); ++k) {
        std::size_t j = index_[k];
        out[k] = w[j] - levels_[j] * w1;
    }
    return GridPath(step_, std::move(out), Interp::Linear);
}

std::function<double(double, double)> y_covariance(const YSpec& spec) {
    if (std::holds_alternative<YZero>(spec))
        return [](double, double) { return 0.0; };
    if (const auto* b = std::get_if<YBrownian>(&spec)) {
        double rate = b->variance_rate;
        if (rate < 0.0) throw ConfigError("y_covariance: negative variance rate");
        return [rate](double s, double t) { return rate * std::min(s, t); };
    }
    throw ConfigError("y_covariance: a fixed path has no Gaussian law");
}

Eigen::MatrixXd h_covariance(const std::function<double(double, double)>& cov_y,
                             const MixedCdf& service_cdf, const std::vector<double>& times) {
    const MixedCdf& F = service_cdf;
    const auto m = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd C(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i; j < m; ++j) {
            double s = times[i];
            double t = times[j];
            double v = cov_y(s, t);
            v -= integrate_dF(F, t, [&](double u) { return cov_y(s, t - u); });
            v -= integrate_dF(F, s, [&](double w) { return cov_y(s - w, t); });
            v += integrate_dF(F, s, [&](double w) {
                return integrate_dF(F, t, [&](double u) { return cov_y(s - w, t - u); });
            });
            C(i, j) = v;
            C(j, i) = v;
        }
    }
    return C;
}

double sample_x0(const X0Law& law, RandomStream& rng) {
    if (const auto* p = std::get_if<X0Point>(&law)) return p->value;
    if (const auto* n = std::get_if<X0Normal>(&law)) {
        if (n->sd < 0.0) throw ConfigError("sample_x0: negative standard deviation");
        return n->mean + n->sd * rng.normal();
    }
    const auto& e = std::get<X0Empirical>(law);
    if (e.values.empty()) throw ConfigError("sample_x0: empirical law has no values");
    return e.values[rng.below(e.values.size())];
}

LimitSampler::LimitSampler(LimitKind kind, LimitInputs inputs, const GridPath& grid_template,
                           VolterraOptions options)
    : kind_(kind), in_(std::move(inputs)), opt_(options) {
    step_ = grid_template.step();
    const std::size_t n = grid_template.size();
    if (n < 2) throw ConfigError("LimitSampler: grid needs at least two points");
    const double horizon = grid_template.horizon();
    const double slack = reltol(horizon);

    if (in_.service_cdf.eval(0.0) >= 1.0 - 1e-12)
        throw ConfigError("LimitSampler: service distribution puts all mass at 0");
    if (in_.q0 < 0.0) throw ConfigError("LimitSampler: q0 must be nonnegative");
    if (in_.entry_curve.size() == 0 || in_.entry_curve.horizon() < horizon - slack)
        throw ConfigError("LimitSampler: entry curve does not cover the sampling horizon");
    if (kind_ == LimitKind::FiniteServer) {
        if (in_.fluid_q.size() == 0 || in_.fluid_q.horizon() < horizon - slack)
            throw ConfigError("LimitSampler: fluid regime path does not cover the horizon");
    }
    if (const auto* nl = std::get_if<X0Normal>(&in_.x0)) {
        if (nl->sd < 0.0) throw ConfigError("LimitSampler: negative X0 standard deviation");
    } else if (const auto* el = std::get_if<X0Empirical>(&in_.x0)) {
        if (el->values.empty()) throw ConfigError("LimitSampler: empirical X0 law is empty");
    }

    times_.resize(n);
    f_vals_.resize(n);
    ftilde_vals_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        times_[k] = step_ * static_cast<double>(k);
        f_vals_[k] = in_.service_cdf.eval(times_[k]);
        ftilde_vals_[k] = in_.residual_cdf.eval(times_[k]);
    }

    if (const auto* fp = std::get_if<YFixedPath>(&in_.y)) {
        if (std::fabs(fp->path.step() - step_) > reltol(step_) || fp->path.size() < n)
            throw ConfigError(
                "LimitSampler: fixed arrival fluctuation path must live on the sampling grid");
        y_fixed_vals_.assign(fp->path.values().begin(), fp->path.values().begin() +
                                                            static_cast<std::ptrdiff_t>(n));
    } else if (const auto* br = std::get_if<YBrownian>(&in_.y)) {
        if (br->variance_rate < 0.0)
            throw ConfigError("LimitSampler: negative arrival fluctuation variance rate");
    }

    kernel_.emplace(in_.service_cdf, step_, n - 1);
    z_sampler_.emplace(z_covariance(in_.service_cdf, in_.entry_curve, times_));
    bridge_.emplace(in_.residual_cdf, grid_template);

    if (kind_ == LimitKind::InfiniteServer) {
        init_hat_coef_ = 0.0;
        init_tilde_coef_ = 1.0;
        init_split_ = false;
        s_coef_ = std::sqrt(in_.q0);
    } else if (in_.q0 > 1.0 + in_.level_tol) {
        init_hat_coef_ = 1.0;
        init_tilde_coef_ = 0.0;
        init_split_ = false;
        s_coef_ = 1.0;
    } else if (in_.q0 < 1.0 - in_.level_tol) {
        init_hat_coef_ = 0.0;
        init_tilde_coef_ = 1.0;
        init_split_ = false;
        s_coef_ = std::sqrt(in_.q0);
    } else {
        init_split_ = true;  // X0^+ with 1 - F, X0 ^ 0 with 1 - F~
        s_coef_ = 1.0;
    }
}

LimitSample LimitSampler::sample(RandomStream& rng) const {
    const std::size_t n = times_.size();
    LimitSample out;

    // Draw order is part of the reproducibility contract: X0, then the
    // initial-customer bridge, then the arrival fluctuation, then Z.
    out.x0 = sample_x0(in_.x0, rng);
    out.s = bridge_->sample(rng);

    std::vector<double> y(n, 0.0);
    if (const auto* br = std::get_if<YBrownian>(&in_.y)) {
        double sd = std::sqrt(br->variance_rate * step_);
        for (std::size_t k = 1; k < n; ++k) y[k] = y[k - 1] + sd * rng.normal();
    } else if (std::holds_alternative<YFixedPath>(in_.y)) {
        y = y_fixed_vals_;
    }

    std::vector<double> conv(n);
    for (std::size_t k = 0; k < n; ++k) conv[k] = kernel_->at(y, k);
    std::vector<double> h(n);
    for (std::size_t k = 0; k < n; ++k) h[k] = y[k] - conv[k];

    std::vector<double> z = z_sampler_->sample(rng);

    double hat;
    double tilde;
    if (init_split_) {
        hat = std::max(out.x0, 0.0);
        tilde = std::min(out.x0, 0.0);
    } else {
        hat = init_hat_coef_ * out.x0;
        tilde = init_tilde_coef_ * out.x0;
    }

    std::vector<double> forcing(n);
    for (std::size_t k = 0; k < n; ++k)
        forcing[k] = hat * (1.0 - f_vals_[k]) + tilde * (1.0 - ftilde_vals_[k]) +
                     s_coef_ * out.s[k] + h[k] + z[k];

    out.y = GridPath(step_, std::move(y), Interp::Linear);
    out.h = GridPath(step_, std::move(h), Interp::Linear);
    out.z = GridPath(step_, std::move(z), Interp::Linear);

    if (kind_ == LimitKind::InfiniteServer) {
        out.x = GridPath(step_, std::move(forcing), Interp::Linear);
        out.residual = 0.0;
        out.sweeps = 0;
        return out;
    }

    VolterraProblem prob{GridPath(step_, std::move(forcing), Interp::Linear), in_.service_cdf,
                         FRegime{in_.fluid_q, 1.0, in_.level_tol}};
    VolterraSolution sol = solve_volterra(prob, opt_);
    out.x = std::move(sol.y);
    out.residual = sol.residual;
    out.sweeps = sol.sweeps;
    return out;
}

LimitSample solve_limit_X(const LimitInputs& inputs, const GridPath& grid_template,
                          RandomStream& rng, const VolterraOptions& options) {
    return LimitSampler(LimitKind::FiniteServer, inputs, grid_template, options).sample(rng);
}

LimitSample solve_limit_X_infserver(const LimitInputs& inputs, const GridPath& grid_template,
                                    RandomStream& rng, const VolterraOptions& options) {
    return LimitSampler(LimitKind::InfiniteServer, inputs, grid_template, options).sample(rng);
}

} // namespace qlimits
