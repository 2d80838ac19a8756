#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "qlimits/detail/discrete_kernel.hpp"
#include "qlimits/grid_path.hpp"
#include "qlimits/mixed_cdf.hpp"
#include "qlimits/rng.hpp"
#include "qlimits/volterra.hpp"

namespace qlimits {

// ---------------------------------------------------------------------------
// Service-noise covariance
// ---------------------------------------------------------------------------

// Covariance of the centered service-completion noise Z evaluated on `times`:
//   Cov(s, t) = integral over [0, s^t] of F(s^t - u) (1 - F(sv t - u)) da(u)
// where a is the cumulative entry-into-service curve.  The atom of da at 0
// (mass a(0)) is included; the continuous part of da is integrated with the
// midpoint-per-cell rule on a's grid, with a partial final cell when a time
// falls strictly inside one.
Eigen::MatrixXd z_covariance(const MixedCdf& service_cdf, const GridPath& entry_curve,
                             const std::vector<double>& times);

// Covariance of the finite-sum (partition) approximation of Z built from a
// Kiefer field: for partition 0 = s_0 <= s_1 < ... < s_l,
//   Cov(t, t') = sum_i [a(s_i) - a(s_{i-1})] F(t^t' - s_{i-1}) (1 - F(tvt' - s_{i-1}))
//                + a(0) F(t^t') (1 - F(tvt')).
// Terms with s_{i-1} > t^t' vanish automatically because F(x) = 0 for x < 0.
// As the partition refines this converges to z_covariance; used as the oracle
// for z_via_kiefer and for partition-refinement ladder tests.
Eigen::MatrixXd z_partition_covariance(const MixedCdf& service_cdf, const GridPath& entry_curve,
                                       const std::vector<double>& partition,
                                       const std::vector<double>& times);

// ---------------------------------------------------------------------------
// Gaussian path sampling from an explicit covariance
// ---------------------------------------------------------------------------

// Factorizes a symmetric positive-semidefinite covariance matrix once (a
// spectral decomposition; tiny negative eigenvalues from round-off are
// clamped to zero) and then draws mean-zero Gaussian vectors with that
// covariance.  Throws NumericalError if the matrix is materially non-PSD and
// ConfigError if it is not symmetric.
class GaussianPathSampler {
public:
    explicit GaussianPathSampler(Eigen::MatrixXd covariance);

    std::size_t dim() const { return static_cast<std::size_t>(transform_.rows()); }
    std::vector<double> sample(RandomStream& rng) const;
    const Eigen::MatrixXd& covariance() const { return covariance_; }

private:
    Eigen::MatrixXd covariance_;
    Eigen::MatrixXd transform_;  // T with T T^T = covariance
};

// One-shot convenience wrapper.
std::vector<double> sample_gaussian_path(const Eigen::MatrixXd& covariance, RandomStream& rng);

// ---------------------------------------------------------------------------
// Kiefer field
// ---------------------------------------------------------------------------

// A Kiefer field K(t, x) sampled exactly on a finite rectangle of points:
// mean zero, covariance E K(t,x) K(s,y) = (t ^ s)(x ^ y - x y).  Rows follow
// t_grid, columns x_grid.  Lookups are exact (tolerance-matched) grid hits;
// requesting an unsampled point throws.
struct KieferGrid {
    std::vector<double> t_grid;                // sorted unique, >= 0
    std::vector<double> x_grid;                // sorted unique, in [0, 1]
    std::vector<std::vector<double>> values;   // values[i][j] = K(t_grid[i], x_grid[j])

    double at(double t, double x) const;
};

// Draws a Kiefer field on the rectangle t_grid x x_grid: independent Brownian
// bridges in x, scaled by sqrt of the t-increments and summed cumulatively.
// Grids are sorted and deduplicated internally.
KieferGrid sample_kiefer(std::vector<double> t_grid, std::vector<double> x_grid,
                         RandomStream& rng);

// The exact set of (t, x) points z_via_kiefer will query for the given
// partition and output times, so callers can sample precisely the needed
// rectangle: first = Kiefer t-levels (entry-curve values), second = x-levels
// (service-cdf values).
std::pair<std::vector<double>, std::vector<double>> kiefer_support(
    const MixedCdf& service_cdf, const GridPath& entry_curve,
    const std::vector<double>& partition, const std::vector<double>& out_times);

// Finite-sum partition approximation of Z driven by a sampled Kiefer field,
// with V(s, x) = K(a(s), F(x)):
//   Z_l(t) = -[ sum_{i=1..l} (V(s_i, t - s_{i-1}) - V(s_{i-1}, t - s_{i-1})) 1{s_{i-1} <= t}
//               + V(0, t) ].
// Its covariance is exactly z_partition_covariance for the same partition.
std::vector<double> z_via_kiefer(const KieferGrid& field, const MixedCdf& service_cdf,
                                 const GridPath& entry_curve,
                                 const std::vector<double>& partition,
                                 const std::vector<double>& out_times);

// ---------------------------------------------------------------------------
// Initial-customer bridge term S = (Brownian bridge) composed with the
// initial-customer service distribution
// ---------------------------------------------------------------------------

// Precomputes the distinct levels u_k = residual_cdf(t_k) so repeated samples
// share one sorted level set; S(t_k) = B(u_k) for a standard Brownian bridge
// B on [0, 1].  Exact variance u (1 - u) at every grid time.
class BridgeSampler {
public:
    BridgeSampler(const MixedCdf& residual_cdf, const GridPath& grid_template);

    // Values of S on the grid (Linear interpolation between grid points).
    GridPath sample(RandomStream& rng) const;

private:
    double step_;
    std::vector<double> levels_;       // sorted unique values in [0, 1], last == 1
    std::vector<std::size_t> index_;   // grid point -> level index
};

// ---------------------------------------------------------------------------
// Arrival-fluctuation input Y and the combined term H = Y - conv(Y, dF)
// ---------------------------------------------------------------------------

struct YZero {};
struct YBrownian {
    double variance_rate = 1.0;  // Var Y(t) = variance_rate * t
};
struct YFixedPath {
    GridPath path;  // deterministic path; must live on the sampling grid
};
using YSpec = std::variant<YZero, YBrownian, YFixedPath>;

// Covariance function of Y for analytic specs; throws ConfigError for
// YFixedPath (a fixed path has no Gaussian law).
std::function<double(double, double)> y_covariance(const YSpec& spec);

// Covariance of H(t) = Y(t) - integral over [0,t] of Y(t-s) dF(s):
//   Cov_H(s,t) = C(s,t) - int C(s, t-u) dF(u) - int C(s-v, t) dF(v)
//                + int int C(s-v, t-u) dF(u) dF(v)
// with C the covariance of Y.  Quadrature oracle; not on the sampling path.
Eigen::MatrixXd h_covariance(const std::function<double(double, double)>& cov_y,
                             const MixedCdf& service_cdf, const std::vector<double>& times);

// ---------------------------------------------------------------------------
// The Gaussian limit equation
// ---------------------------------------------------------------------------

struct X0Point {
    double value = 0.0;
};
struct X0Normal {
    double mean = 0.0;
    double sd = 1.0;
};
struct X0Empirical {
    std::vector<double> values;  // drawn uniformly at random
};
using X0Law = std::variant<X0Point, X0Normal, X0Empirical>;

double sample_x0(const X0Law& law, RandomStream& rng);

struct LimitInputs {
    double q0 = 1.0;          // fluid initial quantity (per-server scale)
    MixedCdf service_cdf;     // F, fresh service times
    MixedCdf residual_cdf;    // F~, initial customers in service
    GridPath fluid_q;         // fluid queue path (regime reference; finite-server only)
    GridPath entry_curve;     // fluid entry-into-service curve: a (finite) or e (infinite)
    X0Law x0 = X0Point{};
    YSpec y = YZero{};
    double level_tol = 1e-9;  // half-width of the critical band around q == 1
};

struct LimitSample {
    double x0 = 0.0;
    GridPath s;  // initial-customer bridge term
    GridPath y;  // arrival fluctuation path
    GridPath h;  // y - conv(y, dF)
    GridPath z;  // service-completion noise
    GridPath x;  // the limit path itself
    double residual = 0.0;
    int sweeps = 0;
};

enum class LimitKind : std::uint8_t { FiniteServer, InfiniteServer };

// Precomputes everything shared across samples (Z covariance factorization,
// bridge level set, discretized service kernel, forcing ingredients) so that
// each sample() costs one Gaussian draw per source plus, for the finite-server
// equation, one fixed-point solve of
//   X(t) = forcing(t) + integral of phi(X(t-s), t-s) dF(s),
//   phi(y, u) = y 1{q(u) > 1} + y^+ 1{q(u) = 1} + 0 1{q(u) < 1},
// where the forcing collects the initial-customer terms (split by the
// position of q0 relative to 1), sqrt(q0 ^ 1) S, H, and Z.  The
// infinite-server equation is explicit:
//   X(t) = (1 - F~(t)) X0 + sqrt(q0) S(t) + H(t) + Z(t)
// with Z built from the exogenous-arrival curve.
class LimitSampler {
public:
    LimitSampler(LimitKind kind, LimitInputs inputs, const GridPath& grid_template,
                 VolterraOptions options = {});

    LimitSample sample(RandomStream& rng) const;

    const Eigen::MatrixXd& z_cov() const { return z_sampler_->covariance(); }
    const std::vector<double>& times() const { return times_; }

private:
    LimitKind kind_;
    LimitInputs in_;
    VolterraOptions opt_;
    double step_ = 0.0;
    std::vector<double> times_;
    std::vector<double> f_vals_;       // F on the grid
    std::vector<double> ftilde_vals_;  // F~ on the grid
    std::optional<GaussianPathSampler> z_sampler_;
    std::optional<BridgeSampler> bridge_;
    std::optional<detail::DiscreteKernel> kernel_;  // dF on the grid (for H)
    std::vector<double> y_fixed_vals_;              // prepared YFixedPath values
    double init_hat_coef_ = 0.0;       // X0 coefficient entering with 1 - F
    double init_tilde_coef_ = 0.0;     // X0 coefficient entering with 1 - F~
    bool init_split_ = false;          // q0 critical: positive/negative parts split
    double s_coef_ = 0.0;              // sqrt(q0 ^ 1), or sqrt(q0) for infinite-server
};

// One-shot wrappers: build a sampler and draw a single realization.
LimitSample solve_limit_X(const LimitInputs& inputs, const GridPath& grid_template,
                          RandomStream& rng, const VolterraOptions& options = {});
LimitSample solve_limit_X_infserver(const LimitInputs& inputs, const GridPath& grid_template,
                                    RandomStream& rng, const VolterraOptions& options = {});

} // namespace qlimits
