#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "qlimits/grid_path.hpp"
#include "qlimits/rng.hpp"

namespace qlimits {

struct Atom {
    double location;
    double mass;
};

// Distribution function of a nonnegative random variable, represented as
//   F(x) = sum of atom masses at locations <= x  +  C(x)
// where C is a continuous nondecreasing component stored as cumulative values
// on a uniform grid over [0, t_max] (piecewise linear between grid points).
// Mass beyond t_max is carried explicitly as tail_mass; a distribution whose
// builder knows its analytic tail (exponential) also carries a tail rate so
// sampling beyond the represented horizon stays exact.
//
// Invariant: atom total + continuous increment + tail_mass == 1 (within 1e-12)
// unless the object was built as a sub-probability function (f_prime output).
class MixedCdf {
public:
    MixedCdf() = default;

    static MixedCdf exponential(double rate, double t_max, double grid_step);
    static MixedCdf uniform(double lo, double hi, double grid_step);
    static MixedCdf point_mass(double at);
    static MixedCdf empirical(std::vector<double> samples);
    static MixedCdf mixture(const std::vector<std::pair<double, MixedCdf>>& weighted);
    // Length-biased residual distribution (1/mean) * integral of (1 - F),
    // accumulated with the trapezoid rule on the same grid.  Inherits the
    // base distribution's tail rate.
    static MixedCdf equilibrium_of(const MixedCdf& base, double t_max, double grid_step);
    static MixedCdf from_parts(std::vector<Atom> atoms, double grid_step,
                               std::vector<double> continuous_cumulative, double tail_mass,
                               std::optional<double> tail_rate = std::nullopt,
                               bool subprobability = false);

    double eval(double x) const;  // F(x), right-continuous
    double left(double x) const;  // F(x-)
    double jump(double x) const;  // atom mass at x (0 if none)

    double t_max() const { return t_max_; }
    double grid_step() const { return grid_step_; }
    double tail_mass() const { return tail_mass_; }
    std::optional<double> tail_rate() const { return tail_rate_; }
    bool subprobability() const { return subprobability_; }
    double atom_total() const;
    double continuous_total() const { return cont_.empty() ? 0.0 : cont_.back(); }
    double total_represented() const { return atom_total() + continuous_total(); }

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<double>& continuous_values() const { return cont_; }
    // C(b) - C(a) of the continuous component alone.
    double continuous_increment(double a, double b) const;

    double mean() const;
    double variance() const;

    // Generalized-inverse sampling honoring atoms; draws beyond t_max use the
    // exponential tail extrapolation and throw if no tail rate is declared.
    double sample(RandomStream& rng) const;

private:
    double continuous_eval(double x) const;
    void build_breakpoints();

    std::vector<Atom> atoms_;
    double grid_step_ = 1.0;
    std::vector<double> cont_;  // cumulative continuous mass at grid points; cont_[0] == 0
    double tail_mass_ = 0.0;
    std::optional<double> tail_rate_;
    bool subprobability_ = false;
    double t_max_ = 0.0;

    // Sorted locations at which F changes slope or jumps, with right/left
    // values; F is linear between consecutive breakpoints.
    std::vector<double> bp_x_;
    std::vector<double> bp_right_;
    std::vector<double> bp_left_;
};

// integral over [0, t] of g dF, atoms evaluated exactly and the continuous
// component by the midpoint rule per grid cell (O(grid_step^2) for smooth g).
// The closed interval convention includes an atom at 0.
double integrate_dF(const MixedCdf& F, double t, const std::function<double(double)>& g);

// integral over [0, t] of g(u) dF(u) with g a GridPath (evaluated through its
// interpolation mode; for Linear paths the midpoint value is the endpoint
// average).  Requires g.horizon() >= t.
double stieltjes_integral(const GridPath& g, const MixedCdf& F, double t);

// integral over [0, t] of g(t - u) dF(u).  Requires g.horizon() >= t.
double convolve_stieltjes(const GridPath& g, const MixedCdf& F, double t);

// x -> integral over [0, x] of (1 - F(u)) / (1 - F(u-)) dF(u).
// Atoms are rescaled; the continuous component passes through unchanged, so
// continuous F gives back F exactly.  The result is a sub-probability
// MixedCdf (no tail mass).
MixedCdf f_prime(const MixedCdf& F);

struct HazardResult {
    double value = 0.0;
    bool complete = true;      // false if integration stopped at the support top
    double stopped_at = 0.0;   // where it stopped, when complete == false
};

// integral over [0, x] of dF(u) / (1 - F(u-)), stopping with a flag where
// 1 - F(u-) vanishes.
HazardResult hazard_integral(const MixedCdf& F, double x);

} // namespace qlimits
