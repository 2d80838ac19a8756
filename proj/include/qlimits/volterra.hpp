#pragma once

#include <optional>
#include <variant>

#include "qlimits/grid_path.hpp"
#include "qlimits/mixed_cdf.hpp"

namespace qlimits {

// Nonlinearity variants for y(t) = x(t) + integral over [0,t] of
// f(y(t-s), t-s) dB(s).  All three satisfy |f(y,t)| <= |y| and are
// 1-Lipschitz in y, which is what the contraction and stability bounds use.
struct FIdentity {};

// f(y,t) = y * 1{ref(t) > level} + y^+ * 1{ref(t) == level}, the comparison
// resolved with a tolerance band of level_tol around level.
struct FRegime {
    GridPath reference;
    double level = 1.0;
    double level_tol = 1e-9;
};

// f(y,t) = (y + m(t))^+ - m(t)^+ for a reference path m.
struct FShifted {
    GridPath shift;
};

using FVariant = std::variant<FIdentity, FRegime, FShifted>;

struct VolterraProblem {
    GridPath forcing;  // x; its grid defines the solve grid
    MixedCdf kernel;   // B, a (sub)probability distribution function
    FVariant f;
};

struct VolterraOptions {
    double tol = 1e-9;            // fixed-point and residual tolerance
    int max_sweeps = 200;         // per contraction window
    double window_mass_cap = 0.9; // pick t0 = largest grid multiple with B(t0) <= cap
};

struct VolterraSolution {
    GridPath y;          // piecewise-linear on the solve grid
    double residual;     // independently re-evaluated sup residual
    int sweeps;          // total sweeps across all windows
    double t0;           // contraction window length used
    double window_mass;  // B(t0)
};

// Successive approximations from the zero function, advancing over windows
// [k t0, (k+1) t0] whose kernel mass keeps the map a contraction.  Within a
// sweep, points are updated in increasing time and the (tiny) same-time
// kernel weight is resolved in closed form per f variant, so each window
// settles in a couple of sweeps.
VolterraSolution solve_volterra(const VolterraProblem& p, const VolterraOptions& opt = {});

// Re-evaluates the fixed-point equation on y and returns the sup residual.
double volterra_residual(const VolterraProblem& p, const GridPath& y);

// Stability constant rho(T) = sum_{i=1..floor(T/t0)+1} (1 - B(t0))^{-i};
// solutions obey sup|y| <= rho(T) sup|x|.
double bound_rho(const MixedCdf& B, double T, double t0);

// Evaluate the f variant at (y, t).
double apply_f(const FVariant& f, double y, double t);

} // namespace qlimits
