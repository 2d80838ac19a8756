#pragma once

#include <optional>
#include <vector>

#include "qlimits/mixed_cdf.hpp"
#include "qlimits/volterra.hpp"

namespace qlimits {

// Law-of-large-numbers model of the n-server system: initial level q0 (in
// units of server capacity), cumulative arrival curve e, service distribution
// F and residual-service distribution Ftilde for the customers initially in
// service.  When initial_queue_cdf is set, the initially queued customers
// carry their own service distribution and the two-class system is solved
// instead: qhat0 initially queued, qtilde0 initially in service.
struct FluidModel {
    double q0 = 0.0;
    GridPath arrival_curve;  // e, nondecreasing, e(0) >= 0; Linear interp
    MixedCdf service_cdf;    // F, must satisfy F(0) < 1
    MixedCdf residual_cdf;   // Ftilde

    std::optional<MixedCdf> initial_queue_cdf;  // Fhat (two-class system)
    double qhat0 = 0.0;
    double qtilde0 = 0.0;
};

struct FluidSolution {
    GridPath q;  // fluid system content
    GridPath a;  // cumulative entries into service
    std::optional<GridPath> qhat;    // two-class: initial population still present
    std::optional<GridPath> acheck;  // two-class: entries of exogenous arrivals
    std::optional<GridPath> ahat;    // two-class: entries of initially queued
    double residual = 0.0;
    int sweeps = 0;
    double t0 = 0.0;
    double window_mass = 0.0;
    double rho = 0.0;  // stability constant for the horizon
};

// Solves the fluid equation
//   q(t) = q0 - (q0-1)^+ F(t) - (q0 ^ 1) Ftilde(t) + e(t)
//          - int_0^t e(t-s) dF(s) + int_0^t (q(t-s)-1)^+ dF(s)
// by successive approximations (the (.-1)^+ nonlinearity is 1-Lipschitz, so
// the same contraction schedule applies), then forms
//   a(t) = (q0-1)^+ + e(t) - (q(t)-1)^+.
// With initial_queue_cdf set, solves the two-class system instead: first the
// self-contained qhat equation, then q with qhat in the forcing, then the
// entry processes.
FluidSolution solve_fluid(const FluidModel& m, const VolterraOptions& opt = {});

struct RegularityReport {
    std::vector<double> eps;
    std::vector<double> values;  // sup_t of the F-mass where q sits near 1
    double threshold = 1e-3;
    bool holds = false;  // final value under threshold (values are monotone in eps)
};

// Numerical check of the regularity condition requiring the service-time mass
// of {s : 0 < |q(t-s) - 1| < eps} to vanish uniformly as eps -> 0.  |q-1| <=
// level_tol counts as exactly 1 (and is excluded from the band).
RegularityReport check_regularity(const FluidSolution& sol, const MixedCdf& service_cdf,
                                      std::vector<double> eps_ladder,
                                      double threshold = 1e-3, double level_tol = 1e-9);

} // namespace qlimits
