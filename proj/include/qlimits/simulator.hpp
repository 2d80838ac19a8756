#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "qlimits/grid_path.hpp"
#include "qlimits/mixed_cdf.hpp"
#include "qlimits/rng.hpp"

namespace qlimits {

struct PoissonArrivals {
    double rate;  // total rate for the system being simulated
};
struct RenewalArrivals {
    MixedCdf interarrival;
};
struct PeriodicArrivals {
    double period;
    double first;  // first epoch; subsequent ones every `period`
};
struct ExplicitArrivals {
    std::vector<double> epochs;
};
using ArrivalSpec = std::variant<PoissonArrivals, RenewalArrivals, PeriodicArrivals,
                                 ExplicitArrivals>;

struct SimConfig {
    std::optional<long long> n;  // server count; nullopt = infinite-server system
    long long q0 = 0;            // customers present at time 0-
    ArrivalSpec arrivals = ExplicitArrivals{};
    MixedCdf service_cdf;   // F, service of queued/arriving customers; F(0) < 1
    MixedCdf residual_cdf;  // Ftilde, residual service of those initially in service
    // Two-class mode: initially queued customers draw service from this
    // distribution instead of F, and the trace carries the split bookkeeping.
    std::optional<MixedCdf> initial_queue_cdf;

    // Explicit overrides for golden tests; sampled from the seeded stream
    // when absent.
    std::optional<std::vector<double>> residuals;
    std::optional<std::vector<double>> queued_services;
    std::optional<std::vector<double>> arrival_services;

    double horizon = 1.0;
    std::uint64_t seed = 0;
    std::uint64_t event_budget = 10'000'000;
};

enum class EventKind { Init, Arrival, Departure, Mixed };

// Piecewise-constant (right-continuous) system trajectories recorded at event
// times, plus everything needed to re-verify the defining equations exactly:
// entry epochs tau, the service times assigned at entry, and the initial
// residuals.  All counting columns are integers so verification is exact.
struct SimTrace {
    std::vector<double> event_times;
    std::vector<long long> q;       // customers in system
    std::vector<long long> a;       // cumulative entries into service
    std::vector<long long> qtilde;  // initial-in-service customers still in service
    std::vector<long long> e;       // exogenous arrivals so far
    std::vector<EventKind> kinds;

    std::vector<double> tau;            // entry epoch of the i-th entrant
    std::vector<double> service_times;  // its service time
    std::vector<double> residuals;      // initial-in-service residuals

    bool two_class = false;
    std::vector<long long> qhat;    // initial population still present
    std::vector<long long> ahat;    // entries of initially queued customers
    std::vector<long long> acheck;  // entries of exogenous arrivals
    std::vector<double> tau_hat;    // entry epochs of the initially queued
    std::vector<double> service_hat;

    std::optional<long long> n;
    long long q0 = 0;
    double horizon = 0.0;

    // Right-continuous evaluation of a counting column at time t.
    long long at(const std::vector<long long>& col, double t) const;
};

// Event-driven FCFS simulation.  Servers are refilled from the queue head;
// a zero-service entrant passes through at its entry instant without seizing
// a server, which realizes the minimal-admission tie rule (the entry process
// takes the smallest jump consistent with the system equations).
SimTrace simulate_gg_n(const SimConfig& cfg);

// Same engine with unlimited servers (config.n ignored); entries == arrivals.
SimTrace simulate_gg_inf(const SimConfig& cfg);

// Re-evaluates the defining system equations at every recorded event time
// from tau/service_times/residuals alone and returns the largest absolute
// discrepancy (0 for a faithful trace; all quantities are integers).  Also
// re-derives each tau_i from the entry-count path and flags mismatches.
double verify_system_equations(const SimTrace& trace);

struct ScaledPaths {
    GridPath fluid;      // Q(t)/n
    GridPath diffusion;  // sqrt(n) (Q(t)/n - q(t))
};

// Samples Q at the fluid grid and applies the two scalings; n is the scaling
// parameter (the server count for finite systems).
ScaledPaths scaled_paths(const SimTrace& trace, double n, const GridPath& fluid_q);

// Centered, sqrt(n)-scaled empirical process of the initial residuals on the
// grid: (#(residuals <= t) - m Ftilde(t)) / sqrt(n), m = residuals.size().
GridPath empirical_initial_process(const std::vector<double>& residuals,
                                   const MixedCdf& residual_cdf, double n,
                                   const GridPath& grid_template);

} // namespace qlimits
