#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qlimits/fluid.hpp"
#include "qlimits/scenario.hpp"

namespace qlimits {

// Stream id for replication `rep` of experiment `experiment` under a master
// seed: simulation replications at scale n use experiment = n; limit-sampler
// replications use experiment = kLimitExperimentTag.  This mapping is part of
// the reproducibility contract.
inline constexpr std::uint64_t kLimitExperimentTag = 0x4C494D4954ULL;  // "LIMIT"

// Law-of-large-numbers experiment: per replication, the sup over the grid of
// |Q(t)/n - q(t)| and |A(t)/n - a(t)|.
struct LlnRaw {
    std::size_t n = 0;
    std::size_t rep = 0;
    double sup_q_dev = 0.0;
    double sup_a_dev = 0.0;
};

struct LlnRow {
    std::size_t n = 0;
    std::size_t reps = 0;
    double median_q_dev = 0.0;
    double q90_q_dev = 0.0;
    double median_a_dev = 0.0;
    double q90_a_dev = 0.0;
};

struct LlnReport {
    std::string scenario;
    std::vector<LlnRow> rows;   // one per n, in input order
    std::vector<LlnRaw> raw;    // sorted by (n-position, rep)
    double fluid_residual = 0.0;
    double wall_seconds = 0.0;  // metadata only; never serialized
};

// Central-limit experiment: per time point, simulated X_n(t) against sampled
// limit X(t).
struct CltRaw {
    int source = 0;  // 0 = simulation, 1 = limit sampler
    std::size_t rep = 0;
    double t = 0.0;
    double x = 0.0;
};

struct CltRow {
    double t = 0.0;
    double sim_mean = 0.0;
    double sim_var = 0.0;
    double lim_mean = 0.0;
    double lim_var = 0.0;
    double ks_stat = 0.0;
    double p_value = 1.0;
    double mean_gap_se = 0.0;  // |sim_mean - lim_mean| over the SE of the gap
    double var_gap_se = 0.0;   // |sim_var - lim_var| over the SE of the gap
};

struct CltReport {
    std::string scenario;
    std::size_t n = 0;
    std::size_t reps = 0;
    std::vector<CltRow> rows;  // one per time point, in input order
    std::vector<CltRaw> raw;   // sorted by (source, rep, t)
    // Regularity verdict for path-space convergence; when false the
    // comparison is labeled marginals-only (which remains valid).
    bool regularity_holds = false;
    std::vector<double> regularity_eps;
    std::vector<double> regularity_values;
    double fluid_residual = 0.0;
    double max_limit_residual = 0.0;
    double wall_seconds = 0.0;  // metadata only; never serialized
};

// Fluid solution used by both experiments: the finite-server model is solved
// by the fixed-point solver; the unlimited-server model has the explicit form
//   q(t) = q0 (1 - Ftilde(t)) + e(t) - integral of e(t-s) dF(s)
// with entries a = e.
FluidSolution scenario_fluid(const Scenario& sc);

// Runs `reps` seeded replications at every scale in n_list and reports the
// sup-deviation quantiles.  The scenario's fluid model must solve within
// tolerance first (consistency gate).  Results are independent of `threads`.
LlnReport run_lln(const Scenario& sc, const std::vector<std::size_t>& n_list,
                  std::size_t reps, std::uint64_t master_seed, int threads = 1);

// Collects reps samples of the centered scaled simulation at each time point
// and reps samples of the Gaussian limit, and compares them per time point
// (two-sample KS, mean and variance gaps in SE units).
CltReport run_clt(const Scenario& sc, std::size_t n, std::size_t reps,
                  const std::vector<double>& t_points, std::uint64_t master_seed,
                  int threads = 1);

} // namespace qlimits
