#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qlimits/fluid.hpp"
#include "qlimits/gaussian.hpp"
#include "qlimits/mixed_cdf.hpp"
#include "qlimits/simulator.hpp"

namespace qlimits {

enum class ScenarioArrivals : std::uint8_t { None, Poisson, Periodic };

// One experiment family: a system template parameterized by the scale n
// (arrival rate and initial population grow proportionally to n), together
// with its law-of-large-numbers model and the inputs of the Gaussian limit.
// All cross-field consistency (the fluid arrival curve matching the arrival
// process's mean rate, F(0) < 1, nondecreasing curves) is enforced at parse
// time, so a Scenario in hand is always internally consistent.
struct Scenario {
    std::string name = "scenario";
    bool infinite_servers = false;  // unlimited-server system when true
    double q0 = 0.0;                // initial customers per unit of scale
    ScenarioArrivals arrival_kind = ScenarioArrivals::None;
    double arrival_rate = 0.0;      // per unit of scale per unit time
    MixedCdf service_cdf;
    MixedCdf residual_cdf;          // initial customers in service
    double horizon = 1.0;
    double grid_step = 1.0 / 128.0;
    double tol = 1e-9;              // solver tolerance
    double level_tol = 1e-9;        // critical-band half width around level 1
    X0Law x0 = X0Point{};
    YSpec y = YZero{};              // arrival fluctuation law for the limit
    std::uint64_t seed = 1;         // default master seed

    std::size_t grid_points() const;
    double grid_horizon() const;    // (grid_points - 1) * grid_step >= horizon
    GridPath grid_template() const; // zero path on the experiment grid
    GridPath arrival_curve() const; // fluid arrival curve e(t) = rate * t

    // Concrete simulation at scale n: arrival rate scaled by n, initial
    // population floor(q0 * n), the given stream seed.
    SimConfig sim_config(std::size_t n, std::uint64_t stream_seed) const;

    FluidModel fluid_model() const;

    // Inputs of the Gaussian limit, wired to a solved fluid model: the entry
    // curve driving the service noise is the fluid entry process for the
    // finite-server system and the exogenous arrival curve for the
    // unlimited-server system.
    LimitInputs limit_inputs(const FluidSolution& fluid) const;

    VolterraOptions solver_options() const;
};

// Parse and fully validate a scenario from JSON text.  `origin` names the
// source in error messages.  Field errors throw ConfigError with the
// offending field path; consistency violations report the discrepancy.
Scenario scenario_from_json(const std::string& json_text,
                            const std::string& origin = "<inline>");

// Reads the file and delegates to scenario_from_json.
Scenario parse_scenario(const std::string& path);

} // namespace qlimits
