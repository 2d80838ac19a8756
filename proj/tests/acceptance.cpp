// Acceptance gate: one self-contained check per release criterion, one
// pass/fail line each, nonzero exit if anything fails.  Every tolerance is
// pinned here in code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "qlimits/experiments.hpp"
#include "qlimits/fluid.hpp"
#include "qlimits/gaussian.hpp"
#include "qlimits/grid_path.hpp"
#include "qlimits/mixed_cdf.hpp"
#include "qlimits/rng.hpp"
#include "qlimits/scenario.hpp"
#include "qlimits/simulator.hpp"
#include "qlimits/stats.hpp"
#include "qlimits/volterra.hpp"

#include "sim_support.hpp"
#include "volterra_support.hpp"

using namespace qlimits;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& on_fail) {
        if (!cond) {
            if (!ok) detail << "; ";
            detail << on_fail;
            ok = false;
        }
    }
};

int g_failures = 0;

void run_criterion(int id, const char* name, double budget_seconds,
                   const std::function<void(Outcome&)>& body) {
    Outcome out;
    auto start = std::chrono::steady_clock::now();
    try {
        body(out);
    } catch (const std::exception& e) {
        out.require(false, std::string("threw: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.require(secs <= budget_seconds, "over time budget");
    std::string detail = out.detail.str();
    std::printf("[%s] %02d %s (%.2fs of %.0fs)%s%s\n", out.ok ? "PASS" : "FAIL", id, name,
                secs, budget_seconds, detail.empty() ? "" : ": ", detail.c_str());
    std::fflush(stdout);
    if (!out.ok) ++g_failures;
}

int worker_threads() {
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
}

double sup_abs(const GridPath& p) {
    double m = 0.0;
    for (double v : p.values()) m = std::max(m, std::fabs(v));
    return m;
}

// --- criterion 2 reference curves (oscillating worked example) -------------

double sin_example_e(double t) {
    const double c = 1.0 / (1.0 + kPi);
    if (t <= 1.0) return c * (-(t - 1.0) * (t - 1.0) + kPi * t + 1.0);
    if (t >= 2.0) return 2.0;
    const double w = t - 2.0;
    return c * (-w * w + kPi * (t - 1.0) + 1.0 + w * w * std::sin(kPi / (2.0 - t))) + 1.0;
}

double sin_example_q(double t) {
    if (t >= 2.0) return 1.0;
    const double w = t - 2.0;
    return 1.0 + w * w * std::sin(kPi / (2.0 - t)) / (1.0 + kPi);
}

// --- shared fluid models -----------------------------------------------

FluidModel staircase_model(double h) {
    FluidModel m;
    m.q0 = 0.0;
    m.arrival_curve = GridPath::sampled(h, static_cast<std::size_t>(std::lround(5.0 / h)) + 1,
                                        [](double t) { return t; });
    m.service_cdf = MixedCdf::point_mass(2.0);
    m.residual_cdf = MixedCdf::point_mass(1.0);
    return m;
}

FluidModel step_drain_model(double h) {
    FluidModel m;
    m.q0 = 2.0;
    m.arrival_curve =
        GridPath::constant(h, static_cast<std::size_t>(std::lround(3.0 / h)) + 1, 0.0,
                           Interp::Linear);
    m.service_cdf = MixedCdf::point_mass(1.0);
    m.residual_cdf = MixedCdf::point_mass(1.0);
    return m;
}

FluidModel critical_flat_model(double h, double horizon) {
    FluidModel m;
    m.q0 = 1.0;
    m.service_cdf = MixedCdf::exponential(1.0, horizon + 8.0, h);
    m.residual_cdf = MixedCdf::equilibrium_of(m.service_cdf, horizon + 8.0, h);
    const double rate = 1.0 / m.service_cdf.mean();
    m.arrival_curve =
        GridPath::sampled(h, static_cast<std::size_t>(std::lround(horizon / h)) + 1,
                          [rate](double t) { return rate * t; });
    return m;
}

FluidModel exp_drain_model(double h, double horizon) {
    FluidModel m;
    m.q0 = 2.0;
    m.arrival_curve =
        GridPath::constant(h, static_cast<std::size_t>(std::lround(horizon / h)) + 1, 0.0,
                           Interp::Linear);
    m.service_cdf = MixedCdf::exponential(1.0, horizon + 8.0, h);
    m.residual_cdf = m.service_cdf;
    return m;
}

SimConfig two_customer_config() {
    SimConfig cfg;
    cfg.n = 1;
    cfg.q0 = 0;
    cfg.arrivals = ExplicitArrivals{{1.0, 2.0}};
    cfg.service_cdf = MixedCdf::mixture(
        {{0.5, MixedCdf::point_mass(0.0)}, {0.5, MixedCdf::point_mass(2.0)}});
    cfg.residual_cdf = MixedCdf::point_mass(1.0);
    cfg.arrival_services = std::vector<double>{2.0, 0.0};
    cfg.horizon = 4.0;
    return cfg;
}

// --- the criteria ----------------------------------------------------------

void criterion_fluid_goldens(Outcome& out) {
    const double h = 1.0 / 128.0;
    const double tol = 1e-6;
    using clock = std::chrono::steady_clock;

    auto timed_solve = [&](const FluidModel& m, const char* label) {
        auto t0 = clock::now();
        FluidSolution sol = solve_fluid(m);
        double secs = std::chrono::duration<double>(clock::now() - t0).count();
        out.require(secs <= 1.0, std::string(label) + " solve over 1s");
        return sol;
    };

    FluidSolution stair = timed_solve(staircase_model(h), "staircase");
    out.require(std::fabs(stair.q.value(1.0) - 1.0) <= tol, "staircase q(1)");
    out.require(std::fabs(stair.q.value(2.5) - 2.0) <= tol, "staircase q(2.5)");
    out.require(std::fabs(stair.q.value(3.5) - 2.5) <= tol, "staircase q(3.5)");
    out.require(std::fabs(stair.q.value(4.5) - 3.0) <= tol, "staircase q(4.5)");

    FluidSolution step = timed_solve(step_drain_model(h), "step-drain");
    out.require(std::fabs(step.q.value(0.5) - 2.0) <= tol, "step q(0.5)");
    out.require(std::fabs(step.q.value(1.5) - 1.0) <= tol, "step q(1.5)");
    out.require(std::fabs(step.q.value(2.5) - 0.0) <= tol, "step q(2.5)");
    out.require(std::fabs(step.a.value(0.5) - 0.0) <= tol, "step a(0.5)");
    out.require(std::fabs(step.a.value(1.5) - 1.0) <= tol, "step a(1.5)");
    out.require(std::fabs(step.a.value(2.5) - 1.0) <= tol, "step a(2.5)");

    FluidModel cm = critical_flat_model(h, 4.0);
    FluidSolution crit = timed_solve(cm, "critical-flat");
    double worst_q = 0.0, worst_a = 0.0;
    for (std::size_t k = 0; k < crit.q.size(); ++k) {
        worst_q = std::max(worst_q, std::fabs(crit.q[k] - 1.0));
        worst_a = std::max(worst_a, std::fabs(crit.a[k] - cm.arrival_curve[k]));
    }
    out.require(worst_q <= tol, "critical-flat content off level 1");
    out.require(worst_a <= tol, "critical-flat entries off the arrival curve");
    out.detail << "3 models, probes within 1e-6";
}

void criterion_oscillating_example(Outcome& out) {
    const double h = 1.0 / 1024.0;
    FluidModel m;
    m.q0 = 0.0;
    m.arrival_curve = GridPath::sampled(h, 2049, sin_example_e);
    m.service_cdf = MixedCdf::point_mass(1.0);
    m.residual_cdf = MixedCdf::point_mass(1.0);
    FluidSolution sol = solve_fluid(m);
    out.require(sol.residual <= 1e-9, "solver residual above 1e-9");
    double dev = 0.0;
    for (std::size_t k = 1024; k <= 2048; ++k)
        dev = std::max(dev, std::fabs(sol.q[k] - sin_example_q(h * static_cast<double>(k))));
    out.require(dev < 1e-3, "oscillation segment deviates by " + std::to_string(dev));
    out.detail << "sup deviation on [1,2] = " << dev;
}

void criterion_pathwise_verification(Outcome& out) {
    int bad = 0;
    for (int k = 0; k < 200; ++k) {
        SimConfig cfg = testsupport::random_config(derive_stream(20260815, 103, k));
        SimTrace tr = simulate_gg_n(cfg);
        if (verify_system_equations(tr) != 0.0) ++bad;
    }
    out.require(bad == 0, std::to_string(bad) + " randomized traces failed verification");

    SimTrace tr = simulate_gg_n(two_customer_config());
    out.require(verify_system_equations(tr) == 0.0, "tie-rule trace failed verification");
    out.require(tr.at(tr.q, 0.5) == 0 && tr.at(tr.q, 1.5) == 1 && tr.at(tr.q, 2.5) == 2 &&
                    tr.at(tr.q, 3.5) == 0,
                "tie-rule content path off the minimal-admission solution");
    out.require(tr.tau.size() == 2 && tr.tau[0] == 1.0 && tr.tau[1] == 3.0,
                "tie-rule entry epochs not {1, 3}");
    out.detail << "200 randomized traces + tie-rule walk verify to 0";
}

void criterion_noise_covariance(Outcome& out) {
    // Deterministic services: exactly zero covariance.
    {
        const double h = 1.0 / 64.0;
        GridPath a = GridPath::sampled(h, 257, [](double t) { return 0.5 * t; });
        Eigen::MatrixXd cov =
            z_covariance(MixedCdf::point_mass(2.0), a, {0.5, 1.0, 2.0, 3.0});
        out.require(cov.cwiseAbs().maxCoeff() == 0.0, "deterministic covariance not zero");
    }
    // Memoryless services: closed-form variance within 1e-6.
    {
        const double h = 1.0 / 1024.0;
        const double lambda = 2.0, mu = 1.3;
        MixedCdf F = MixedCdf::exponential(mu, 12.0, h);
        GridPath a = GridPath::sampled(h, 4097, [&](double t) { return lambda * t; });
        std::vector<double> times = {0.5, 1.0, 2.0};
        Eigen::MatrixXd cov = z_covariance(F, a, times);
        for (int i = 0; i < 3; ++i) {
            const double t = times[static_cast<std::size_t>(i)];
            const double want =
                lambda * ((1.0 - std::exp(-mu * t)) / mu -
                          (1.0 - std::exp(-2.0 * mu * t)) / (2.0 * mu));
            out.require(std::fabs(cov(i, i) - want) <= 1e-6,
                        "closed-form variance gap at t=" + std::to_string(t));
        }
    }
    // Partition-halving ladder decreases strictly toward the exact covariance.
    {
        const double h = 1.0 / 128.0;
        MixedCdf F = MixedCdf::exponential(1.3, 10.0, h);
        GridPath a = GridPath::sampled(h, 257, [](double t) { return 0.8 * t; });
        std::vector<double> times = {0.5, 1.0, 1.5, 2.0};
        Eigen::MatrixXd target = z_covariance(F, a, times);
        double prev = std::numeric_limits<double>::infinity();
        bool monotone = true;
        for (int l : {4, 8, 16, 32}) {
            std::vector<double> partition;
            for (int i = 0; i <= l; ++i) partition.push_back(2.0 * i / l);
            double gap = (z_partition_covariance(F, a, partition, times) - target)
                             .cwiseAbs()
                             .maxCoeff();
            monotone = monotone && gap < prev;
            prev = gap;
        }
        out.require(monotone, "partition ladder not strictly decreasing");
        out.detail << "zero exact, closed form within 1e-6, ladder strictly decreasing";
    }
}

void criterion_structural_golden(Outcome& out) {
    const double h = 1.0 / 128.0;
    const std::size_t npts = 641;
    FluidModel fm = staircase_model(h);
    FluidSolution fs = solve_fluid(fm);

    GridPath ypath =
        GridPath::sampled(h, npts, [](double t) { return std::sin(2.0 * t) + 0.3 * t; });
    LimitInputs in;
    in.q0 = 0.0;
    in.service_cdf = fm.service_cdf;
    in.residual_cdf = fm.residual_cdf;
    in.fluid_q = fs.q;
    in.entry_curve = GridPath::constant(h, npts, 0.0, Interp::Linear);
    in.x0 = X0Point{0.0};
    in.y = YFixedPath{ypath};
    GridPath tmpl = GridPath::constant(h, npts, 0.0, Interp::Linear);
    RandomStream rs(3);
    LimitSample smp = solve_limit_X(in, tmpl, rs);
    out.require(smp.residual <= 1e-12, "limit solve residual above 1e-12");

    double worst = 0.0;
    for (std::size_t k = 0; k < npts; ++k) {
        const double t = h * static_cast<double>(k);
        if (t < 2.0)
            worst = std::max(worst, std::fabs(smp.x[k] - ypath[k]));
        else if (t < 3.0)
            worst = std::max(worst, std::fabs(smp.x[k] - (ypath[k] - ypath[k - 256])));
    }
    out.require(worst <= 1e-12, "delayed-echo identity violated");
    for (double v : smp.z.values())
        if (v != 0.0) {
            out.require(false, "service noise not identically zero");
            break;
        }
    out.detail << "echo identity exact to 1e-12";
}

void criterion_infinite_server_variance(Outcome& out) {
    const double h = 1.0 / 32.0;
    const std::size_t npts = 65;
    const double lambda = 2.0, mu = 1.0;
    LimitInputs in;
    in.q0 = 0.0;
    in.service_cdf = MixedCdf::exponential(mu, 8.0, h);
    in.residual_cdf = MixedCdf::point_mass(1.0);
    in.entry_curve = GridPath::sampled(h, npts, [&](double t) { return lambda * t; });
    in.x0 = X0Point{0.0};
    in.y = YBrownian{lambda};
    GridPath tmpl = GridPath::constant(h, npts, 0.0, Interp::Linear);
    LimitSampler sampler(LimitKind::InfiniteServer, in, tmpl);

    const std::vector<double> probes = {0.5, 1.0, 2.0};
    const int n = 100000;
    std::vector<double> sum(3, 0.0), sumsq(3, 0.0);
    for (int r = 0; r < n; ++r) {
        RandomStream rs(derive_stream(20260815, 106, static_cast<std::uint64_t>(r)));
        LimitSample smp = sampler.sample(rs);
        for (std::size_t j = 0; j < probes.size(); ++j) {
            const double v = smp.x.value(probes[j]);
            sum[j] += v;
            sumsq[j] += v * v;
        }
    }
    auto cy = y_covariance(in.y);
    Eigen::MatrixXd ch = h_covariance(cy, in.service_cdf, probes);
    Eigen::MatrixXd cz = z_covariance(in.service_cdf, in.entry_curve, probes);
    for (std::size_t j = 0; j < probes.size(); ++j) {
        const double t = probes[j];
        const double closed = lambda * (1.0 - std::exp(-mu * t));
        const double m = sum[j] / n;
        const double var = (sumsq[j] - n * m * m) / (n - 1);
        const double se3 = 3.0 * closed * std::sqrt(2.0 / n);
        const double oracle =
            ch(static_cast<int>(j), static_cast<int>(j)) + cz(static_cast<int>(j),
                                                              static_cast<int>(j));
        out.require(std::fabs(m) <= 3.0 * std::sqrt(closed / n),
                    "mean off zero at t=" + std::to_string(t));
        out.require(std::fabs(var - closed) <= se3,
                    "variance off the occupancy law at t=" + std::to_string(t));
        out.require(std::fabs(var - oracle) <= se3,
                    "variance off the component-oracle sum at t=" + std::to_string(t));
        out.require(std::fabs(oracle - closed) <= 2e-3,
                    "component-oracle sum off the closed form at t=" + std::to_string(t));
    }
    out.detail << "100000 samples within 3 SE of the occupancy law and the oracle sum";
}

void criterion_lln(Outcome& out) {
    Scenario sc = scenario_from_json(R"({
        "name": "lln-gate",
        "horizon": 4.0, "q0": 0.0,
        "arrivals": {"kind": "poisson", "rate": 0.5},
        "service": {"kind": "exponential", "rate": 1.0},
        "residual": {"kind": "equilibrium"},
        "grid_step": 0.0078125
    })");
    LlnReport rep = run_lln(sc, {64, 256, 1024}, 200, 20260815, worker_threads());
    out.require(rep.fluid_residual <= 1e-9, "fluid gate residual above tolerance");
    out.require(rep.rows.size() == 3, "missing scale rows");
    for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
        double ratio = rep.rows[i + 1].median_q_dev / rep.rows[i].median_q_dev;
        out.require(rep.rows[i + 1].median_q_dev < rep.rows[i].median_q_dev,
                    "median content deviation not strictly decreasing");
        out.require(0.3 <= ratio && ratio <= 0.8,
                    "quadrupled-scale ratio " + std::to_string(ratio) + " outside [0.3, 0.8]");
        out.require(rep.rows[i + 1].median_a_dev < rep.rows[i].median_a_dev,
                    "median entry deviation not strictly decreasing");
    }
    out.detail << "median sup dev";
    for (const LlnRow& r : rep.rows) out.detail << " " << r.n << ":" << r.median_q_dev;
}

void criterion_clt(Outcome& out) {
    Scenario sc = scenario_from_json(R"({
        "name": "clt-gate",
        "horizon": 4.0, "q0": 1.0,
        "arrivals": {"kind": "poisson", "rate": "critical"},
        "service": {"kind": "exponential", "rate": 1.0},
        "residual": {"kind": "equilibrium"},
        "grid_step": 0.0078125
    })");
    CltReport rep = run_clt(sc, 400, 4000, {1.0, 2.0, 4.0}, 20260815, worker_threads());
    out.require(rep.fluid_residual <= 1e-9, "fluid gate residual above tolerance");
    out.require(rep.max_limit_residual <= 1e-9, "limit sampler residual above tolerance");
    out.require(rep.regularity_holds, "regularity condition reported as not holding");
    for (const CltRow& row : rep.rows) {
        const std::string at = " at t=" + std::to_string(row.t);
        out.require(row.p_value > 0.001,
                    "distribution distance rejected (p=" + std::to_string(row.p_value) + ")" + at);
        out.require(row.mean_gap_se <= 3.0, "mean gap above 3 SE" + at);
        out.require(row.var_gap_se <= 3.0, "variance gap above 3 SE" + at);
    }
    out.detail << "4000v4000, p-values";
    for (const CltRow& row : rep.rows) out.detail << " " << row.p_value;
}

void criterion_volterra_contract(Outcome& out) {
    double worst_residual = 0.0;
    for (int k = 0; k < 100; ++k) {
        VolterraProblem p = testsupport::random_volterra_problem(
            derive_stream(20260815, 109, static_cast<std::uint64_t>(k)));
        VolterraSolution s = solve_volterra(p);
        worst_residual = std::max(worst_residual, s.residual);
        out.require(s.residual <= 1e-9, "residual above 1e-9 on instance " + std::to_string(k));
        out.require(volterra_residual(p, s.y) <= 1e-9,
                    "re-evaluated residual above 1e-9 on instance " + std::to_string(k));
        const double rho = bound_rho(p.kernel, p.forcing.horizon(), s.t0);
        out.require(sup_abs(s.y) <= rho * sup_abs(p.forcing) * (1.0 + 1e-12) + 1e-12,
                    "stability bound violated on instance " + std::to_string(k));
    }
    out.detail << "100 instances, worst residual " << worst_residual;
}

void criterion_regularity_condition(Outcome& out) {
    const double h = 1.0 / 128.0;
    // Critically loaded flat fluid: the band around level 1 is empty at
    // every epsilon below 1 (content is exactly the level).
    {
        FluidSolution sol = solve_fluid(critical_flat_model(h, 4.0));
        RegularityReport rep =
            check_regularity(sol, critical_flat_model(h, 4.0).service_cdf,
                                {0.5, 0.1, 0.01, 0.001});
        out.require(rep.holds, "critical-flat report does not hold");
        for (double v : rep.values)
            out.require(v == 0.0, "critical-flat band mass not exactly zero");
    }
    // Integer-step drain: content only takes values {2, 1, 0}, never inside
    // the band, at every epsilon below 1.
    {
        FluidModel m = step_drain_model(h);
        FluidSolution sol = solve_fluid(m);
        RegularityReport rep = check_regularity(
            sol, m.service_cdf, {0.99, 0.5, 0.1, 0.01, 0.001, 0.0001});
        out.require(rep.holds, "step-drain report does not hold");
        for (double v : rep.values)
            out.require(v == 0.0, "step-drain band mass not exactly zero");
    }
    // Continuously draining content crosses the level once; the band mass is
    // positive at coarse epsilon and decays below 1e-3.
    {
        FluidModel m = exp_drain_model(h, 4.0);
        FluidSolution sol = solve_fluid(m);
        RegularityReport rep =
            check_regularity(sol, m.service_cdf, {0.1, 0.01, 0.001, 0.0001});
        out.require(rep.values.front() > 0.0, "continuous drain has zero coarse band mass");
        for (std::size_t i = 0; i + 1 < rep.values.size(); ++i)
            out.require(rep.values[i + 1] <= rep.values[i],
                        "continuous-drain band mass not monotone");
        out.require(rep.values.back() <= 1e-3, "continuous-drain tail above threshold");
        out.require(rep.holds, "continuous-drain report does not hold");
        out.detail << "flat/step exactly zero; drain decays "
                   << rep.values.front() << " -> " << rep.values.back();
    }
}

}  // namespace

int main() {
    std::printf("acceptance gate: %d worker threads\n", worker_threads());
    run_criterion(1, "fluid-goldens", 5.0, criterion_fluid_goldens);
    run_criterion(2, "oscillating-arrival-example", 5.0, criterion_oscillating_example);
    run_criterion(3, "pathwise-verification", 30.0, criterion_pathwise_verification);
    run_criterion(4, "service-noise-covariance", 10.0, criterion_noise_covariance);
    run_criterion(5, "structural-limit-golden", 1.0, criterion_structural_golden);
    run_criterion(6, "infinite-server-variance", 60.0, criterion_infinite_server_variance);
    run_criterion(7, "lln-convergence", 300.0, criterion_lln);
    run_criterion(8, "clt-critical-load", 600.0, criterion_clt);
    run_criterion(9, "volterra-solver-contract", 10.0, criterion_volterra_contract);
    run_criterion(10, "regularity-condition", 5.0, criterion_regularity_condition);
    if (g_failures > 0) {
        std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("acceptance: all 10 criteria passed\n");
    return 0;
}
