// Command-line front end: simulate systems, solve fluid models, sample the
// Gaussian limit, and run the convergence experiments, all from a JSON
// scenario file.  Exit codes: 0 success, 2 configuration error, 3 numerical
// failure, 4 statistical gate failure (exp subcommands under --assert).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "qlimits/errors.hpp"
#include "qlimits/experiments.hpp"
#include "qlimits/fluid.hpp"
#include "qlimits/gaussian.hpp"
#include "qlimits/report.hpp"
#include "qlimits/scenario.hpp"
#include "qlimits/simulator.hpp"
#include "qlimits/stats.hpp"

namespace {

struct GlobalOpts {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> grid;
    std::string out_dir = ".";
    int threads = 0;  // 0 = hardware concurrency
};

qlimits::Scenario load_scenario(const GlobalOpts& g) {
    qlimits::Scenario sc = qlimits::parse_scenario(g.config);
    if (g.grid) {
        if (!(*g.grid > 0.0) || *g.grid > sc.horizon)
            throw qlimits::ConfigError("--grid must be in (0, horizon]");
        sc.grid_step = *g.grid;
    }
    if (g.seed) sc.seed = *g.seed;
    return sc;
}

std::string resolve_out(const GlobalOpts& g, const std::string& name) {
    if (!name.empty() && name.front() == '/') return name;
    if (g.out_dir.empty() || g.out_dir == ".") return name;
    return g.out_dir + "/" + name;
}

int thread_count(const GlobalOpts& g) {
    if (g.threads > 0) return g.threads;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

std::vector<double> grid_times(const qlimits::Scenario& sc) {
    std::vector<double> t(sc.grid_points());
    for (std::size_t k = 0; k < t.size(); ++k)
        t[k] = sc.grid_step * static_cast<double>(k);
    return t;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Many-server queue laboratory: simulation, fluid models, and "
                 "Gaussian limits"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config, "Scenario JSON file")->required();
    app.add_option("--seed", g.seed, "Master seed (overrides the scenario's)");
    app.add_option("--grid", g.grid, "Grid step override");
    app.add_option("--out-dir", g.out_dir, "Directory for output files");
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");

    // sim run
    auto* sim = app.add_subcommand("sim", "Event-driven simulation");
    auto* sim_run = sim->add_subcommand("run", "Simulate one replication");
    std::size_t sim_n = 1;
    std::string sim_out = "trace.csv";
    sim_run->add_option("--n", sim_n, "System scale (server count unless infinite)");
    sim_run->add_option("--out", sim_out, "Trace CSV path");

    // fluid solve / fluid regularity
    auto* fluid = app.add_subcommand("fluid", "Deterministic fluid model");
    auto* fluid_solve_cmd = fluid->add_subcommand("solve", "Solve the fluid equations");
    std::string fluid_out = "fluid.csv";
    fluid_solve_cmd->add_option("--out", fluid_out, "Solution CSV path");
    auto* fluid_check = fluid->add_subcommand(
        "regularity", "Regularity condition for path-space convergence");
    std::vector<double> eps_ladder{0.5, 0.1, 0.01, 0.001, 0.0001};
    fluid_check->add_option("--eps", eps_ladder, "Band half-widths to test")
        ->delimiter(',');

    // limit sample / zcov / cdiag
    auto* limit = app.add_subcommand("limit", "Gaussian limit process");
    auto* limit_sample_cmd = limit->add_subcommand("sample", "Draw limit realizations");
    std::size_t limit_reps = 1;
    std::string limit_out = "limit_samples.csv";
    limit_sample_cmd->add_option("--reps", limit_reps, "Number of realizations");
    limit_sample_cmd->add_option("--out", limit_out, "Samples CSV path");
    auto* limit_zcov = limit->add_subcommand("zcov", "Service-noise covariance matrix");
    std::string zcov_out = "zcov.csv";
    limit_zcov->add_option("--out", zcov_out, "Covariance CSV path");
    auto* limit_cdiag = limit->add_subcommand(
        "cdiag", "Diagnostic curve: entry curve integrated against the "
                 "atom-discounted service distribution");
    std::string cdiag_out = "cdiag.csv";
    limit_cdiag->add_option("--out", cdiag_out, "Diagnostic CSV path");

    // exp lln / exp clt
    auto* exp = app.add_subcommand("exp", "Monte Carlo convergence experiments");
    auto* exp_lln = exp->add_subcommand("lln", "Law-of-large-numbers deviations");
    std::vector<std::size_t> lln_ns{64, 256, 1024};
    std::size_t lln_reps = 200;
    std::string lln_out = "lln.csv";
    bool lln_assert = false;
    exp_lln->add_option("--n", lln_ns, "Scales to sweep")->delimiter(',');
    exp_lln->add_option("--reps", lln_reps, "Replications per scale");
    exp_lln->add_option("--out", lln_out, "Summary CSV path (raw lands alongside)");
    exp_lln->add_flag("--assert", lln_assert,
                      "Exit 4 unless median deviations strictly decrease across scales");
    auto* exp_clt = exp->add_subcommand("clt", "Central-limit marginal comparison");
    std::size_t clt_n = 400;
    std::size_t clt_reps = 4000;
    std::vector<double> clt_ts{1.0, 2.0, 4.0};
    std::string clt_out = "clt.csv";
    bool clt_assert = false;
    double clt_p_min = 0.001;
    double clt_se_max = 3.0;
    exp_clt->add_option("--n", clt_n, "System scale");
    exp_clt->add_option("--reps", clt_reps, "Replications per side");
    exp_clt->add_option("--t", clt_ts, "Comparison time points")->delimiter(',');
    exp_clt->add_option("--out", clt_out, "Summary CSV path (raw lands alongside)");
    exp_clt->add_flag("--assert", clt_assert,
                      "Exit 4 unless KS p-values and moment gaps pass the gates");
    exp_clt->add_option("--p-min", clt_p_min, "Minimum KS p-value under --assert");
    exp_clt->add_option("--se-max", clt_se_max,
                        "Maximum moment gap in SE units under --assert");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        qlimits::Scenario sc = load_scenario(g);

        if (sim_run->parsed()) {
            qlimits::SimConfig cfg = sc.sim_config(sim_n, sc.seed);
            qlimits::SimTrace tr = sc.infinite_servers ? qlimits::simulate_gg_inf(cfg)
                                                       : qlimits::simulate_gg_n(cfg);
            double resid = qlimits::verify_system_equations(tr);
            if (resid != 0.0)
                throw qlimits::NumericalError(
                    "trace failed the system-equation self check, residual " +
                    qlimits::format_double(resid));
            qlimits::write_file(resolve_out(g, sim_out), qlimits::trace_csv(tr));
            std::cerr << "events=" << tr.event_times.size() << " verify_residual=0\n";
            return 0;
        }

        if (fluid_solve_cmd->parsed()) {
            qlimits::FluidSolution sol = qlimits::scenario_fluid(sc);
            qlimits::write_file(resolve_out(g, fluid_out), qlimits::fluid_csv(sol));
            std::cerr << "residual=" << qlimits::format_double(sol.residual)
                      << " sweeps=" << sol.sweeps << "\n";
            return 0;
        }

        if (fluid_check->parsed()) {
            qlimits::FluidSolution sol = qlimits::scenario_fluid(sc);
            qlimits::RegularityReport rep = qlimits::check_regularity(
                sol, sc.service_cdf, eps_ladder, 1e-3, sc.level_tol);
            std::string out = "eps,sup_value\n";
            for (std::size_t i = 0; i < rep.eps.size(); ++i)
                out += qlimits::format_double(rep.eps[i]) + "," +
                       qlimits::format_double(rep.values[i]) + "\n";
            std::cout << out;
            std::cout << "verdict,"
                      << (rep.holds ? "holds (numerically)" : "numerically fails") << "\n";
            return 0;
        }

        if (limit_sample_cmd->parsed() || limit_zcov->parsed() || limit_cdiag->parsed()) {
            qlimits::FluidSolution sol = qlimits::scenario_fluid(sc);
            if (limit_cdiag->parsed()) {
                qlimits::MixedCdf discounted = qlimits::f_prime(sc.service_cdf);
                const qlimits::GridPath& a = sol.a;
                std::string out = "t,c\n";
                for (double t : grid_times(sc)) {
                    double c = qlimits::integrate_dF(
                        discounted, t, [&](double u) { return a.value(t - u); });
                    out += qlimits::format_double(t) + "," + qlimits::format_double(c) +
                           "\n";
                }
                qlimits::write_file(resolve_out(g, cdiag_out), out);
                return 0;
            }
            qlimits::LimitInputs in = sc.limit_inputs(sol);
            if (limit_zcov->parsed()) {
                Eigen::MatrixXd cov =
                    qlimits::z_covariance(in.service_cdf, in.entry_curve, grid_times(sc));
                qlimits::write_file(resolve_out(g, zcov_out),
                                    qlimits::matrix_csv(cov, grid_times(sc)));
                return 0;
            }
            qlimits::LimitSampler sampler(sc.infinite_servers
                                              ? qlimits::LimitKind::InfiniteServer
                                              : qlimits::LimitKind::FiniteServer,
                                          in, sc.grid_template(), sc.solver_options());
            std::vector<qlimits::LimitSample> samples;
            samples.reserve(limit_reps);
            double max_resid = 0.0;
            for (std::size_t r = 0; r < limit_reps; ++r) {
                qlimits::RandomStream rng(
                    qlimits::derive_stream(sc.seed, qlimits::kLimitExperimentTag, r));
                samples.push_back(sampler.sample(rng));
                max_resid = std::max(max_resid, samples.back().residual);
            }
            qlimits::write_file(resolve_out(g, limit_out),
                                qlimits::limit_samples_csv(samples));
            std::cerr << "max_residual=" << qlimits::format_double(max_resid) << "\n";
            return 0;
        }

        if (exp_lln->parsed()) {
            qlimits::LlnReport rep =
                qlimits::run_lln(sc, lln_ns, lln_reps, sc.seed, thread_count(g));
            qlimits::emit_lln_report(rep, resolve_out(g, lln_out));
            std::cerr << "fluid_residual=" << qlimits::format_double(rep.fluid_residual)
                      << " wall_seconds=" << rep.wall_seconds << "\n";
            if (lln_assert) {
                for (std::size_t i = 1; i < rep.rows.size(); ++i) {
                    if (!(rep.rows[i].median_q_dev < rep.rows[i - 1].median_q_dev)) {
                        std::cerr << "gate: median deviation did not decrease from scale "
                                  << rep.rows[i - 1].n << " to " << rep.rows[i].n << "\n";
                        return 4;
                    }
                }
            }
            return 0;
        }

        if (exp_clt->parsed()) {
            qlimits::CltReport rep =
                qlimits::run_clt(sc, clt_n, clt_reps, clt_ts, sc.seed, thread_count(g));
            qlimits::emit_clt_report(rep, resolve_out(g, clt_out));
            std::cerr << "fluid_residual=" << qlimits::format_double(rep.fluid_residual)
                      << " max_limit_residual="
                      << qlimits::format_double(rep.max_limit_residual)
                      << " regularity="
                      << (rep.regularity_holds ? "holds" : "marginals-only")
                      << " wall_seconds=" << rep.wall_seconds << "\n";
            if (clt_assert) {
                for (const qlimits::CltRow& row : rep.rows) {
                    bool ok = row.p_value > clt_p_min && row.mean_gap_se <= clt_se_max &&
                              row.var_gap_se <= clt_se_max;
                    if (!ok) {
                        std::cerr << "gate: t=" << row.t << " p=" << row.p_value
                                  << " mean_gap_se=" << row.mean_gap_se
                                  << " var_gap_se=" << row.var_gap_se << "\n";
                        return 4;
                    }
                }
            }
            return 0;
        }

        std::cerr << "no subcommand executed\n";
        return 2;
    } catch (const qlimits::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const qlimits::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
