#include "qlimits/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "qlimits/errors.hpp"
#include "qlimits/gaussian.hpp"
#include "qlimits/simulator.hpp"
#include "qlimits/stats.hpp"

namespace qlimits {

namespace {

// Runs work(0..count-1) on `threads` workers.  Each index writes only its own
// slot in the caller's result buffer and draws only from its own stream, so
// the outcome is identical for any thread count.
template <typename Work>
void run_parallel(std::size_t count, int threads, Work&& work) {
    int usable = std::max(1, threads);
    if (usable == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) work(i);
        return;
    }
    usable = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(usable), count));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                work(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(usable));
    for (int w = 0; w < usable; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

FluidSolution scenario_fluid(const Scenario& sc) {
    if (!sc.infinite_servers) return solve_fluid(sc.fluid_model(), sc.solver_options());

    // Unlimited servers: everything enters service on arrival, so the system
    // content has the explicit form below and no fixed point is needed.
    GridPath e = sc.arrival_curve();
    const std::size_t n = e.size();
    std::vector<double> q(n);
    for (std::size_t k = 0; k < n; ++k) {
        double t = sc.grid_step * static_cast<double>(k);
        q[k] = sc.q0 * (1.0 - sc.residual_cdf.eval(t)) + e[k] -
               convolve_stieltjes(e, sc.service_cdf, t);
    }
    FluidSolution sol;
    sol.q = GridPath(sc.grid_step, std::move(q), Interp::Linear);
    sol.a = e;
    sol.residual = 0.0;
    return sol;
}

LlnReport run_lln(const Scenario& sc, const std::vector<std::size_t>& n_list,
                  std::size_t reps, std::uint64_t master_seed, int threads) {
    if (n_list.empty()) throw ConfigError("run_lln: empty scale list");
    if (reps == 0) throw ConfigError("run_lln: at least one replication required");
    auto start = std::chrono::steady_clock::now();

    FluidSolution fluid = scenario_fluid(sc);  // throws if not within tolerance

    LlnReport report;
    report.scenario = sc.name;
    report.fluid_residual = fluid.residual;

    const std::size_t n_pts = sc.grid_points();
    const double h = sc.grid_step;

    for (std::size_t n : n_list) {
        if (n == 0) throw ConfigError("run_lln: scale must be positive");
        std::vector<LlnRaw> raws(reps);
        run_parallel(reps, threads, [&](std::size_t r) {
            SimConfig cfg = sc.sim_config(n, derive_stream(master_seed, n, r));
            SimTrace tr = sc.infinite_servers ? simulate_gg_inf(cfg) : simulate_gg_n(cfg);
            const double dn = static_cast<double>(n);
            double sup_q = 0.0;
            double sup_a = 0.0;
            for (std::size_t k = 0; k < n_pts; ++k) {
                double t = h * static_cast<double>(k);
                double qs = static_cast<double>(tr.at(tr.q, t)) / dn;
                double as = static_cast<double>(tr.at(tr.a, t)) / dn;
                sup_q = std::max(sup_q, std::fabs(qs - fluid.q[k]));
                sup_a = std::max(sup_a, std::fabs(as - fluid.a[k]));
            }
            raws[r] = LlnRaw{n, r, sup_q, sup_a};
        });
        std::vector<double> qd(reps);
        std::vector<double> ad(reps);
        for (std::size_t r = 0; r < reps; ++r) {
            qd[r] = raws[r].sup_q_dev;
            ad[r] = raws[r].sup_a_dev;
        }
        LlnRow row;
        row.n = n;
        row.reps = reps;
        row.median_q_dev = quantile(qd, 0.5);
        row.q90_q_dev = quantile(qd, 0.9);
        row.median_a_dev = quantile(ad, 0.5);
        row.q90_a_dev = quantile(ad, 0.9);
        report.rows.push_back(row);
        report.raw.insert(report.raw.end(), raws.begin(), raws.end());
    }

    report.wall_seconds = seconds_since(start);
    return report;
}

CltReport run_clt(const Scenario& sc, std::size_t n, std::size_t reps,
                  const std::vector<double>& t_points, std::uint64_t master_seed,
                  int threads) {
    if (n == 0) throw ConfigError("run_clt: scale must be positive");
    if (reps < 2) throw ConfigError("run_clt: at least two replications required");
    if (t_points.empty()) throw ConfigError("run_clt: no time points");
    const double gh = sc.grid_horizon();
    for (double t : t_points)
        if (!(t >= 0.0 && t <= gh + 1e-9))
            throw ConfigError("run_clt: time point outside the scenario horizon");
    auto start = std::chrono::steady_clock::now();

    FluidSolution fluid = scenario_fluid(sc);  // consistency gate

    CltReport report;
    report.scenario = sc.name;
    report.n = n;
    report.reps = reps;
    report.fluid_residual = fluid.residual;

    // Path-space regularity verdict (marginal comparisons are valid either way).
    if (sc.infinite_servers) {
        report.regularity_holds = true;  // no regime indicator in the limit
    } else {
        RegularityReport reg = check_regularity(
            fluid, sc.service_cdf, {0.5, 0.1, 0.01, 0.001, 0.0001}, 1e-3, sc.level_tol);
        report.regularity_holds = reg.holds;
        report.regularity_eps = reg.eps;
        report.regularity_values = reg.values;
    }

    const std::size_t nt = t_points.size();
    const double dn = static_cast<double>(n);

    // Simulation side.
    std::vector<std::vector<double>> sim(nt, std::vector<double>(reps));
    run_parallel(reps, threads, [&](std::size_t r) {
        SimConfig cfg = sc.sim_config(n, derive_stream(master_seed, n, r));
        SimTrace tr = sc.infinite_servers ? simulate_gg_inf(cfg) : simulate_gg_n(cfg);
        for (std::size_t j = 0; j < nt; ++j) {
            double t = t_points[j];
            double scaled = static_cast<double>(tr.at(tr.q, t)) / dn;
            sim[j][r] = std::sqrt(dn) * (scaled - fluid.q.value(t));
        }
    });

    // Limit side: one sampler shared by all replications.
    LimitSampler sampler(sc.infinite_servers ? LimitKind::InfiniteServer
                                             : LimitKind::FiniteServer,
                         sc.limit_inputs(fluid), sc.grid_template(), sc.solver_options());
    std::vector<std::vector<double>> lim(nt, std::vector<double>(reps));
    std::vector<double> residuals(reps, 0.0);
    run_parallel(reps, threads, [&](std::size_t r) {
        RandomStream rng(derive_stream(master_seed, kLimitExperimentTag, r));
        LimitSample smp = sampler.sample(rng);
        residuals[r] = smp.residual;
        for (std::size_t j = 0; j < nt; ++j) lim[j][r] = smp.x.value(t_points[j]);
    });
    report.max_limit_residual = *std::max_element(residuals.begin(), residuals.end());

    for (std::size_t j = 0; j < nt; ++j) {
        CltRow row;
        row.t = t_points[j];
        row.sim_mean = mean(sim[j]);
        row.sim_var = sample_variance(sim[j]);
        row.lim_mean = mean(lim[j]);
        row.lim_var = sample_variance(lim[j]);
        KsResult ks = ks_two_sample(sim[j], lim[j]);
        row.ks_stat = ks.statistic;
        row.p_value = ks.p_value;
        double r = static_cast<double>(reps);
        double se_mean = std::sqrt(row.sim_var / r + row.lim_var / r);
        row.mean_gap_se =
            se_mean > 0.0 ? std::fabs(row.sim_mean - row.lim_mean) / se_mean : 0.0;
        // SE of a sample variance approximated on the Gaussian scale
        // (var(s^2) = 2 sigma^4 / (n - 1)), appropriate in this regime.
        double se_var = std::sqrt((2.0 * row.sim_var * row.sim_var +
                                   2.0 * row.lim_var * row.lim_var) /
                                  (r - 1.0));
        row.var_gap_se = se_var > 0.0 ? std::fabs(row.sim_var - row.lim_var) / se_var : 0.0;
        report.rows.push_back(row);
    }

    report.raw.reserve(2 * reps * nt);
    for (int source = 0; source <= 1; ++source) {
        const auto& cols = source == 0 ? sim : lim;
        for (std::size_t r = 0; r < reps; ++r)
            for (std::size_t j = 0; j < nt; ++j)
                report.raw.push_back(CltRaw{source, r, t_points[j], cols[j][r]});
    }

    report.wall_seconds = seconds_since(start);
    return report;
}

} // namespace qlimits
