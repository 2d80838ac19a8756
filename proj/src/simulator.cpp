#include "qlimits/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

#include "qlimits/errors.hpp"

namespace qlimits {

namespace {

std::vector<double> arrival_epochs(const ArrivalSpec& spec, double horizon,
                                   RandomStream& rng, std::uint64_t budget) {
    std::vector<double> ep;
    if (const auto* p = std::get_if<PoissonArrivals>(&spec)) {
        if (!(p->rate >= 0.0)) throw ConfigError("arrivals: negative rate");
        if (p->rate > 0.0) {
            double t = rng.exponential(p->rate);
            while (t <= horizon) {
                ep.push_back(t);
                if (ep.size() > budget) throw NumericalError("arrivals: event budget exceeded");
                t += rng.exponential(p->rate);
            }
        }
    } else if (const auto* r = std::get_if<RenewalArrivals>(&spec)) {
        if (r->interarrival.eval(0.0) >= 1.0)
            throw ConfigError("arrivals: interarrival distribution concentrated at 0");
        double t = r->interarrival.sample(rng);
        while (t <= horizon) {
            ep.push_back(t);
            if (ep.size() > budget) throw NumericalError("arrivals: event budget exceeded");
            t += r->interarrival.sample(rng);
        }
    } else if (const auto* d = std::get_if<PeriodicArrivals>(&spec)) {
        if (!(d->period > 0.0)) throw ConfigError("arrivals: period must be positive");
        if (d->first < 0.0) throw ConfigError("arrivals: first epoch must be nonnegative");
        for (double t = d->first; t <= horizon; t += d->period) {
            ep.push_back(t);
            if (ep.size() > budget) throw NumericalError("arrivals: event budget exceeded");
        }
    } else {
        const auto& x = std::get<ExplicitArrivals>(spec);
        for (double t : x.epochs) {
            if (t < 0.0) throw ConfigError("arrivals: negative epoch");
            if (t <= horizon) ep.push_back(t);
        }
        std::sort(ep.begin(), ep.end());
    }
    return ep;
}

// Customer classes, in FCFS priority order at time 0.
enum Cls : int { InService0 = 0, Queued0 = 1, Exogenous = 2 };

struct Departure {
    double time;
    int cls;
    bool operator>(const Departure& o) const { return time > o.time; }
};

SimTrace run(const SimConfig& cfg, bool infinite) {
    if (cfg.service_cdf.eval(0.0) >= 1.0)
        throw ConfigError("simulate: service distribution puts all mass at 0");
    if (cfg.initial_queue_cdf && cfg.initial_queue_cdf->eval(0.0) >= 1.0)
        throw ConfigError("simulate: initial-queue service distribution concentrated at 0");
    if (cfg.q0 < 0) throw ConfigError("simulate: q0 must be nonnegative");
    if (!infinite && (!cfg.n || *cfg.n < 1))
        throw ConfigError("simulate: server count must be at least 1");
    if (!(cfg.horizon > 0.0)) throw ConfigError("simulate: horizon must be positive");

    RandomStream rng(cfg.seed);
    const long long n_serv0 = infinite ? cfg.q0 : std::min(cfg.q0, *cfg.n);
    const long long n_queued0 = cfg.q0 - n_serv0;

    // Draw order (fixed contract): residuals, arrival epochs, initial-queue
    // services, arrival services.
    std::vector<double> residuals;
    if (cfg.residuals) {
        residuals = *cfg.residuals;
        if (static_cast<long long>(residuals.size()) != n_serv0)
            throw ConfigError("simulate: residuals size must equal q0 ^ n");
    } else {
        residuals.reserve(static_cast<std::size_t>(n_serv0));
        for (long long i = 0; i < n_serv0; ++i) residuals.push_back(cfg.residual_cdf.sample(rng));
    }
    std::vector<double> epochs = arrival_epochs(cfg.arrivals, cfg.horizon, rng, cfg.event_budget);
    std::vector<double> queued_svc;
    if (cfg.queued_services) {
        queued_svc = *cfg.queued_services;
        if (static_cast<long long>(queued_svc.size()) != n_queued0)
            throw ConfigError("simulate: queued_services size must equal (q0 - n)^+");
    } else {
        const MixedCdf& qf = cfg.initial_queue_cdf ? *cfg.initial_queue_cdf : cfg.service_cdf;
        queued_svc.reserve(static_cast<std::size_t>(n_queued0));
        for (long long i = 0; i < n_queued0; ++i) queued_svc.push_back(qf.sample(rng));
    }
    std::vector<double> arrival_svc;
    if (cfg.arrival_services) {
        arrival_svc = *cfg.arrival_services;
        if (arrival_svc.size() < epochs.size())
            throw ConfigError("simulate: fewer arrival_services than arrivals");
    } else {
        arrival_svc.reserve(epochs.size());
        for (std::size_t i = 0; i < epochs.size(); ++i)
            arrival_svc.push_back(cfg.service_cdf.sample(rng));
    }
    for (double s : residuals)
        if (s < 0.0) throw ConfigError("simulate: negative residual");
    for (double s : queued_svc)
        if (s < 0.0) throw ConfigError("simulate: negative service time");
    for (double s : arrival_svc)
        if (s < 0.0) throw ConfigError("simulate: negative service time");

    SimTrace tr;
    tr.two_class = cfg.initial_queue_cdf.has_value();
    tr.n = infinite ? std::optional<long long>{} : cfg.n;
    tr.q0 = cfg.q0;
    tr.horizon = cfg.horizon;
    tr.residuals = residuals;

    std::priority_queue<Departure, std::vector<Departure>, std::greater<Departure>> heap;
    for (double r : residuals)
        if (r <= cfg.horizon) heap.push({r, InService0});

    struct Waiting {
        double service;
        int cls;
    };
    std::deque<Waiting> fifo;
    for (double s : queued_svc) fifo.push_back({s, Queued0});

    long long busy = n_serv0;
    long long q_count = cfg.q0;
    long long e_count = 0, a_count = 0, ahat_count = 0, acheck_count = 0;
    long long qtilde_count = n_serv0;
    long long qhat_count = cfg.q0;  // initial population still present
    std::size_t cursor = 0;
    std::uint64_t events = 0;

    auto record = [&](double t, EventKind k) {
        tr.event_times.push_back(t);
        tr.q.push_back(q_count);
        tr.a.push_back(a_count);
        tr.qtilde.push_back(qtilde_count);
        tr.e.push_back(e_count);
        tr.kinds.push_back(k);
        if (tr.two_class) {
            tr.qhat.push_back(qhat_count);
            tr.ahat.push_back(ahat_count);
            tr.acheck.push_back(acheck_count);
        }
    };

    auto composite = [&](double t, bool initial) {
        long long departures = 0;
        while (!heap.empty() && heap.top().time == t) {
            Departure d = heap.top();
            heap.pop();
            --busy;
            --q_count;
            ++departures;
            if (d.cls == InService0) {
                --qtilde_count;
                --qhat_count;
            } else if (d.cls == Queued0) {
                --qhat_count;
            }
        }
        long long arrivals = 0;
        while (cursor < epochs.size() && epochs[cursor] == t) {
            fifo.push_back({arrival_svc[cursor], Exogenous});
            ++cursor;
            ++e_count;
            ++q_count;
            ++arrivals;
        }
        // Admissions: refill free servers from the queue head; zero-service
        // entrants pass through without seizing a server, so the entry count
        // takes the smallest jump that balances the departures.
        while (!fifo.empty() && (infinite || busy < *cfg.n)) {
            Waiting w = fifo.front();
            fifo.pop_front();
            ++a_count;
            if (w.cls == Queued0) {
                ++ahat_count;
                tr.tau_hat.push_back(t);
                tr.service_hat.push_back(w.service);
            } else {
                ++acheck_count;
                if (tr.two_class) {
                    tr.tau.push_back(t);
                    tr.service_times.push_back(w.service);
                }
            }
            if (!tr.two_class) {
                tr.tau.push_back(t);
                tr.service_times.push_back(w.service);
            }
            double dep = t + w.service;
            if (w.service > 0.0 && dep > t) {
                ++busy;
                if (dep <= cfg.horizon) heap.push({dep, w.cls});
            } else {
                // zero service (or float-collapsed dep time):
                // enters and departs at t
                --q_count;
                if (w.cls == Queued0) --qhat_count;
            }
            if (++events > cfg.event_budget)
                throw NumericalError("simulate: event budget exceeded (admission cascade)");
        }
        EventKind k = initial ? EventKind::Init
                      : (departures > 0 && arrivals > 0)
                          ? EventKind::Mixed
                          : (departures > 0 ? EventKind::Departure : EventKind::Arrival);
        record(t, k);
    };

    composite(0.0, true);
    while (true) {
        if (++events > cfg.event_budget)
            throw NumericalError("simulate: event budget exceeded (admission cascade)");
        double next = std::numeric_limits<double>::infinity();
        if (!heap.empty()) next = heap.top().time;
        if (cursor < epochs.size()) next = std::min(next, epochs[cursor]);
        if (!(next <= cfg.horizon)) break;
        composite(next, false);
    }
    return tr;
}

} // namespace

SimTrace simulate_gg_n(const SimConfig& cfg) { return run(cfg, false); }

SimTrace simulate_gg_inf(const SimConfig& cfg) { return run(cfg, true); }

long long SimTrace::at(const std::vector<long long>& col, double t) const {
    auto it = std::upper_bound(event_times.begin(), event_times.end(), t);
    if (it == event_times.begin()) {
        // before the first recorded event: time-0 state minus the time-0 event
        return &col == &e ? 0
               : &col == &a ? 0
               : &col == &qtilde ? static_cast<long long>(residuals.size())
                                 : q0;
    }
    return col[static_cast<std::size_t>(it - event_times.begin()) - 1];
}

double verify_system_equations(const SimTrace& tr) {
    const bool infinite = !tr.n.has_value();
    const long long n = infinite ? 0 : *tr.n;
    const long long init_queue = tr.q0 - static_cast<long long>(tr.residuals.size());

    auto count_leq = [](const std::vector<double>& sorted, double t) {
        return static_cast<long long>(
            std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
    };

    std::vector<double> deps;
    for (std::size_t i = 0; i < tr.tau.size(); ++i)
        deps.push_back(tr.tau[i] + tr.service_times[i]);
    std::sort(deps.begin(), deps.end());
    std::vector<double> dep_hat;
    for (std::size_t i = 0; i < tr.tau_hat.size(); ++i)
        dep_hat.push_back(tr.tau_hat[i] + tr.service_hat[i]);
    std::sort(dep_hat.begin(), dep_hat.end());
    std::vector<double> res_sorted = tr.residuals;
    std::sort(res_sorted.begin(), res_sorted.end());

    // (v - n)^+ terms drop out entirely when the server pool is unlimited.
    auto excess = [infinite](long long v, long long cap) {
        return infinite ? 0 : (v > cap ? v - cap : 0);
    };

    double worst = 0.0;
    auto bump = [&](long long lhs, long long rhs) {
        worst = std::max(worst, std::fabs(static_cast<double>(lhs - rhs)));
    };

    for (std::size_t r = 0; r < tr.event_times.size(); ++r) {
        double t = tr.event_times[r];
        long long qt = static_cast<long long>(res_sorted.size()) -
                       count_leq(res_sorted, t);  // # residuals > t
        bump(tr.qtilde[r], qt);
        if (tr.two_class) {
            long long dhat = count_leq(dep_hat, t);
            long long dchk = count_leq(deps, t);
            long long qhat_rhs = init_queue + tr.qtilde[r] - dhat;
            bump(tr.qhat[r], qhat_rhs);
            bump(tr.ahat[r], init_queue - excess(tr.qhat[r], n));
            bump(tr.q[r], tr.qhat[r] + tr.e[r] - dchk);
            bump(tr.acheck[r], tr.e[r] + excess(tr.qhat[r], n) - excess(tr.q[r], n));
            bump(tr.a[r], tr.ahat[r] + tr.acheck[r]);
        } else if (infinite) {
            long long d = count_leq(deps, t);
            bump(tr.q[r], tr.qtilde[r] + tr.e[r] - d);
            bump(tr.a[r], tr.e[r]);
        } else {
            long long d = count_leq(deps, t);
            bump(tr.q[r], excess(tr.q0, n) + tr.qtilde[r] + tr.e[r] - d);
            bump(tr.a[r], excess(tr.q0, n) + tr.e[r] - excess(tr.q[r], n));
        }
    }

    // tau_i must be the first event time at which the entry count reaches i.
    auto check_tau = [&](const std::vector<double>& tau, const std::vector<long long>& count,
                         long long before) {
        long long prev = before;
        for (std::size_t r = 0; r < tr.event_times.size(); ++r) {
            long long cur = count[r];
            for (long long i = prev + 1; i <= cur; ++i) {
                double rec = tau[static_cast<std::size_t>(i - 1)];
                if (rec != tr.event_times[r]) worst = std::max(worst, 1.0);
            }
            prev = cur;
        }
    };
    if (tr.two_class) {
        check_tau(tr.tau, tr.acheck, 0);
        check_tau(tr.tau_hat, tr.ahat, 0);
    } else {
        check_tau(tr.tau, tr.a, 0);
    }
    return worst;
}

ScaledPaths scaled_paths(const SimTrace& tr, double n, const GridPath& fluid_q) {
    const double h = fluid_q.step();
    const std::size_t m = fluid_q.size();
    std::vector<double> fl(m), df(m);
    double rt = std::sqrt(n);
    for (std::size_t k = 0; k < m; ++k) {
        double t = h * static_cast<double>(k);
        double qn = static_cast<double>(tr.at(tr.q, t));
        fl[k] = qn / n;
        df[k] = rt * (qn / n - fluid_q[k]);
    }
    ScaledPaths out;
    out.fluid = GridPath(h, std::move(fl), Interp::Step);
    out.diffusion = GridPath(h, std::move(df), Interp::Step);
    return out;
}

GridPath empirical_initial_process(const std::vector<double>& residuals,
                                   const MixedCdf& residual_cdf, double n,
                                   const GridPath& grid_template) {
    std::vector<double> sorted = residuals;
    std::sort(sorted.begin(), sorted.end());
    const double h = grid_template.step();
    const std::size_t m = grid_template.size();
    const double cnt = static_cast<double>(sorted.size());
    std::vector<double> s(m);
    double rt = std::sqrt(n);
    for (std::size_t k = 0; k < m; ++k) {
        double t = h * static_cast<double>(k);
        auto leq = static_cast<double>(
            std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
        s[k] = (leq - cnt * residual_cdf.eval(t)) / rt;
    }
    return GridPath(h, std::move(s), Interp::Step);
}

} // namespace qlimits
