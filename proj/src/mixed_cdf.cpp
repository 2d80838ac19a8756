#include "qlimits/mixed_cdf.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "qlimits/errors.hpp"

namespace qlimits {

namespace {
constexpr double kMassTol = 1e-12;
constexpr double kLocTol = 1e-12;

double loc_tolerance(double x) { return kLocTol * std::max(1.0, std::fabs(x)); }
} // namespace

MixedCdf MixedCdf::from_parts(std::vector<Atom> atoms, double grid_step,
                              std::vector<double> continuous_cumulative, double tail_mass,
                              std::optional<double> tail_rate, bool subprobability) {
    MixedCdf f;
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.location < b.location; });
    // merge atoms at (numerically) identical locations
    for (const Atom& a : atoms) {
        if (!(a.mass >= -kMassTol)) throw ConfigError("MixedCdf: negative atom mass");
        if (a.location < 0.0) throw ConfigError("MixedCdf: atom at negative location");
        if (a.mass <= 0.0) continue;
        if (!f.atoms_.empty() &&
            a.location - f.atoms_.back().location <= loc_tolerance(a.location))
            f.atoms_.back().mass += a.mass;
        else
            f.atoms_.push_back(a);
    }
    if (!(grid_step > 0.0)) throw ConfigError("MixedCdf: grid step must be positive");
    f.grid_step_ = grid_step;
    if (!continuous_cumulative.empty()) {
        if (std::fabs(continuous_cumulative.front()) > kMassTol)
            throw ConfigError("MixedCdf: continuous part must start at 0");
        continuous_cumulative.front() = 0.0;
        for (std::size_t k = 1; k < continuous_cumulative.size(); ++k) {
            if (continuous_cumulative[k] < continuous_cumulative[k - 1] - kMassTol)
                throw ConfigError("MixedCdf: continuous part must be nondecreasing");
            if (continuous_cumulative[k] < continuous_cumulative[k - 1])
                continuous_cumulative[k] = continuous_cumulative[k - 1];
        }
        if (continuous_cumulative.size() == 1) continuous_cumulative.clear();
    }
    f.cont_ = std::move(continuous_cumulative);
    if (tail_mass < -kMassTol) throw ConfigError("MixedCdf: negative tail mass");
    f.tail_mass_ = std::max(tail_mass, 0.0);
    f.tail_rate_ = tail_rate;
    f.subprobability_ = subprobability;

    double cont_end = f.cont_.empty()
                          ? 0.0
                          : f.grid_step_ * static_cast<double>(f.cont_.size() - 1);
    double atom_end = f.atoms_.empty() ? 0.0 : f.atoms_.back().location;
    f.t_max_ = std::max(cont_end, atom_end);

    double total = f.total_represented() + f.tail_mass_;
    if (!subprobability && std::fabs(total - 1.0) > 1e-9)
        throw ConfigError("MixedCdf: masses sum to " + std::to_string(total) +
                          ", expected 1");
    if (subprobability && total > 1.0 + 1e-9)
        throw ConfigError("MixedCdf: sub-probability masses exceed 1");
    f.build_breakpoints();
    return f;
}

void MixedCdf::build_breakpoints() {
    std::vector<double> xs;
    xs.push_back(0.0);
    for (std::size_t k = 0; k < cont_.size(); ++k)
        xs.push_back(grid_step_ * static_cast<double>(k));
    for (const Atom& a : atoms_) xs.push_back(a.location);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end(),
                         [](double a, double b) { return b - a <= loc_tolerance(b); }),
             xs.end());
    bp_x_ = std::move(xs);
    bp_right_.resize(bp_x_.size());
    bp_left_.resize(bp_x_.size());
    for (std::size_t i = 0; i < bp_x_.size(); ++i) {
        bp_right_[i] = eval(bp_x_[i]);
        bp_left_[i] = left(bp_x_[i]);
    }
}

double MixedCdf::continuous_eval(double x) const {
    if (cont_.empty() || x <= 0.0) return 0.0;
    double end = grid_step_ * static_cast<double>(cont_.size() - 1);
    if (x >= end) return cont_.back();
    double u = x / grid_step_;
    auto k = static_cast<std::size_t>(std::floor(u + 1e-9));
    if (k + 1 >= cont_.size()) return cont_.back();
    double w = u - static_cast<double>(k);
    if (w <= 0.0) return cont_[k];
    return cont_[k] + w * (cont_[k + 1] - cont_[k]);
}

double MixedCdf::atom_total() const {
    double s = 0.0;
    for (const Atom& a : atoms_) s += a.mass;
    return s;
}

double MixedCdf::eval(double x) const {
    if (x < 0.0) return 0.0;
    double s = continuous_eval(x);
    for (const Atom& a : atoms_) {
        if (a.location <= x + loc_tolerance(x)) s += a.mass;
        else break;
    }
    return s;
}

double MixedCdf::left(double x) const {
    if (x <= 0.0) return 0.0;
    double s = continuous_eval(x);
    for (const Atom& a : atoms_) {
        if (a.location < x - loc_tolerance(x)) s += a.mass;
        else break;
    }
    return s;
}

double MixedCdf::jump(double x) const {
    for (const Atom& a : atoms_) {
        if (std::fabs(a.location - x) <= loc_tolerance(x)) return a.mass;
        if (a.location > x) break;
    }
    return 0.0;
}

double MixedCdf::continuous_increment(double a, double b) const {
    return continuous_eval(b) - continuous_eval(a);
}

double MixedCdf::mean() const {
    double m = 0.0;
    for (const Atom& a : atoms_) m += a.location * a.mass;
    for (std::size_t k = 0; k + 1 < cont_.size(); ++k) {
        double mid = grid_step_ * (static_cast<double>(k) + 0.5);
        m += mid * (cont_[k + 1] - cont_[k]);
    }
    if (tail_mass_ > kMassTol) {
        if (!tail_rate_)
            throw NumericalError("MixedCdf::mean: tail mass present without a tail rate");
        m += tail_mass_ * (t_max_ + 1.0 / *tail_rate_);
    }
    return m;
}

double MixedCdf::variance() const {
    double m = mean();
    double s2 = 0.0;
    for (const Atom& a : atoms_) s2 += a.location * a.location * a.mass;
    for (std::size_t k = 0; k + 1 < cont_.size(); ++k) {
        double mid = grid_step_ * (static_cast<double>(k) + 0.5);
        s2 += mid * mid * (cont_[k + 1] - cont_[k]);
    }
    if (tail_mass_ > kMassTol) {
        if (!tail_rate_)
            throw NumericalError("MixedCdf::variance: tail mass present without a tail rate");
        double r = 1.0 / *tail_rate_;
        s2 += tail_mass_ * (t_max_ * t_max_ + 2.0 * t_max_ * r + 2.0 * r * r);
    }
    return s2 - m * m;
}

double MixedCdf::sample(RandomStream& rng) const {
    if (subprobability_)
        throw NumericalError("MixedCdf::sample: sub-probability function is not sampleable");
    double u = rng.uniform();
    double total = total_represented();
    if (u > total) {
        if (tail_mass_ <= kMassTol) return t_max_;  // u landed in float slack
        if (!tail_rate_)
            throw NumericalError(
                "MixedCdf::sample: drew into an undeclared tail (no tail rate)");
        // Solve tail_mass * exp(-rate (x - t_max)) = 1 - u.
        double ratio = tail_mass_ / std::max(1.0 - u, 1e-300);
        return t_max_ + std::log(ratio) / *tail_rate_;
    }
    // First breakpoint with F(x) >= u; F is linear between breakpoints.
    auto it = std::lower_bound(bp_right_.begin(), bp_right_.end(), u);
    if (it == bp_right_.end()) return bp_x_.back();
    std::size_t j = static_cast<std::size_t>(it - bp_right_.begin());
    if (j == 0) return bp_x_.front();
    if (bp_left_[j] >= u) {
        double lo = bp_right_[j - 1];
        double hi = bp_left_[j];
        double w = hi > lo ? (u - lo) / (hi - lo) : 1.0;
        return bp_x_[j - 1] + w * (bp_x_[j] - bp_x_[j - 1]);
    }
    return bp_x_[j];  // u falls inside the jump at bp_x_[j]
}

MixedCdf MixedCdf::exponential(double rate, double t_max, double grid_step) {
    if (!(rate > 0.0)) throw ConfigError("exponential: rate must be positive");
    auto n = static_cast<std::size_t>(std::ceil(t_max / grid_step - 1e-9)) + 1;
    std::vector<double> c(n);
    for (std::size_t k = 0; k < n; ++k)
        c[k] = 1.0 - std::exp(-rate * grid_step * static_cast<double>(k));
    double tail = 1.0 - c.back();
    return from_parts({}, grid_step, std::move(c), tail, rate);
}

MixedCdf MixedCdf::uniform(double lo, double hi, double grid_step) {
    if (!(hi > lo) || lo < 0.0) throw ConfigError("uniform: need 0 <= lo < hi");
    auto n = static_cast<std::size_t>(std::ceil(hi / grid_step - 1e-9)) + 1;
    std::vector<double> c(n);
    for (std::size_t k = 0; k < n; ++k) {
        double x = grid_step * static_cast<double>(k);
        c[k] = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
    }
    c.back() = 1.0;
    return from_parts({}, grid_step, std::move(c), 0.0);
}

MixedCdf MixedCdf::point_mass(double at) {
    return from_parts({{at, 1.0}}, 1.0, {}, 0.0);
}

MixedCdf MixedCdf::empirical(std::vector<double> samples) {
    if (samples.empty()) throw ConfigError("empirical: needs at least one sample");
    std::sort(samples.begin(), samples.end());
    double w = 1.0 / static_cast<double>(samples.size());
    std::vector<Atom> atoms;
    for (double x : samples) atoms.push_back({x, w});
    double defect = 1.0 - w * static_cast<double>(samples.size());
    if (!atoms.empty()) atoms.back().mass += defect;  // keep the total exactly 1
    return from_parts(std::move(atoms), 1.0, {}, 0.0);
}

MixedCdf MixedCdf::mixture(const std::vector<std::pair<double, MixedCdf>>& weighted) {
    if (weighted.empty()) throw ConfigError("mixture: needs at least one component");
    double wsum = 0.0;
    for (const auto& [w, f] : weighted) {
        if (!(w >= 0.0)) throw ConfigError("mixture: negative weight");
        wsum += w;
    }
    if (std::fabs(wsum - 1.0) > 1e-9)
        throw ConfigError("mixture: weights sum to " + std::to_string(wsum));

    double step = weighted.front().second.grid_step();
    double end = 0.0;
    bool any_cont = false;
    for (const auto& [w, f] : weighted) {
        if (!f.continuous_values().empty()) {
            any_cont = true;
            step = std::min(step, f.grid_step());
            end = std::max(end,
                           f.grid_step() * static_cast<double>(f.continuous_values().size() - 1));
        }
    }

    std::vector<Atom> atoms;
    std::vector<double> cont;
    if (any_cont) {
        auto n = static_cast<std::size_t>(std::llround(end / step)) + 1;
        cont.assign(n, 0.0);
        for (const auto& [w, f] : weighted)
            for (std::size_t k = 0; k < n; ++k)
                cont[k] += w * f.continuous_increment(0.0, step * static_cast<double>(k));
    }
    double tail = 0.0;
    std::optional<double> rate;
    bool rate_ok = true;
    for (const auto& [w, f] : weighted) {
        for (const Atom& a : f.atoms()) atoms.push_back({a.location, w * a.mass});
        tail += w * f.tail_mass();
        if (f.tail_mass() > kMassTol) {
            if (!f.tail_rate()) rate_ok = false;
            else if (!rate) rate = f.tail_rate();
            else if (std::fabs(*rate - *f.tail_rate()) > 1e-12) rate_ok = false;
        }
    }
    return from_parts(std::move(atoms), step, std::move(cont), tail,
                      rate_ok ? rate : std::nullopt);
}

namespace {

// Exact integral over [0, x] of the survivor 1 - F(s): atoms and the
// piecewise-linear continuous component integrate in closed form, and mass
// beyond the represented horizon uses the declared exponential tail.
double survivor_integral(const MixedCdf& F, double x) {
    double top = F.t_max();
    double xr = std::min(x, top);
    double s = xr;
    for (const Atom& a : F.atoms()) s -= a.mass * std::max(0.0, xr - a.location);
    const std::vector<double>& c = F.continuous_values();
    if (c.size() >= 2) {
        double h = F.grid_step();
        std::size_t cells = c.size() - 1;
        double cont_top = h * static_cast<double>(cells);
        double reach = std::min(xr, cont_top);
        auto nfull = static_cast<std::size_t>(std::floor(reach / h + 1e-9));
        nfull = std::min(nfull, cells);
        for (std::size_t j = 0; j < nfull; ++j) s -= h * 0.5 * (c[j] + c[j + 1]);
        double lo = h * static_cast<double>(nfull);
        if (reach > lo && nfull < cells) {
            double frac = (reach - lo) / h;
            double chi = c[nfull] + frac * (c[nfull + 1] - c[nfull]);
            s -= (reach - lo) * 0.5 * (c[nfull] + chi);
        }
        if (xr > cont_top) s -= (xr - cont_top) * c.back();
    }
    if (x > top && F.tail_mass() > kMassTol) {
        if (!F.tail_rate())
            throw NumericalError(
                "survivor_integral: tail mass present without a tail rate");
        double r = *F.tail_rate();
        s += F.tail_mass() * (1.0 - std::exp(-r * (x - top))) / r;
    }
    return s;
}

} // namespace

MixedCdf MixedCdf::equilibrium_of(const MixedCdf& base, double t_max, double grid_step) {
    double inv_mean = 1.0 / base.mean();
    auto n = static_cast<std::size_t>(std::ceil(t_max / grid_step - 1e-9)) + 1;
    std::vector<double> c(n, 0.0);
    for (std::size_t k = 1; k < n; ++k)
        c[k] = inv_mean * survivor_integral(base, grid_step * static_cast<double>(k));
    for (double& v : c) v = std::min(v, 1.0);
    double tail = std::max(0.0, 1.0 - c.back());
    std::optional<double> rate = tail > kMassTol ? base.tail_rate() : std::nullopt;
    return from_parts({}, grid_step, std::move(c), tail, rate);
}

double integrate_dF(const MixedCdf& F, double t, const std::function<double(double)>& g) {
    if (t < 0.0) return 0.0;
    double total = 0.0;
    for (const Atom& a : F.atoms()) {
        if (a.location <= t + loc_tolerance(t)) total += g(std::min(a.location, t)) * a.mass;
        else break;
    }
    const auto& c = F.continuous_values();
    if (!c.empty()) {
        double h = F.grid_step();
        auto full = static_cast<std::size_t>(std::floor(t / h + 1e-9));
        std::size_t cells = c.size() - 1;
        std::size_t k = 0;
        for (; k < std::min(full, cells); ++k) {
            double dm = c[k + 1] - c[k];
            if (dm != 0.0) total += g(h * (static_cast<double>(k) + 0.5)) * dm;
        }
        if (k < cells) {
            double lo = h * static_cast<double>(k);
            if (t > lo) {
                double dm = F.continuous_increment(lo, t);
                if (dm != 0.0) total += g(0.5 * (lo + t)) * dm;
            }
        }
    }
    return total;
}

double stieltjes_integral(const GridPath& g, const MixedCdf& F, double t) {
    if (g.horizon() < t - 1e-9 * g.step())
        throw NumericalError("stieltjes_integral: path horizon shorter than t");
    return integrate_dF(F, t, [&](double u) { return g.value(u); });
}

double convolve_stieltjes(const GridPath& g, const MixedCdf& F, double t) {
    if (g.horizon() < t - 1e-9 * g.step())
        throw NumericalError("convolve_stieltjes: path horizon shorter than t");
    return integrate_dF(F, t, [&](double u) { return g.value(t - u); });
}

MixedCdf f_prime(const MixedCdf& F) {
    std::vector<Atom> atoms;
    for (const Atom& a : F.atoms()) {
        double denom = 1.0 - F.left(a.location);
        double numer = 1.0 - F.eval(a.location);
        double scaled = denom > kMassTol ? a.mass * numer / denom : 0.0;
        atoms.push_back({a.location, scaled});
    }
    return MixedCdf::from_parts(std::move(atoms), F.grid_step(),
                                std::vector<double>(F.continuous_values()), 0.0,
                                std::nullopt, /*subprobability=*/true);
}

HazardResult hazard_integral(const MixedCdf& F, double x) {
    HazardResult res;
    if (x < 0.0) return res;

    // Walk atoms and continuous pieces in location order; within a piece the
    // survivor function is continuous, so the midpoint value of 1 - F serves
    // as the denominator.
    struct Piece { double lo, hi; bool atom; double mass; };
    std::vector<Piece> pieces;
    for (const Atom& a : F.atoms())
        if (a.location <= x + loc_tolerance(x)) pieces.push_back({a.location, a.location, true, a.mass});
    const auto& c = F.continuous_values();
    if (!c.empty()) {
        double h = F.grid_step();
        std::size_t cells = c.size() - 1;
        for (std::size_t k = 0; k < cells; ++k) {
            double lo = h * static_cast<double>(k);
            if (lo >= x) break;
            double hi = std::min(h * static_cast<double>(k + 1), x);
            double dm = F.continuous_increment(lo, hi);
            if (dm > 0.0) pieces.push_back({lo, hi, false, dm});
        }
    }
    std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) {
        if (a.lo != b.lo) return a.lo < b.lo;
        return a.hi < b.hi;
    });
    for (const Piece& p : pieces) {
        if (p.atom) {
            double denom = 1.0 - F.left(p.lo);
            if (denom <= kMassTol) {
                res.complete = false;
                res.stopped_at = p.lo;
                return res;
            }
            res.value += p.mass / denom;
        } else {
            double mid = 0.5 * (p.lo + p.hi);
            double denom = 1.0 - F.eval(mid);
            if (denom <= kMassTol) {
                res.complete = false;
                res.stopped_at = mid;
                return res;
            }
            res.value += p.mass / denom;
        }
    }
    // If all mass is used up at or below x, integration stopped at the top of
    // the support: the earliest breakpoint where the survivor vanishes.
    if (F.eval(x) >= 1.0 - kMassTol && F.tail_mass() <= kMassTol) {
        res.complete = false;
        double top = x;
        for (const Atom& a : F.atoms())
            if (F.eval(a.location) >= 1.0 - kMassTol) top = std::min(top, a.location);
        if (!c.empty()) {
            double h = F.grid_step();
            for (std::size_t k = 0; k < c.size(); ++k) {
                double g = h * static_cast<double>(k);
                if (F.eval(g) >= 1.0 - kMassTol) {
                    top = std::min(top, g);
                    break;
                }
            }
        }
        res.stopped_at = top;
    }
    return res;
}

} // namespace qlimits
