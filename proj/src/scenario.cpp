#include "qlimits/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qlimits/errors.hpp"

namespace qlimits {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
    throw ConfigError(origin + ": " + what);
}

const json& member(const json& j, const std::string& key, const std::string& origin,
                   const std::string& path) {
    if (!j.is_object()) fail(origin, path + " must be an object");
    auto it = j.find(key);
    if (it == j.end()) fail(origin, path + "." + key + " is required");
    return *it;
}

double number(const json& j, const std::string& origin, const std::string& path) {
    if (!j.is_number()) fail(origin, path + " must be a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) fail(origin, path + " must be finite");
    return v;
}

double number_field(const json& j, const std::string& key, const std::string& origin,
                    const std::string& path) {
    return number(member(j, key, origin, path), origin, path + "." + key);
}

double number_or(const json& j, const std::string& key, double fallback,
                 const std::string& origin, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return number(j.at(key), origin, path + "." + key);
}

std::string kind_of(const json& j, const std::string& origin, const std::string& path) {
    const json& k = member(j, "kind", origin, path);
    if (!k.is_string()) fail(origin, path + ".kind must be a string");
    return k.get<std::string>();
}

std::vector<double> number_list(const json& j, const std::string& origin,
                                const std::string& path) {
    if (!j.is_array()) fail(origin, path + " must be an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(number(j.at(i), origin, path + "[" + std::to_string(i) + "]"));
    return out;
}

// Distribution specs: exponential{rate}, deterministic{at}, uniform{lo,hi},
// empirical{samples}, mixture{components:[{weight,...}]}; "equilibrium" is
// allowed only where a base distribution exists (the residual slot).
MixedCdf parse_distribution(const json& j, double t_max, double grid_step,
                            const std::string& origin, const std::string& path,
                            const MixedCdf* equilibrium_base) {
    std::string kind = kind_of(j, origin, path);
    if (kind == "exponential") {
        double rate = number_field(j, "rate", origin, path);
        if (!(rate > 0.0)) fail(origin, path + ".rate must be positive");
        return MixedCdf::exponential(rate, t_max, grid_step);
    }
    if (kind == "deterministic") {
        double at = number_field(j, "at", origin, path);
        if (at < 0.0) fail(origin, path + ".at must be nonnegative");
        return MixedCdf::point_mass(at);
    }
    if (kind == "uniform") {
        double lo = number_field(j, "lo", origin, path);
        double hi = number_field(j, "hi", origin, path);
        if (!(0.0 <= lo && lo < hi)) fail(origin, path + " requires 0 <= lo < hi");
        return MixedCdf::uniform(lo, hi, grid_step);
    }
    if (kind == "empirical") {
        std::vector<double> samples =
            number_list(member(j, "samples", origin, path), origin, path + ".samples");
        if (samples.empty()) fail(origin, path + ".samples must be nonempty");
        for (double s : samples)
            if (s < 0.0) fail(origin, path + ".samples must be nonnegative");
        return MixedCdf::empirical(std::move(samples));
    }
    if (kind == "mixture") {
        const json& comps = member(j, "components", origin, path);
        if (!comps.is_array() || comps.empty())
            fail(origin, path + ".components must be a nonempty array");
        std::vector<std::pair<double, MixedCdf>> parts;
        for (std::size_t i = 0; i < comps.size(); ++i) {
            std::string p = path + ".components[" + std::to_string(i) + "]";
            double w = number_field(comps.at(i), "weight", origin, p);
            if (!(w > 0.0)) fail(origin, p + ".weight must be positive");
            parts.emplace_back(
                w, parse_distribution(comps.at(i), t_max, grid_step, origin, p, nullptr));
        }
        return MixedCdf::mixture(parts);
    }
    if (kind == "equilibrium") {
        if (equilibrium_base == nullptr)
            fail(origin, path + ": \"equilibrium\" is only valid for the residual "
                         "distribution (it derives from the service distribution)");
        return MixedCdf::equilibrium_of(*equilibrium_base, t_max, grid_step);
    }
    fail(origin, path + ".kind \"" + kind + "\" is not a known distribution");
}

X0Law parse_x0(const json& j, const std::string& origin, const std::string& path) {
    std::string kind = kind_of(j, origin, path);
    if (kind == "point") return X0Point{number_field(j, "value", origin, path)};
    if (kind == "normal") {
        X0Normal n;
        n.mean = number_or(j, "mean", 0.0, origin, path);
        n.sd = number_field(j, "sd", origin, path);
        if (n.sd < 0.0) fail(origin, path + ".sd must be nonnegative");
        return n;
    }
    if (kind == "empirical") {
        X0Empirical e;
        e.values = number_list(member(j, "values", origin, path), origin, path + ".values");
        if (e.values.empty()) fail(origin, path + ".values must be nonempty");
        return e;
    }
    fail(origin, path + ".kind \"" + kind + "\" is not a known initial-fluctuation law");
}

YSpec parse_y(const json& j, const std::string& origin, const std::string& path) {
    std::string kind = kind_of(j, origin, path);
    if (kind == "zero") return YZero{};
    if (kind == "brownian") {
        double rate = number_field(j, "variance_rate", origin, path);
        if (rate < 0.0) fail(origin, path + ".variance_rate must be nonnegative");
        return YBrownian{rate};
    }
    fail(origin, path + ".kind \"" + kind + "\" is not a known arrival-fluctuation law");
}

} // namespace

std::size_t Scenario::grid_points() const {
    auto cells = static_cast<std::size_t>(std::ceil(horizon / grid_step - 1e-9));
    return std::max<std::size_t>(cells, 1) + 1;
}

double Scenario::grid_horizon() const {
    return grid_step * static_cast<double>(grid_points() - 1);
}

GridPath Scenario::grid_template() const {
    return GridPath::constant(grid_step, grid_points(), 0.0, Interp::Linear);
}

GridPath Scenario::arrival_curve() const {
    double rate = arrival_kind == ScenarioArrivals::None ? 0.0 : arrival_rate;
    return GridPath::sampled(grid_step, grid_points(),
                             [rate](double t) { return rate * t; }, Interp::Linear);
}

SimConfig Scenario::sim_config(std::size_t n, std::uint64_t stream_seed) const {
    SimConfig c;
    if (!infinite_servers) c.n = static_cast<long long>(n);
    c.q0 = static_cast<long long>(std::floor(q0 * static_cast<double>(n) + 1e-9));
    switch (arrival_kind) {
    case ScenarioArrivals::None:
        c.arrivals = ExplicitArrivals{};
        break;
    case ScenarioArrivals::Poisson:
        c.arrivals = PoissonArrivals{arrival_rate * static_cast<double>(n)};
        break;
    case ScenarioArrivals::Periodic: {
        double period = 1.0 / (arrival_rate * static_cast<double>(n));
        c.arrivals = PeriodicArrivals{period, period};
        break;
    }
    }
    c.service_cdf = service_cdf;
    c.residual_cdf = residual_cdf;
    c.horizon = grid_horizon();
    c.seed = stream_seed;
    return c;
}

FluidModel Scenario::fluid_model() const {
    FluidModel m;
    m.q0 = q0;
    m.arrival_curve = arrival_curve();
    m.service_cdf = service_cdf;
    m.residual_cdf = residual_cdf;
    return m;
}

LimitInputs Scenario::limit_inputs(const FluidSolution& fluid) const {
    LimitInputs in;
    in.q0 = q0;
    in.service_cdf = service_cdf;
    in.residual_cdf = residual_cdf;
    in.fluid_q = fluid.q;
    in.entry_curve = infinite_servers ? arrival_curve() : fluid.a;
    in.x0 = x0;
    in.y = y;
    in.level_tol = level_tol;
    return in;
}

VolterraOptions Scenario::solver_options() const {
    VolterraOptions opt;
    opt.tol = tol;
    return opt;
}

Scenario scenario_from_json(const std::string& json_text, const std::string& origin) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        fail(origin, std::string("JSON parse error: ") + e.what());
    }
    if (!j.is_object()) fail(origin, "top level must be an object");

    Scenario sc;
    if (j.contains("name")) {
        if (!j.at("name").is_string()) fail(origin, "name must be a string");
        sc.name = j.at("name").get<std::string>();
    }
    if (j.contains("kind")) {
        if (!j.at("kind").is_string()) fail(origin, "kind must be a string");
        std::string k = j.at("kind").get<std::string>();
        if (k == "finite") sc.infinite_servers = false;
        else if (k == "infinite") sc.infinite_servers = true;
        else fail(origin, "kind must be \"finite\" or \"infinite\"");
    }

    sc.horizon = number_field(j, "horizon", origin, "scenario");
    if (!(sc.horizon > 0.0)) fail(origin, "horizon must be positive");
    sc.grid_step = number_or(j, "grid_step", 1.0 / 128.0, origin, "scenario");
    if (!(sc.grid_step > 0.0) || sc.grid_step > sc.horizon)
        fail(origin, "grid_step must be in (0, horizon]");
    sc.tol = number_or(j, "tol", 1e-9, origin, "scenario");
    if (!(sc.tol > 0.0)) fail(origin, "tol must be positive");
    sc.level_tol = number_or(j, "level_tol", 1e-9, origin, "scenario");
    if (!(sc.level_tol > 0.0)) fail(origin, "level_tol must be positive");

    sc.q0 = number_field(j, "q0", origin, "scenario");
    if (sc.q0 < 0.0) fail(origin, "q0 must be nonnegative");

    const json& arr = member(j, "arrivals", origin, "scenario");
    std::string akind = kind_of(arr, origin, "arrivals");
    bool critical_rate = false;
    if (akind == "none") {
        sc.arrival_kind = ScenarioArrivals::None;
        sc.arrival_rate = 0.0;
    } else if (akind == "poisson" || akind == "periodic") {
        sc.arrival_kind =
            akind == "poisson" ? ScenarioArrivals::Poisson : ScenarioArrivals::Periodic;
        const json& rate = member(arr, "rate", origin, "arrivals");
        if (rate.is_string() && rate.get<std::string>() == "critical") {
            // Resolved below as 1 / mean(service): one unit of work arrives
            // per unit of service capacity, measured against the service
            // distribution exactly as discretized on the grid.
            critical_rate = true;
        } else {
            sc.arrival_rate = number(rate, origin, "arrivals.rate");
            if (!(sc.arrival_rate > 0.0)) fail(origin, "arrivals.rate must be positive");
        }
    } else {
        fail(origin, "arrivals.kind \"" + akind + "\" is not a known arrival process");
    }

    double gh = sc.grid_horizon();
    sc.service_cdf = parse_distribution(member(j, "service", origin, "scenario"), gh,
                                        sc.grid_step, origin, "service", nullptr);
    if (critical_rate) sc.arrival_rate = 1.0 / sc.service_cdf.mean();
    if (sc.service_cdf.eval(0.0) >= 1.0 - 1e-12)
        fail(origin, "service distribution has all its mass at 0; the model requires "
                     "F(0) < 1");
    sc.residual_cdf = parse_distribution(member(j, "residual", origin, "scenario"), gh,
                                         sc.grid_step, origin, "residual", &sc.service_cdf);

    if (j.contains("x0")) sc.x0 = parse_x0(j.at("x0"), origin, "x0");
    if (j.contains("y")) {
        sc.y = parse_y(j.at("y"), origin, "y");
    } else if (sc.arrival_kind == ScenarioArrivals::Poisson) {
        // Scaled Poisson arrivals fluctuate like a Brownian motion with
        // variance rate equal to the arrival rate; other arrival kinds here
        // are deterministic and contribute no fluctuation.
        sc.y = YBrownian{sc.arrival_rate};
    } else {
        sc.y = YZero{};
    }

    if (j.contains("seed")) {
        const json& s = j.at("seed");
        if (!s.is_number_unsigned() && !s.is_number_integer())
            fail(origin, "seed must be a nonnegative integer");
        auto v = s.get<long long>();
        if (v < 0) fail(origin, "seed must be a nonnegative integer");
        sc.seed = static_cast<std::uint64_t>(v);
    }

    // Optional explicit fluid arrival curve: must agree with the mean curve
    // of the configured arrival process.
    if (j.contains("arrival_curve")) {
        const json& ac = j.at("arrival_curve");
        double mean_rate = sc.arrival_kind == ScenarioArrivals::None ? 0.0 : sc.arrival_rate;
        if (ac.contains("rate")) {
            double given = number(ac.at("rate"), origin, "arrival_curve.rate");
            double diff = std::fabs(given - mean_rate);
            if (diff > 1e-12 * std::max(1.0, mean_rate)) {
                std::ostringstream os;
                os << "arrival_curve.rate " << given
                   << " is inconsistent with the arrival process mean rate " << mean_rate
                   << " (difference " << diff << ")";
                fail(origin, os.str());
            }
        }
        if (ac.contains("values")) {
            double step = number_field(ac, "step", origin, "arrival_curve");
            if (!(step > 0.0)) fail(origin, "arrival_curve.step must be positive");
            std::vector<double> vals =
                number_list(ac.at("values"), origin, "arrival_curve.values");
            double worst = 0.0;
            for (std::size_t k = 0; k < vals.size(); ++k) {
                if (k > 0 && vals[k] < vals[k - 1] - 1e-12) {
                    std::ostringstream os;
                    os << "arrival_curve.values must be nondecreasing (decreases by "
                       << (vals[k - 1] - vals[k]) << " at index " << k << ")";
                    fail(origin, os.str());
                }
                double t = step * static_cast<double>(k);
                worst = std::max(worst, std::fabs(vals[k] - mean_rate * t));
            }
            if (worst > 1e-9) {
                std::ostringstream os;
                os << "arrival_curve.values deviate from the arrival process mean curve "
                      "by up to "
                   << worst;
                fail(origin, os.str());
            }
        }
        if (!ac.contains("rate") && !ac.contains("values"))
            fail(origin, "arrival_curve requires a rate or values");
    }

    return sc;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return scenario_from_json(buf.str(), path);
}

} // namespace qlimits
