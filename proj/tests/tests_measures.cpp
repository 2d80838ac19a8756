#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "qlimits/errors.hpp"
#include "qlimits/grid_path.hpp"
#include "qlimits/mixed_cdf.hpp"
#include "qlimits/rng.hpp"

using namespace qlimits;

namespace {

// One-sample KS distance between sorted samples and an analytic CDF given by
// its right-continuous evaluation and its left limit (needed when the law has
// atoms: below a tie block the empirical CDF is compared against F(x-)).
double ks_against(std::vector<double> samples, const std::function<double(double)>& cdf,
                  const std::function<double(double)>& cdf_left) {
    std::sort(samples.begin(), samples.end());
    double n = static_cast<double>(samples.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < samples.size()) {
        std::size_t j = i;
        while (j < samples.size() && samples[j] == samples[i]) ++j;
        d = std::max(d, std::fabs(static_cast<double>(j) / n - cdf(samples[i])));
        d = std::max(d, std::fabs(static_cast<double>(i) / n - cdf_left(samples[i])));
        i = j;
    }
    return d;
}

// Convenience overload for continuous laws.
double ks_against(std::vector<double> samples, const std::function<double(double)>& cdf) {
    return ks_against(std::move(samples), cdf, cdf);
}

MixedCdf half_uniform_half_atom() {
    return MixedCdf::mixture({{0.5, MixedCdf::uniform(0.0, 1.0, 1.0 / 128.0)},
                              {0.5, MixedCdf::point_mass(1.0)}});
}

} // namespace

TEST_CASE("point mass evaluation: atom boundary semantics") {
    MixedCdf f = MixedCdf::point_mass(1.0);
    CHECK(f.eval(1.0) == 1.0);
    CHECK(f.left(1.0) == 0.0);
    CHECK(f.jump(1.0) == 1.0);
    CHECK(f.eval(0.999999) == 0.0);
    CHECK(f.eval(0.0) == 0.0);
    CHECK(f.eval(5.0) == 1.0);
    CHECK(f.mean() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.variance() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mixture of uniform and atom evaluates pointwise") {
    MixedCdf f = half_uniform_half_atom();
    CHECK(f.eval(0.6) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(f.jump(1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(f.left(1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(f.eval(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.eval(2.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("every distribution is monotone, right-continuous, in [0,1], with mass accounted") {
    std::vector<MixedCdf> family;
    family.push_back(MixedCdf::point_mass(0.7));
    family.push_back(MixedCdf::uniform(0.25, 2.0, 1.0 / 128.0));
    family.push_back(MixedCdf::exponential(1.3, 4.0, 1.0 / 128.0));
    family.push_back(half_uniform_half_atom());
    family.push_back(MixedCdf::empirical({0.5, 0.5, 1.5, 2.0}));
    family.push_back(
        MixedCdf::equilibrium_of(MixedCdf::exponential(2.0, 4.0, 1.0 / 128.0), 4.0, 1.0 / 128.0));
    family.push_back(MixedCdf::mixture({{0.3, MixedCdf::point_mass(0.0)},
                                        {0.7, MixedCdf::uniform(0.0, 1.0, 1.0 / 128.0)}}));

    for (const MixedCdf& f : family) {
        double prev = -1.0;
        double jump_sum = 0.0;
        for (int i = 0; i <= 4000; ++i) {
            double x = 5.0 * static_cast<double>(i) / 4000.0;
            double v = f.eval(x);
            CHECK(v >= prev - 1e-15);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0 + 1e-15);
            // right continuity and the left/jump decomposition
            CHECK(f.eval(x) == doctest::Approx(f.left(x) + f.jump(x)).epsilon(1e-12));
            prev = v;
        }
        for (const Atom& a : f.atoms()) jump_sum += f.jump(a.location);
        CHECK(jump_sum == doctest::Approx(f.atom_total()).epsilon(1e-12));
        CHECK(f.total_represented() + f.tail_mass() == doctest::Approx(1.0).epsilon(1e-11));
    }
}

TEST_CASE("stieltjes integral: constant integrand returns the CDF") {
    GridPath one = GridPath::constant(1.0 / 128.0, 513, 1.0, Interp::Linear);
    std::vector<MixedCdf> family;
    family.push_back(MixedCdf::point_mass(1.0));
    family.push_back(half_uniform_half_atom());
    family.push_back(MixedCdf::exponential(1.0, 4.0, 1.0 / 128.0));
    for (const MixedCdf& f : family)
        for (double t : {0.0, 0.3, 1.0, 1.7, 2.5, 4.0})
            CHECK(stieltjes_integral(one, f, t) == doctest::Approx(f.eval(t)).epsilon(1e-12));
}

TEST_CASE("stieltjes integral: identity integrand against atom and uniform oracles") {
    GridPath id = GridPath::sampled(1.0 / 128.0, 513, [](double u) { return u; });
    CHECK(stieltjes_integral(id, MixedCdf::point_mass(1.0), 2.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // integral over [0,1] of u du = 1/2
    CHECK(stieltjes_integral(id, MixedCdf::uniform(0.0, 1.0, 1.0 / 128.0), 1.0) ==
          doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("stieltjes integral: linear in the integrand, atom at zero included") {
    MixedCdf f = MixedCdf::mixture({{0.3, MixedCdf::point_mass(0.0)},
                                    {0.7, MixedCdf::uniform(0.0, 2.0, 1.0 / 128.0)}});
    GridPath g = GridPath::sampled(1.0 / 128.0, 513, [](double u) { return std::cos(u); });
    GridPath h = GridPath::sampled(1.0 / 128.0, 513, [](double u) { return u * u; });
    GridPath combo = GridPath::sampled(1.0 / 128.0, 513,
                                       [](double u) { return 2.0 * std::cos(u) - 3.0 * u * u; });
    double lhs = stieltjes_integral(combo, f, 1.5);
    double rhs = 2.0 * stieltjes_integral(g, f, 1.5) - 3.0 * stieltjes_integral(h, f, 1.5);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    // the closed [0, t] convention: integrating up to t = 0 picks up the atom at 0
    CHECK(stieltjes_integral(g, f, 0.0) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("convolution: shift through an atom and the fluid staircase ingredient") {
    GridPath id = GridPath::sampled(1.0 / 128.0, 641, [](double u) { return u; });
    // g(t - s) against a unit atom at 2 evaluates g at t - 2
    CHECK(convolve_stieltjes(id, MixedCdf::point_mass(2.0), 3.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // e(t) = t against an atom at 2, evaluated at 2.5: e(0.5) = 0.5
    CHECK(convolve_stieltjes(id, MixedCdf::point_mass(2.0), 2.5) ==
          doctest::Approx(0.5).epsilon(1e-12));
    // before the atom the convolution vanishes
    CHECK(convolve_stieltjes(id, MixedCdf::point_mass(2.0), 1.5) == 0.0);
}

TEST_CASE("convolution with a constant integrand reproduces evaluation exactly") {
    GridPath one = GridPath::constant(1.0 / 128.0, 513, 1.0, Interp::Linear);
    MixedCdf f = half_uniform_half_atom();
    for (double t : {0.0, 0.25, 0.99, 1.0, 1.01, 3.0})
        CHECK(convolve_stieltjes(one, f, t) == doctest::Approx(f.eval(t)).epsilon(1e-12));
}

TEST_CASE("atom-discounted distribution: continuous input passes through exactly") {
    MixedCdf f = MixedCdf::exponential(0.8, 4.0, 1.0 / 128.0);
    MixedCdf fp = f_prime(f);
    CHECK(fp.atoms().empty());
    REQUIRE(fp.continuous_values().size() == f.continuous_values().size());
    for (std::size_t k = 0; k < fp.continuous_values().size(); ++k)
        CHECK(fp.continuous_values()[k] == f.continuous_values()[k]);
}

TEST_CASE("atom-discounted distribution: terminal atom contributes nothing") {
    MixedCdf fp = f_prime(MixedCdf::point_mass(1.0));
    CHECK(fp.eval(0.5) == 0.0);
    CHECK(fp.eval(1.0) == 0.0);
    CHECK(fp.eval(3.0) == 0.0);
}

TEST_CASE("atom-discounted distribution: half-uniform-half-atom golden") {
    MixedCdf fp = f_prime(half_uniform_half_atom());
    CHECK(fp.eval(0.4) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(fp.eval(0.999) == doctest::Approx(0.4995).epsilon(1e-9));
    // the atom at 1 has (1 - F(1)) = 0, so it is fully discounted
    CHECK(fp.eval(1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fp.jump(1.0) == 0.0);
    CHECK(fp.subprobability());
}

TEST_CASE("hazard accumulation: atom, exponential, and empty cases") {
    HazardResult atom = hazard_integral(MixedCdf::point_mass(1.0), 1.0);
    CHECK(atom.value == doctest::Approx(1.0).epsilon(1e-12));

    MixedCdf ex = MixedCdf::exponential(1.3, 6.0, 1.0 / 512.0);
    HazardResult h = hazard_integral(ex, 2.0);
    CHECK(h.complete);
    CHECK(h.value == doctest::Approx(1.3 * 2.0).epsilon(2e-4));

    HazardResult zero = hazard_integral(ex, 0.0);
    CHECK(zero.value == 0.0);
}

TEST_CASE("hazard accumulation stops where the survivor vanishes") {
    // Uniform on [0,1]: hazard integral to x < 1 is -log(1 - x); at x = 1 the
    // survivor hits zero and integration must stop with a flag.
    MixedCdf u = MixedCdf::uniform(0.0, 1.0, 1.0 / 512.0);
    HazardResult mid = hazard_integral(u, 0.5);
    CHECK(mid.complete);
    CHECK(mid.value == doctest::Approx(-std::log(0.5)).epsilon(2e-3));
    HazardResult top = hazard_integral(u, 2.0);
    CHECK_FALSE(top.complete);
    CHECK(top.stopped_at == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sampling: atom is deterministic, uniform draw maps through the inverse") {
    RandomStream rng(7);
    MixedCdf atom = MixedCdf::point_mass(2.0);
    for (int i = 0; i < 10; ++i) CHECK(atom.sample(rng) == 2.0);

    // A uniform [0,1] sample equals the underlying uniform draw itself.
    MixedCdf u01 = MixedCdf::uniform(0.0, 1.0, 1.0 / 128.0);
    RandomStream a(123), b(123);
    for (int i = 0; i < 100; ++i) {
        double u = a.uniform();
        CHECK(u01.sample(b) == doctest::Approx(u).epsilon(1e-12));
    }
}

TEST_CASE("sampling matches the analytic law: KS < 0.01 over 1e5 draws") {
    const std::size_t n = 100000;

    RandomStream r1(2026'08'15);
    std::vector<double> ex;
    ex.reserve(n);
    MixedCdf f_exp = MixedCdf::exponential(1.0, 8.0, 1.0 / 128.0);
    for (std::size_t i = 0; i < n; ++i) ex.push_back(f_exp.sample(r1));
    CHECK(ks_against(std::move(ex), [](double x) { return 1.0 - std::exp(-x); }) < 0.01);

    RandomStream r2(99);
    std::vector<double> un;
    un.reserve(n);
    MixedCdf f_uni = MixedCdf::uniform(0.5, 1.5, 1.0 / 128.0);
    for (std::size_t i = 0; i < n; ++i) un.push_back(f_uni.sample(r2));
    CHECK(ks_against(std::move(un), [](double x) {
              return std::clamp(x - 0.5, 0.0, 1.0);
          }) < 0.01);

    RandomStream r3(1234);
    std::vector<double> mx;
    mx.reserve(n);
    MixedCdf f_mix = half_uniform_half_atom();
    for (std::size_t i = 0; i < n; ++i) mx.push_back(f_mix.sample(r3));
    CHECK(ks_against(
              std::move(mx),
              [](double x) {
                  if (x < 0.0) return 0.0;
                  if (x < 1.0) return 0.5 * x;
                  return 1.0;
              },
              [](double x) {
                  if (x <= 0.0) return 0.0;
                  if (x <= 1.0) return 0.5 * x;
                  return 1.0;
              }) < 0.01);
}

TEST_CASE("empirical distribution samples only the given values") {
    MixedCdf f = MixedCdf::empirical({1.0, 2.0, 2.0, 4.0});
    CHECK(f.eval(1.0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(f.eval(2.0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(f.eval(4.0) == doctest::Approx(1.0).epsilon(1e-12));
    RandomStream rng(5);
    int c1 = 0, c2 = 0, c4 = 0;
    for (int i = 0; i < 40000; ++i) {
        double s = f.sample(rng);
        if (s == 1.0) ++c1;
        else if (s == 2.0) ++c2;
        else if (s == 4.0) ++c4;
        else FAIL("sample outside the empirical support");
    }
    CHECK(std::fabs(c1 / 40000.0 - 0.25) < 0.01);
    CHECK(std::fabs(c2 / 40000.0 - 0.50) < 0.01);
    CHECK(std::fabs(c4 / 40000.0 - 0.25) < 0.01);
}

TEST_CASE("equilibrium distribution: exact for an atom base, self-similar for exponential") {
    // Equilibrium of a unit atom at d is exactly uniform on [0, d].
    MixedCdf eq = MixedCdf::equilibrium_of(MixedCdf::point_mass(1.0), 3.0, 1.0 / 128.0);
    for (double x : {0.0, 0.25, 0.5, 0.75, 1.0, 2.0})
        CHECK(eq.eval(x) == doctest::Approx(std::min(x, 1.0)).epsilon(1e-12));
    CHECK(eq.tail_mass() == doctest::Approx(0.0).epsilon(1e-12));

    // The exponential law is its own equilibrium distribution.
    MixedCdf base = MixedCdf::exponential(2.0, 6.0, 1.0 / 128.0);
    MixedCdf eq2 = MixedCdf::equilibrium_of(base, 6.0, 1.0 / 128.0);
    for (double x = 0.0; x <= 6.0; x += 0.37)
        CHECK(eq2.eval(x) == doctest::Approx(base.eval(x)).epsilon(5e-5));
}

TEST_CASE("exponential tail: evaluation saturates, sampling extrapolates with the true rate") {
    MixedCdf f = MixedCdf::exponential(1.0, 2.0, 1.0 / 128.0);
    CHECK(f.tail_mass() == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    RandomStream rng(11);
    std::vector<double> s;
    for (int i = 0; i < 100000; ++i) s.push_back(f.sample(rng));
    CHECK(*std::max_element(s.begin(), s.end()) > 2.0);  // tail really gets sampled
    CHECK(ks_against(std::move(s), [](double x) { return 1.0 - std::exp(-x); }) < 0.01);
}

TEST_CASE("moment helpers match closed forms") {
    MixedCdf ex = MixedCdf::exponential(2.0, 16.0, 1.0 / 256.0);
    CHECK(ex.mean() == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(ex.variance() == doctest::Approx(0.25).epsilon(1e-4));
    MixedCdf u = MixedCdf::uniform(1.0, 3.0, 1.0 / 256.0);
    CHECK(u.mean() == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(u.variance() == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("grid paths: interpolation modes and sup distance") {
    GridPath step(0.5, {0.0, 1.0, 3.0}, Interp::Step);
    CHECK(step.value(0.49) == 0.0);
    CHECK(step.value(0.5) == 1.0);
    CHECK(step.value(0.75) == 1.0);
    CHECK(step.value(1.0) == 3.0);

    GridPath lin(0.5, {0.0, 1.0, 3.0}, Interp::Linear);
    CHECK(lin.value(0.25) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(lin.value(0.75) == doctest::Approx(2.0).epsilon(1e-12));

    CHECK_THROWS_AS((void)lin.value(1.5), NumericalError);

    GridPath zero = GridPath::constant(0.5, 3, 0.0);
    GridPath c = GridPath::constant(0.5, 3, -2.5);
    CHECK(sup_distance(zero, zero, 1.0) == 0.0);
    CHECK(sup_distance(zero, c, 1.0) == 2.5);
    CHECK(sup_distance(c, zero, 1.0) == 2.5);

    // Crossing between grid points is invisible at grid resolution: documented.
    GridPath g1(1.0, {0.0, 0.0}, Interp::Linear);
    GridPath g2(0.5, {0.0, 0.4, 0.0}, Interp::Linear);
    CHECK(sup_distance(g1, g2, 1.0) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("random streams: reproducible, stream derivation separates experiments") {
    RandomStream a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(derive_stream(1, 2, 3) != derive_stream(1, 2, 4));
    CHECK(derive_stream(1, 2, 3) != derive_stream(1, 3, 3));
    CHECK(derive_stream(1, 2, 3) != derive_stream(2, 2, 3));
    CHECK(derive_stream(1, 2, 3) == derive_stream(1, 2, 3));
}

TEST_CASE("normal generator: moments and symmetry over 2e5 draws") {
    RandomStream rng(77);
    double s = 0.0, s2 = 0.0, s3 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        s += x;
        s2 += x * x;
        s3 += x * x * x;
    }
    CHECK(std::fabs(s / n) < 0.01);
    CHECK(std::fabs(s2 / n - 1.0) < 0.02);
    CHECK(std::fabs(s3 / n) < 0.05);
}
