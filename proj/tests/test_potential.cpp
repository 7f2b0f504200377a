#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "oracles.hpp"
#include "tiltcross/error.hpp"
#include "tiltcross/potential.hpp"

using namespace tiltcross;
using std::numbers::pi;

namespace {

const DiabaticPotential paper{ParametricTanh{0.5, -0.4, 0.5, 1.0}};

// Z = 0.2 + x + 0.3 x^2, X = 0.5: the crossing is off the origin.
DiabaticPotential shifted_series() {
    return DiabaticPotential(SeriesPotential{{0.5}, {0.2, 1.0, 0.3}, {0.0, 0.7}, 0.0, 2.0});
}

// tau by the substitution t = 1 - u^2 on the segment x_c -> q, composite
// Simpson in u, square-root branch followed by continuity.
cplx tau_oracle(const DiabaticPotential& pot, double x_c, cplx q, int n = 20000) {
    cplx prev = std::sqrt(pot.rho_squared(x_c));
    std::vector<cplx> g(n + 1);
    for (int i = n; i >= 0; --i) {
        const double u = double(i) / n;
        const cplx z = x_c + (1.0 - u * u) * (q - x_c);
        cplx r = std::sqrt(pot.rho_squared(z));
        if (std::abs(r + prev) < std::abs(r - prev)) r = -r;
        prev = r;
        g[i] = r * 2.0 * u;
    }
    cplx acc = g[0] + g[n];
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * g[i];
    return 2.0 * (q - x_c) * acc / (3.0 * n);
}

}  // namespace

TEST_CASE("adiabatic quantities match a symmetric eigensolver") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int i = 0; i < 100; ++i) {
        const double x = u(rng);
        Eigen::Matrix2d v;
        const double X = paper.x_entry(x), Z = paper.z_entry(x), d = paper.trace(x);
        v << d + Z, X, X, d - Z;
        const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(v).eigenvalues();
        const auto a = eval_adiabatic(paper, x);
        CHECK(a.rho == doctest::Approx(0.5 * (ev[1] - ev[0])).epsilon(1e-13));
        CHECK(a.d == doctest::Approx(0.5 * (ev[1] + ev[0])).epsilon(1e-13).scale(1.0));
    }
    const auto a0 = eval_adiabatic(paper, 0.0);
    CHECK(a0.rho == 0.5);
    CHECK(a0.d == 0.0);
    CHECK(a0.theta == pi / 2);  // Z(0) = 0 exactly
}

TEST_CASE("theta sweep is continuous") {
    std::vector<double> xs;
    for (double x = -8.0; x <= 8.0; x += 0.01) xs.push_back(x);
    const auto pts = eval_adiabatic(paper, xs);
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(std::abs(pts[i].theta - pts[i - 1].theta) < 0.1);
}

TEST_CASE("crossing location") {
    CHECK(std::abs(find_crossing(paper, {-5.0, 5.0})) < 1e-10);
    CHECK(std::abs(find_crossing(DiabaticPotential(LandauZenerLinear{0.5, 2.0}), {-1.0, 1.0})) < 1e-10);

    const auto pot = shifted_series();
    const double golden = oracle::golden_min([&](double x) { return pot.rho_squared(x).real(); }, -1.0, 1.0);
    const double exact = (-1.0 + std::sqrt(1.0 - 0.24)) / 0.6;
    CHECK(find_crossing(pot, {-1.0, 1.0}) == doctest::Approx(exact).epsilon(1e-9));
    CHECK(golden == doctest::Approx(exact).epsilon(1e-6));

    CHECK_THROWS_AS(find_crossing(DiabaticPotential(LandauZenerLinear{0.5, 1.0}), {0.5, 2.0}), Error);
}

TEST_CASE("local parameters") {
    const auto lp = local_params(paper, 0.0);
    CHECK(lp.delta == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(lp.lambda == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(lp.d0) < 1e-14);
    CHECK(local_params(DiabaticPotential(ParametricTanh{0.5, -0.4, 0.5, 0.0}), 0.0).lambda == 0.0);
    CHECK(local_params(DiabaticPotential(ParametricTanh{0.5, -0.4, 0.5, 2.5}), 0.0).lambda ==
          doctest::Approx(2.5).epsilon(1e-8));
    // series: d = 0.7 x
    const auto pot = shifted_series();
    CHECK(local_params(pot, find_crossing(pot, {-1.0, 1.0})).lambda == doctest::Approx(0.7).epsilon(1e-8));
}

TEST_CASE("complex zeros") {
    const cplx lz = find_complex_zero(DiabaticPotential(LandauZenerLinear{0.5, 2.0}), 0.0);
    CHECK(std::abs(lz - cplx(0.0, 0.25)) < 1e-12);

    // beta = 0: tanh q = i delta / alpha = i, so q = i pi / 4.
    const cplx sym = find_complex_zero(DiabaticPotential(ParametricTanh{0.5, 0.0, 0.5, 0.0}), 0.0);
    CHECK(std::abs(sym - cplx(0.0, pi / 4)) < 1e-10);

    // series: 0.3 q^2 + q + 0.2 = 0.5 i, root with the smaller positive imaginary part
    const auto pot = shifted_series();
    const double x_c = find_crossing(pot, {-1.0, 1.0});
    const cplx disc = std::sqrt(cplx(1.0 - 4.0 * 0.3 * 0.2, 4.0 * 0.3 * 0.5));
    cplx best{0.0, 1e9};
    for (cplx r : {(-1.0 + disc) / 0.6, (-1.0 - disc) / 0.6, (-1.0 + std::conj(disc)) / 0.6,
                   (-1.0 - std::conj(disc)) / 0.6})
        if (r.imag() > 0 && r.imag() < best.imag()) best = r;
    CHECK(std::abs(find_complex_zero(pot, x_c) - best) < 1e-10);

    const cplx q = find_complex_zero(paper, 0.0);
    CHECK(q.imag() > 0.0);
    CHECK(std::abs(paper.rho_squared(q)) < 1e-13);
}

TEST_CASE("natural scale") {
    CHECK(std::abs(natural_scale(paper, 0.0, 0.0)) == 0.0);

    const DiabaticPotential lz(LandauZenerLinear{0.5, 0.5});
    const cplx t = natural_scale(lz, cplx(0.0, 1.0), 0.0);
    CHECK(std::abs(t - cplx(0.0, pi * 0.25 / 1.0)) < 1e-11);

    const cplx q = find_complex_zero(paper, 0.0);
    const cplx tau = natural_scale(paper, q, 0.0);
    CHECK(std::abs(tau - tau_oracle(paper, 0.0, q)) < 1e-9);
    CHECK(std::abs(tau.real() - (-0.16611)) < 1e-4);
    CHECK(std::abs(tau.imag() - 0.53772) < 1e-4);
}

TEST_CASE("stokes data") {
    const auto s = stokes_data(paper, {-5.0, 5.0});
    CHECK(s.delta == doctest::Approx(0.5));
    CHECK(s.lambda == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(s.tau_c() > 0.0);

    const auto sym = stokes_data(DiabaticPotential(ParametricTanh{0.5, 0.0, 0.5, 1.0}), {-5.0, 5.0});
    CHECK(std::abs(sym.tau_r()) < 1e-10);

    const auto lz = stokes_data(DiabaticPotential(LandauZenerLinear{0.5, 0.5}), {-1.0, 1.0});
    CHECK(lz.tau_c() == doctest::Approx(pi * 0.25 / 1.0).epsilon(1e-10));
    CHECK(std::abs(lz.tau_r()) < 1e-12);

    const auto tp = transition_point(paper, s, {-5.0, 5.0});
    REQUIRE(tp.has_value());
    CHECK(natural_scale(paper, *tp, s.x_c).real() == doctest::Approx(s.tau_r()).epsilon(1e-9));
    CHECK(std::abs(*tp) < 1.0);
}

TEST_CASE("tau_c grows with the gap") {
    double prev = 0.0;
    for (double gap : {0.3, 0.4, 0.5, 0.6, 0.7}) {
        const double tc = stokes_data(DiabaticPotential(ParametricTanh{0.5, -0.4, gap, 1.0}), {-5.0, 5.0}).tau_c();
        CHECK(tc > prev);
        prev = tc;
    }
}
