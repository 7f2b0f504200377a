#include <doctest.h>

#include <numbers>

#include "oracles.hpp"
#include "tiltcross/error.hpp"
#include "tiltcross/recursions.hpp"

using namespace tiltcross;
using std::numbers::pi;

namespace {

const DiabaticPotential paper{ParametricTanh{0.5, -0.4, 0.5, 1.0}};

// The same potential written out again, so the oracles do not go through the
// library's entry evaluation.
cplx z_of(cplx z) { return 0.5 * std::tanh(z) - 0.4 * z * z / std::cosh(z); }
cplx d_of(cplx z) { return std::tanh(z); }
constexpr double gap = 0.5;

// theta = atan2(X, Z) with X constant: theta' = -X Z' / (X^2 + Z^2)
cplx theta_p(cplx z) {
    const cplx zp = oracle::cauchy_derivative(z_of, z.real(), 1, 0.05, 64);
    // cauchy_derivative expands around a real centre; shift for complex z
    const cplx shift = z - z.real();
    const cplx zp_c = shift == 0.0 ? zp : oracle::cauchy_derivative([&](cplx w) { return z_of(w + shift); }, z.real(), 1, 0.05, 64);
    const cplx zz = z_of(z);
    return -gap * zp_c / (gap * gap + zz * zz);
}
cplx rho_of(cplx z) { return std::sqrt(gap * gap + z_of(z) * z_of(z)); }

const CouplingTable& table() {
    static const CouplingTable t = coupling_coeffs(paper, 8);
    return t;
}

Eigen::Index nearest(const Eigen::ArrayXd& x, double q) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 0; j < x.size(); ++j)
        if (std::abs(x[j] - q) < std::abs(x[best] - q)) best = j;
    return best;
}

double transition() {
    const auto s = stokes_data(paper, {-5.0, 5.0});
    return *transition_point(paper, s, {-5.0, 5.0});
}

}  // namespace

TEST_CASE("derivative coefficients reproduce the derivatives of V") {
    const auto dv = potential_derivative_coeffs(paper, 6);
    for (int n = 1; n <= 4; ++n) {
        const auto parts = reconstruct_derivative(paper, dv, n);
        double err = 0.0, scale = 0.0;
        for (Eigen::Index j = 0; j < dv.x.size(); ++j) {
            const double x = dv.x[j];
            if (std::abs(x) > 20.0) continue;
            const cplx zz = oracle::cauchy_derivative(z_of, x, n);
            const cplx dd = oracle::cauchy_derivative(d_of, x, n);
            err = std::max({err, std::abs(parts.z[j] - zz), std::abs(parts.x[j]), std::abs(parts.d[j] - dd)});
            scale = std::max({scale, std::abs(zz), std::abs(dd)});
            // the trace recursion is decoupled: c_n = d^(n)
            CHECK(std::abs(dv.c[n][j] - dd) <= 1e-6 * std::max(1.0, std::abs(dd)));
        }
        CHECK(err <= 1e-6 * scale);
    }
    CHECK_THROWS_AS(potential_derivative_coeffs(paper, 13), Error);
    CHECK_THROWS_AS(reconstruct_derivative(paper, dv, 7), Error);
}

TEST_CASE("constant potential has no derivative or coupling terms") {
    const DiabaticPotential flat(SeriesPotential{{0.5}, {1.0}, {2.0}, 0.0, 1.0});
    const auto dv = potential_derivative_coeffs(flat, 4);
    for (int n = 1; n <= 4; ++n) {
        CHECK(dv.a[n].abs().maxCoeff() < 1e-12);
        CHECK(dv.b[n].abs().maxCoeff() < 1e-12);
        CHECK(dv.c[n].abs().maxCoeff() < 1e-12);
    }
    const auto t = coupling_coeffs(flat, 4);
    for (int n = 1; n <= 4; ++n)
        for (int m = 0; m <= n; ++m)
            for (char w : {'x', 'y', 'z', 'w'}) CHECK(t.coeff(w, n, m).abs().maxCoeff() < 1e-12);
}

TEST_CASE("structural zeros are exact") {
    const auto& t = table();
    for (int n = 1; n <= 8; ++n)
        for (int m = 0; m <= n; ++m)
            for (char w : {'x', 'y', 'z', 'w'}) {
                const bool zero = (m % 2 == 1) || (w == 'y' ? n % 2 == 0 : n % 2 == 1);
                CHECK(CouplingTable::structural_zero(w, n, m) == zero);
                if (zero) {
                    CHECK((t.coeff(w, n, m) == cplx(0.0)).all());
                } else if (w != 'z' && w != 'w') {
                    CHECK(t.coeff(w, n, m).abs().maxCoeff() > 0.0);
                }
            }
}

TEST_CASE("kappa_2 against the closed second-order form") {
    // kappa_{2,0} = -(theta' / (4 rho))',  kappa_{2,2} = d' theta' / (4 rho)
    const auto& t = table();
    auto g = [](cplx z) { return theta_p(z) / (4.0 * rho_of(z)); };
    const auto k20 = t.kappa_minus(2, 0), k22 = t.kappa_minus(2, 2);
    double e0 = 0.0, e2 = 0.0;
    for (Eigen::Index j = 0; j < t.x().size(); j += 4) {
        const double x = t.x()[j];
        if (std::abs(x) > 20.0) continue;
        const cplx o0 = -oracle::cauchy_derivative(g, x, 1, 0.15, 64);
        const cplx o2 = oracle::cauchy_derivative(d_of, x, 1) * g(x);
        e0 = std::max(e0, std::abs(k20[j] - o0));
        e2 = std::max(e2, std::abs(k22[j] - o2));
    }
    CHECK(e0 < 1e-8);
    CHECK(e2 < 1e-8);
}

TEST_CASE("kappa_1 from the table and from the asymptotic form") {
    const auto& t = table();
    const auto k1 = t.kappa_minus(1, 0);
    double err = 0.0;
    for (Eigen::Index j = 0; j < t.x().size(); j += 8) {
        const double x = t.x()[j];
        if (std::abs(x) > 20.0) continue;
        err = std::max(err, std::abs(k1[j] - cplx(0.0, -0.5) * theta_p(x)));
    }
    CHECK(err < 1e-10);

    // the asymptotic form holds near the crossing; the remainder has no
    // bound, so the comparison is made at the transition point
    const double tp = transition();
    const auto s = stokes_data(paper, {-5.0, 5.0});
    const std::vector<double> q{tp};
    const cplx direct = cplx(0.0, -0.5) * theta_p(tp);
    CHECK(std::abs(kappa_asymptotic(1, q, paper, s)[0] / direct - 1.0) < 0.05);
}

TEST_CASE("recursion and asymptotic kappa near the transition point") {
    const auto& t = table();
    const auto s = stokes_data(paper, {-5.0, 5.0});
    const Eigen::Index j = nearest(t.x(), transition());
    const std::vector<double> q{t.x()[j]};

    const cplx rec6 = t.kappa_minus(6, 0)[j];
    const cplx asym6 = kappa_asymptotic(6, q, paper, s)[0];
    CHECK(std::abs(rec6 / asym6 - 1.0) < 0.15);

    // growth: |tau - tau_delta| = tau_c at the transition point, so for odd n
    // log|kappa_{n+2}| - log|kappa_n| = log(n (n + 1)) - 2 log tau_c
    for (int n : {3, 5}) {
        const double inc = std::log(std::abs(t.kappa_minus(n + 2, 0)[j] / t.kappa_minus(n, 0)[j]));
        const double want = std::log(double(n) * (n + 1)) - 2.0 * std::log(s.tau_c());
        CHECK(inc == doctest::Approx(want).epsilon(0.05));
    }
}

TEST_CASE("asymptotic kappa: parity and peak") {
    const auto s = stokes_data(paper, {-5.0, 5.0});
    std::vector<double> q;
    for (double x = -3.0; x <= 3.0; x += 1e-3) q.push_back(x);
    for (int n = 1; n <= 8; ++n) {
        const auto k = kappa_asymptotic(n, q, paper, s);
        std::size_t best = 0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            // odd n: purely imaginary; even n: real
            const double off = n % 2 ? k[i].real() : k[i].imag();
            CHECK(std::abs(off) <= 1e-12 * std::abs(k[i]));
            if (std::abs(k[i]) > std::abs(k[best])) best = i;
        }
        if (n % 2) CHECK(std::abs(q[best] - transition()) < 0.05);
    }
    CHECK_THROWS_AS(kappa_asymptotic(0, q, paper, s), Error);
}

TEST_CASE("coupling Fourier transform") {
    const auto s = stokes_data(paper, {-5.0, 5.0});
    const double eps = 0.02;
    const std::vector<double> k{-0.4, -0.1, 0.0, 0.1, 0.4};
    for (int n : {2, 3, 5}) {
        const auto f = coupling_fourier(n, k, s, eps);
        CHECK(f[2] == cplx(0.0));
        CHECK(std::abs(f[0]) == doctest::Approx(std::abs(f[4])).epsilon(1e-14));
        CHECK(std::abs(f[1]) == doctest::Approx(std::abs(f[3])).epsilon(1e-14));
    }
    CHECK(std::abs(coupling_fourier(1, k, s, eps)[2]) > 0.0);

    // trapezoid transform of the asymptotic kappa in the natural-scale coordinate
    const int n = 5;
    const double h = 4e-3;
    std::vector<double> q;
    for (double x = -10.0; x <= 10.0; x += h) q.push_back(x);
    const auto kap = kappa_asymptotic(n, q, paper, s);
    const double k_peak = (n - 1) * 2.0 * s.delta * eps / s.tau_c();
    const std::vector<double> ks{0.9 * k_peak, k_peak, 1.1 * k_peak};
    const auto cf = coupling_fourier(n, ks, s, eps);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) {
            const double u = natural_scale(paper, q[j], s.x_c).real() / (2.0 * s.delta);
            acc += std::polar(1.0, -ks[i] * u / eps) * kap[j];
        }
        acc *= h / std::sqrt(2.0 * pi * eps);
        CHECK(std::abs(acc / cf[i] - 1.0) < 0.01);
    }
    CHECK_THROWS_AS(coupling_fourier(0, k, s, eps), Error);
}

TEST_CASE("smoothness check") {
    RecursionConfig cfg;
    cfg.grid = Grid{64, -40.0, 40.0};
    CHECK_THROWS_AS(coupling_coeffs(paper, 4, cfg), Error);
    CHECK_THROWS_AS(coupling_coeffs(paper, 9), Error);
}
