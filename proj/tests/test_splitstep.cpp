#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "oracles.hpp"
#include "tiltcross/error.hpp"
#include "tiltcross/splitstep.hpp"

using namespace tiltcross;

namespace {

const DiabaticPotential paper{ParametricTanh{0.5, -0.4, 0.5, 1.0}};
constexpr double eps = 1.0 / 50.0;

GridState paper_packet(const Grid& grid = {}) {
    return inverse_semiclassical_fourier(
        packet_state(normalize(Packet(GaussianPacket{1.0, 5.0, 0.25, 0.0}), eps), grid, eps));
}

GridState two_level(const GridState& upper) {
    GridState s(upper.eps, upper.grid, Space::Position, 2);
    s[0] = upper[0];
    return s;
}

double distance(const GridState& a, const GridState& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < a.n_components(); ++c)
        for (std::size_t j = 0; j < a[c].size(); ++j) {
            num += std::norm(a[c][j] - b[c][j]);
            den += std::norm(b[c][j]);
        }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("free Gaussian dispersion") {
    const Grid grid{4096, -20.0, 20.0};
    const double sigma = 0.8, p0 = 2.0, x0 = -3.0, t = 1.5;
    GridState s(eps, grid, Space::Position, 1);
    const auto x = grid.positions();
    for (std::size_t j = 0; j < x.size(); ++j)
        s[0][j] = std::exp(-(x[j] - x0) * (x[j] - x0) / (2.0 * eps * sigma * sigma)) *
                  std::polar(1.0, p0 * (x[j] - x0) / eps);
    const GridState out = propagate({eps, 0.0, t, 50, grid, {SurfaceKind::LinearUpper, 0.0, 0.0}}, paper, s);
    const cplx w = sigma * sigma + cplx(0.0, t);
    double err = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double y = x[j] - x0 - p0 * t;
        const cplx exact = std::sqrt(sigma * sigma / w) * std::exp(-y * y / (2.0 * eps * w)) *
                           std::polar(1.0, (p0 * (x[j] - x0) - 0.5 * p0 * p0 * t) / eps);
        err = std::max(err, std::abs(out[0][j] - exact));
    }
    CHECK(err < 1e-8);
}

TEST_CASE("unitarity, identity and time reversal") {
    const GridState start = adiabatic_transform(two_level(paper_packet()), paper);
    const GridState fwd = propagate({eps, -0.5, 0.5, 200, {}, {SurfaceKind::CoupledDiabatic}}, paper, start);
    CHECK(fwd.norm() == doctest::Approx(start.norm()).epsilon(1e-12));
    const GridState back = propagate({eps, 0.5, -0.5, 200, {}, {SurfaceKind::CoupledDiabatic}}, paper, fwd);
    CHECK(distance(back, start) < 1e-10);

    const GridState same = propagate({eps, 0.3, 0.3, 5, {}, {SurfaceKind::CoupledDiabatic}}, paper, start);
    CHECK(distance(same, start) == 0.0);

    for (auto kind : {SurfaceKind::UpperAdiabatic, SurfaceKind::LowerAdiabatic}) {
        const GridState one = paper_packet();
        const GridState out = propagate({eps, 0.0, 1.0, 100, {}, {kind}}, paper, one);
        CHECK(out.norm() == doctest::Approx(one.norm()).epsilon(1e-12));
    }
}

TEST_CASE("second order in time") {
    const GridState start = adiabatic_transform(two_level(paper_packet()), paper);
    auto run = [&](int n) { return propagate({eps, -1.0, 1.0, n, {}, {SurfaceKind::CoupledDiabatic}}, paper, start); };
    const GridState fine = run(1600);
    const double e1 = distance(run(50), fine), e2 = distance(run(100), fine);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("adiabatic transform") {
    // X = 0, Z = 1: theta = 0 and U0 = diag(1, -1)
    const DiabaticPotential flat(SeriesPotential{{0.0}, {1.0}, {}, 0.0, 1.0});
    const Grid grid{256, -5.0, 5.0};
    GridState s(eps, grid, Space::Position, 2);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n;
    for (auto& c : s.components)
        for (auto& v : c) v = {n(rng), n(rng)};
    const GridState t = adiabatic_transform(s, flat);
    for (std::size_t j = 0; j < 256; ++j) {
        CHECK(t[0][j] == s[0][j]);
        CHECK(t[1][j] == -s[1][j]);
    }
    CHECK(distance(adiabatic_transform(adiabatic_transform(s, paper), paper), s) < 1e-14);

    // an upper-level state carries energy <rho + d>, by per-point eigendecomposition
    GridState up(eps, grid, Space::Position, 2);
    const auto x = grid.positions();
    for (std::size_t j = 0; j < x.size(); ++j) up[0][j] = std::exp(-x[j] * x[j]) * cplx(n(rng), n(rng));
    const GridState dia = adiabatic_transform(up, paper);
    double e_dia = 0.0, e_oracle = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double X = paper.x_entry(x[j]), Z = paper.z_entry(x[j]), d = paper.trace(x[j]);
        Eigen::Matrix2d v;
        v << d + Z, X, X, d - Z;
        const Eigen::Vector2cd psi(dia[0][j], dia[1][j]);
        e_dia += (psi.adjoint() * v.cast<cplx>() * psi)(0, 0).real();
        e_oracle += std::norm(up[0][j]) * Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(v).eigenvalues()[1];
    }
    CHECK(e_dia == doctest::Approx(e_oracle).epsilon(1e-10));
}

TEST_CASE("Avron-Herbst against split-step") {
    const Grid grid;
    const GridState mom = packet_state(normalize(Packet(GaussianPacket{1.0, 5.0, 0.25, 0.0}), eps), grid, eps);
    for (double s : {0.05, 0.1, 0.2}) {
        for (auto [branch, kind] : {std::pair{Branch::Upper, SurfaceKind::LinearUpper},
                                    std::pair{Branch::Lower, SurfaceKind::LinearLower}}) {
            const GridState ah = avron_herbst(mom, s, branch, 0.5, 1.0);
            const GridState ss = propagate({eps, 0.0, s, static_cast<int>(20000 * s), grid, {kind, 0.5, 1.0}}, paper, mom);
            CHECK(relative_l2_error(ah[0], ss[0]) < 1e-8);
        }
    }
    // lambda = 0: a pure phase
    const GridState ph = avron_herbst(mom, 0.3, Branch::Upper, 0.5, 0.0);
    const auto k = mom.axis();
    double err = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j)
        err = std::max(err, std::abs(ph[0][j] - mom[0][j] * std::polar(1.0, -(k[j] * k[j] + 1.0) * 0.3 / (2.0 * eps))));
    CHECK(err < 1e-13);
    CHECK(relative_l2_error(avron_herbst(mom, 0.0, Branch::Lower, 0.5, 1.0)[0], mom[0]) < 1e-15);

    // the analytic-packet path agrees with the grid path
    const Packet p = normalize(Packet(GaussianPacket{1.0, 5.0, 0.25, 0.0}), eps);
    const auto exact = avron_herbst(p, k, 0.1, Branch::Upper, 0.5, 1.0, eps);
    CHECK(relative_l2_error(avron_herbst(mom, 0.1, Branch::Upper, 0.5, 1.0)[0], exact) < 1e-10);

    CHECK_THROWS_AS(avron_herbst(mom, 40.0, Branch::Upper, 0.5, 1.0), Error);
}

TEST_CASE("evolution to the crossing") {
    const GridState centred = paper_packet();
    CHECK(evolve_to_crossing(centred, paper, 0.0, 1.0).t0 == 0.0);

    // constant gap: <X>(t) = x0 + p0 t
    const DiabaticPotential flat(SeriesPotential{{0.5}, {0.0}, {}, 0.0, 1.0});
    const Grid grid{4096, -20.0, 20.0};
    GridState s(eps, grid, Space::Position, 1);
    const auto x = grid.positions();
    for (std::size_t j = 0; j < x.size(); ++j)
        s[0][j] = std::exp(-(x[j] + 4.0) * (x[j] + 4.0) / (2.0 * eps)) * std::polar(1.0, 3.0 * x[j] / eps);
    const auto r = evolve_to_crossing(s, flat, 1.0, 5.0, 0.01, 1e-9);
    CHECK(r.t0 == doctest::Approx(5.0 / 3.0).epsilon(1e-6));

    // from phi at -T on the paper potential
    const GridState early =
        propagate({eps, 0.0, -4.0, 500, {}, {SurfaceKind::UpperAdiabatic}}, paper, paper_packet());
    const auto c = evolve_to_crossing(early, paper, 0.0, 6.0, 0.008);
    CHECK(c.t0 == doctest::Approx(4.0).epsilon(1e-3));
    CHECK(std::abs(c.mean_x) < 1e-6);

    CHECK_THROWS_AS(evolve_to_crossing(early, paper, 0.0, 1.0), Error);
}
