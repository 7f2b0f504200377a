#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tiltcross/error.hpp"
#include "tiltcross/packets.hpp"

using namespace tiltcross;
using std::numbers::pi;

namespace {

double sigma_c(double s) { return 1.0 / (2.0 * s * s); }

PacketSum paper_sum() {
    PacketSum s;
    s.terms = {GaussianPacket{1.0, 5.00, sigma_c(1.414), -0.0238}, GaussianPacket{1.0, 5.15, sigma_c(1.664), 0.0186},
               GaussianPacket{-1.0, 4.90, sigma_c(0.714), 0.0328}};
    return s;
}

}  // namespace

TEST_CASE("grid geometry") {
    const Grid g;
    CHECK(g.dx() == doctest::Approx(80.0 / 16384));
    const auto k = g.momenta(0.02);
    CHECK(k.front() == doctest::Approx(-12.8680).epsilon(1e-4));
    CHECK(k[8192] == 0.0);
    CHECK_THROWS_AS((Grid{1000, -1.0, 1.0}.validate()), Error);
}

TEST_CASE("Gaussian transform matches the closed form") {
    const double eps = 0.02, sigma = 0.7, p0 = 3.0, x0 = 1.5;
    const Grid grid{4096, -20.0, 20.0};
    GridState s(eps, grid, Space::Position, 1);
    const auto x = grid.positions();
    for (std::size_t j = 0; j < x.size(); ++j)
        s[0][j] = std::exp(-(x[j] - x0) * (x[j] - x0) / (2.0 * eps * sigma * sigma)) *
                  std::polar(1.0, p0 * (x[j] - x0) / eps);
    const GridState f = semiclassical_fourier(s);
    const auto k = f.axis();
    double err = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) {
        const cplx exact = sigma * std::exp(-sigma * sigma * (k[j] - p0) * (k[j] - p0) / (2.0 * eps)) *
                           std::polar(1.0, -k[j] * x0 / eps);
        err = std::max(err, std::abs(f[0][j] - exact));
    }
    CHECK(err < 1e-10);
}

TEST_CASE("transform round trip, Parseval and zero") {
    const Grid grid{2048, -20.0, 20.0};
    GridState s(0.02, grid, Space::Position, 2);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    const auto x = grid.positions();
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t j = 0; j < x.size(); ++j) s[c][j] = {0.0, 0.0};
    for (int m = 0; m < 12; ++m) {
        const double a = n(rng), b = n(rng), ctr = 6.0 * n(rng), w = 1.0 + std::abs(n(rng));
        for (std::size_t j = 0; j < x.size(); ++j)
            s[m % 2][j] += cplx(a, b) * std::exp(-(x[j] - ctr) * (x[j] - ctr) / w) * std::polar(1.0, 5.0 * a * x[j]);
    }
    const GridState f = semiclassical_fourier(s);
    CHECK(f.norm() == doctest::Approx(s.norm()).epsilon(1e-12));
    const GridState back = inverse_semiclassical_fourier(f);
    for (std::size_t c = 0; c < 2; ++c) CHECK(relative_l2_error(back[c], s[c]) < 1e-12);

    GridState zero(0.02, grid, Space::Position, 1);
    const GridState zf = semiclassical_fourier(zero);
    for (const auto& v : zf[0]) CHECK(v == cplx(0.0));
}

TEST_CASE("packet evaluation") {
    const double eps = 0.02;
    CHECK(eval_packet(Packet(GaussianPacket{1.0, 5.0, 0.25, 0.0}), 5.0, eps) == cplx(1.0));
    CHECK(eval_packet(Packet(HagedornPacket{GaussianPacket{1.0, 5.0, 0.25, 0.0}, 2}), 0.0, eps) == cplx(0.0));
    const GaussianPacket g{cplx(0.3, -0.2), 4.0, cplx(0.5, 0.1), 0.3};
    const double k = 4.2;
    const cplx direct = g.amplitude * std::exp(-g.c * (k - g.p0) * (k - g.p0) / eps) * std::polar(1.0, k * g.x_off / eps);
    CHECK(std::abs(eval_packet(Packet(g), k, eps) - direct) < 1e-15);
    CHECK(std::abs(eval_packet(Packet(HagedornPacket{g, 3}), k, eps) - k * k * k * direct) < 1e-13);

    // linearity, bit for bit with the same summation order
    const PacketSum s = paper_sum();
    for (double kk : {4.5, 4.9, 5.0, 5.3}) {
        cplx acc = 0.0;
        for (const auto& t : s.terms) acc += eval_term(t, kk, eps);
        CHECK(eval_packet(Packet(s), kk, eps) == acc);
    }
}

TEST_CASE("width conventions") {
    CHECK(width_to_c(parse_width_convention("c"), 0.25) == 0.25);
    CHECK(width_to_c(parse_width_convention("sigma_halfsq"), std::sqrt(2.0)) == doctest::Approx(0.25));
    CHECK(width_to_c(parse_width_convention("sigma_sq"), 2.0) == doctest::Approx(0.25));
    CHECK_THROWS_AS(parse_width_convention("fwhm"), Error);
}

TEST_CASE("normalization") {
    const double eps = 0.02;
    const Packet unit = normalize(Packet(GaussianPacket{1.0, 5.0, 0.25, 0.0}), eps);
    CHECK(packet_norm(unit, eps) == doctest::Approx(1.0).epsilon(1e-13));
    // closed form: int exp(-2 c k^2 / eps) dk = sqrt(pi eps / (2 c))
    const double a = std::pow(2.0 * 0.25 / (pi * eps), 0.25);
    CHECK(std::get<GaussianPacket>(unit).amplitude.real() == doctest::Approx(a).epsilon(1e-12));

    const Packet twice = normalize(Packet(GaussianPacket{2.0 * a, 5.0, 0.25, 0.0}), eps);
    CHECK(std::get<GaussianPacket>(twice).amplitude.real() == doctest::Approx(a).epsilon(1e-12));

    // 3-term sum, checked by a fine trapezoid sum of |phi|^2
    const Packet sum = normalize(Packet(paper_sum()), eps);
    double acc = 0.0;
    const double h = 1e-4;
    for (double k = 2.0; k <= 8.0; k += h) acc += std::norm(eval_packet(sum, k, eps)) * h;
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-9));
    const double amp = std::abs(gaussian_part(std::get<PacketSum>(sum).terms[0]).amplitude);
    CHECK(amp == doctest::Approx(1.01580568).epsilon(1e-7));

    CHECK_THROWS_AS(normalize(Packet(GaussianPacket{0.0, 5.0, 0.25, 0.0}), eps), Error);
}

TEST_CASE("grid refinement leaves the sampled norm unchanged") {
    const double eps = 0.02;
    const Packet p = normalize(Packet(GaussianPacket{1.0, 5.0, 0.25, 0.0}), eps);
    const double n1 = packet_state(p, Grid{16384, -40.0, 40.0}, eps).norm();
    const double n2 = packet_state(p, Grid{32768, -80.0, 80.0}, eps).norm();
    CHECK(std::abs(n1 - n2) < 1e-12);
}

TEST_CASE("edge mass and mean position") {
    const double eps = 0.02;
    const Grid grid{4096, -20.0, 20.0};
    GridState s(eps, grid, Space::Position, 1);
    const auto x = grid.positions();
    for (std::size_t j = 0; j < x.size(); ++j) s[0][j] = std::exp(-(x[j] - 2.0) * (x[j] - 2.0) / 0.1);
    CHECK(mean_position(s) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(edge_mass(s) < 1e-100);
    for (std::size_t j = 0; j < x.size(); ++j) s[0][j] = 1.0;
    CHECK(edge_mass(s, 0.05) == doctest::Approx(2.0 * 204.0 / 4096.0).epsilon(1e-12));
}
