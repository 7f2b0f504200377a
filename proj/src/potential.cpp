#include "tiltcross/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tiltcross/error.hpp"
#include "tiltcross/quadrature.hpp"

namespace tiltcross {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

cplx horner(const std::vector<double>& c, cplx u) {
    cplx acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * u + *it;
    return acc;
}

cplx horner_derivative(const std::vector<double>& c, cplx u) {
    cplx acc = 0.0;
    for (std::size_t k = c.size(); k-- > 1;) acc = acc * u + static_cast<double>(k) * c[k];
    return acc;
}

}  // namespace

DiabaticPotential::DiabaticPotential(Kind kind) : kind_(std::move(kind)) {
    std::visit(Overloaded{
                   [](const ParametricTanh& p) {
                       if (!(p.delta_gap > 0.0))
                           throw Error(ErrorCode::InvalidArgument, "ParametricTanh requires delta_gap > 0");
                   },
                   [](const LandauZenerLinear& p) {
                       if (!(p.delta_gap > 0.0) || p.slope == 0.0)
                           throw Error(ErrorCode::InvalidArgument,
                                       "LandauZenerLinear requires delta_gap > 0 and slope != 0");
                   },
                   [](const SeriesPotential& p) {
                       if (p.x_coeffs.empty() && p.z_coeffs.empty())
                           throw Error(ErrorCode::InvalidArgument, "SeriesPotential needs X or Z coefficients");
                       if (!(p.strip_radius > 0.0))
                           throw Error(ErrorCode::InvalidArgument, "SeriesPotential strip_radius must be > 0");
                   },
               },
               kind_);
}

double DiabaticPotential::strip_radius() const noexcept {
    return std::visit(Overloaded{
                          [](const ParametricTanh&) { return std::numbers::pi / 2.0; },
                          [](const LandauZenerLinear&) { return std::numeric_limits<double>::infinity(); },
                          [](const SeriesPotential& p) { return p.strip_radius; },
                      },
                      kind_);
}

DiabaticPotential::Entries DiabaticPotential::entries(cplx z) const {
    return std::visit(Overloaded{
                          [z](const ParametricTanh& p) {
                              const cplx th = std::tanh(z);
                              const cplx ch = std::cosh(z);
                              return Entries{p.delta_gap, p.alpha * th + p.beta * z * z / ch, p.lambda_tilt * th};
                          },
                          [z](const LandauZenerLinear& p) { return Entries{p.delta_gap, p.slope * z, 0.0}; },
                          [z](const SeriesPotential& p) {
                              const cplx u = z - p.center;
                              return Entries{horner(p.x_coeffs, u), horner(p.z_coeffs, u), horner(p.d_coeffs, u)};
                          },
                      },
                      kind_);
}

DiabaticPotential::Entries DiabaticPotential::derivatives(cplx z) const {
    return std::visit(Overloaded{
                          [z](const ParametricTanh& p) {
                              const cplx th = std::tanh(z);
                              const cplx ch = std::cosh(z);
                              const cplx sech2 = 1.0 / (ch * ch);
                              const cplx dz = p.alpha * sech2 + p.beta * (2.0 * z - z * z * th) / ch;
                              return Entries{0.0, dz, p.lambda_tilt * sech2};
                          },
                          [](const LandauZenerLinear& p) { return Entries{0.0, p.slope, 0.0}; },
                          [z](const SeriesPotential& p) {
                              const cplx u = z - p.center;
                              return Entries{horner_derivative(p.x_coeffs, u), horner_derivative(p.z_coeffs, u),
                                             horner_derivative(p.d_coeffs, u)};
                          },
                      },
                      kind_);
}

cplx DiabaticPotential::rho_squared(cplx z) const {
    const auto e = entries(z);
    return e.x * e.x + e.z * e.z;
}

void DiabaticPotential::check_no_real_crossing(Interval window, int samples) const {
    for (int i = 0; i < samples; ++i) {
        const double x = window.lo + (window.hi - window.lo) * i / (samples - 1);
        if (!(rho_squared(x).real() > 0.0))
            throw Error(ErrorCode::InvalidArgument, "potential has a real crossing at x = " + std::to_string(x));
    }
}

AdiabaticPoint eval_adiabatic(const DiabaticPotential& pot, double x) {
    const auto e = pot.entries(x);
    const double X = e.x.real();
    const double Z = e.z.real();
    return {std::hypot(X, Z), std::atan2(X, Z), e.d.real()};
}

std::vector<AdiabaticPoint> eval_adiabatic(const DiabaticPotential& pot, std::span<const double> xs) {
    std::vector<AdiabaticPoint> out;
    out.reserve(xs.size());
    for (double x : xs) {
        auto p = eval_adiabatic(pot, x);
        if (!out.empty()) {
            const double prev = out.back().theta;
            p.theta += 2.0 * std::numbers::pi * std::round((prev - p.theta) / (2.0 * std::numbers::pi));
        }
        out.push_back(p);
    }
    return out;
}

cplx theta_prime(const DiabaticPotential& pot, cplx z) {
    const auto e = pot.entries(z);
    const auto de = pot.derivatives(z);
    return (de.x * e.z - e.x * de.z) / (e.x * e.x + e.z * e.z);
}

double find_crossing(const DiabaticPotential& pot, Interval window) {
    if (!(window.hi > window.lo)) throw Error(ErrorCode::InvalidArgument, "empty search window");
    constexpr int kScan = 4001;
    const double h = (window.hi - window.lo) / (kScan - 1);
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kScan; ++i) {
        const double v = pot.rho_squared(window.lo + i * h).real();
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    if (best == 0 || best == kScan - 1)
        throw Error(ErrorCode::NoInteriorMinimum, "minimum of rho lies on the window boundary");

    // (rho^2)'/2 = X X' + Z Z' changes sign across the minimum.
    auto slope = [&pot](double x) {
        const auto e = pot.entries(x);
        const auto de = pot.derivatives(x);
        return (e.x * de.x + e.z * de.z).real();
    };
    double lo = window.lo + (best - 1) * h;
    double hi = window.lo + (best + 1) * h;
    double f_lo = slope(lo);
    double f_hi = slope(hi);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if (f_lo > 0.0 || f_hi < 0.0) {
        // Flat region where the scan could not resolve a bracket.
        return window.lo + best * h;
    }
    for (int iter = 0; iter < 200 && hi - lo > 0.0; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f_mid = slope(mid);
        if (f_mid == 0.0) return mid;
        if (f_mid < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return std::abs(slope(lo)) < std::abs(slope(hi)) ? lo : hi;
}

LocalParams local_params(const DiabaticPotential& pot, double x_c) {
    LocalParams out;
    out.delta = eval_adiabatic(pot, x_c).rho;
    out.d0 = pot.trace(x_c);
    constexpr double h = 1e-5;
    auto central = [&](double step) { return (pot.trace(x_c + step) - pot.trace(x_c - step)) / (2.0 * step); };
    out.lambda = (4.0 * central(0.5 * h) - central(h)) / 3.0;
    return out;
}

cplx find_complex_zero(const DiabaticPotential& pot, double x_c) {
    const double delta = eval_adiabatic(pot, x_c).rho;
    const double zprime = std::abs(pot.derivatives(x_c).z);
    const double im_guess = delta / std::max(zprime, 1e-8);
    const double strip = pot.strip_radius();
    const double scale = std::max(delta * delta, 1e-300);

    auto newton = [&](cplx q) -> std::optional<cplx> {
        for (int iter = 0; iter < 100; ++iter) {
            const auto e = pot.entries(q);
            const auto de = pot.derivatives(q);
            const cplx f = e.x * e.x + e.z * e.z;
            if (std::abs(f) <= 1e-13 * scale) return q;
            const cplx fp = 2.0 * (e.x * de.x + e.z * de.z);
            if (fp == 0.0) return std::nullopt;
            cplx step = f / fp;
            // Keep iterates inside the region where entries are trusted.
            const double cap = std::max(1.0, std::abs(q - x_c));
            if (std::abs(step) > cap) step *= cap / std::abs(step);
            q -= step;
            if (!std::isfinite(q.real()) || !std::isfinite(q.imag())) return std::nullopt;
        }
        const cplx f = pot.rho_squared(q);
        if (std::abs(f) <= 1e-13 * scale) return q;
        return std::nullopt;
    };

    const double base_im = std::isfinite(strip) ? std::min(im_guess, 0.95 * strip) : im_guess;
    const double reach = std::max(4.0 * base_im, 2.0);
    std::optional<cplx> best;
    const double im_factors[] = {1.0, 0.5, 0.75, 1.25, 1.5, 2.0};
    const double re_shifts[] = {0.0, -0.25, 0.25};
    for (double fi : im_factors) {
        for (double rs : re_shifts) {
            double im = base_im * fi;
            if (std::isfinite(strip)) im = std::min(im, 0.98 * strip);
            const cplx guess(x_c + rs * base_im, im);
            const auto root = newton(guess);
            if (!root || !(root->imag() > 0.0)) continue;
            if (std::abs(root->real() - x_c) > reach) continue;
            if (!best || root->imag() < best->imag() - 1e-12) best = root;
        }
    }
    if (!best) throw Error(ErrorCode::ZeroNotFound, "Newton iteration on X^2+Z^2 did not converge");
    if (best->imag() >= strip) throw Error(ErrorCode::ZeroOutsideStrip, "complex zero lies outside analyticity strip");
    return *best;
}

namespace {

/// One Gauss–Legendre pass of `order` nodes along x_c -> z with the endpoint
/// substitution t = 2s - s^2, which turns the square-root branch point at a
/// zero of rho into a smooth integrand.
cplx natural_scale_pass(const DiabaticPotential& pot, cplx z, double x_c, int order) {
    const auto& rule = gauss_legendre(order);
    const cplx seg = z - x_c;
    cplx rho_prev = std::sqrt(pot.rho_squared(x_c));
    if (rho_prev.real() < 0.0) rho_prev = -rho_prev;
    cplx xi_prev = x_c;
    cplx sum = 0.0;
    for (int i = 0; i < order; ++i) {
        const double s = 0.5 * (rule.nodes[i] + 1.0);
        const double t = 2.0 * s - s * s;
        const double dt_ds = 2.0 * (1.0 - s);
        const cplx xi = cplx(x_c) + t * seg;
        const auto e = pot.entries(xi);
        const cplx f = e.x * e.x + e.z * e.z;
        cplx r = std::sqrt(f);
        // Linear prediction from the previous node picks the branch.
        const auto de = pot.derivatives(xi_prev);
        const auto ep = pot.entries(xi_prev);
        cplx slope = 0.0;
        if (std::abs(rho_prev) > 1e-300) slope = (ep.x * de.x + ep.z * de.z) / rho_prev;
        const cplx predicted = rho_prev + slope * (xi - xi_prev);
        const double d_plus = std::abs(r - predicted);
        const double d_minus = std::abs(-r - predicted);
        if (d_minus < d_plus) r = -r;
        const double chosen = std::min(d_plus, d_minus);
        const double other = std::max(d_plus, d_minus);
        const double mag = std::abs(r);
        if (mag > 1e-6 * std::abs(rho_prev) + 1e-12 && chosen > 0.5 * other)
            throw Error(ErrorCode::BranchAmbiguity, "square-root branch of rho is ambiguous along the contour");
        sum += 0.5 * rule.weights[i] * dt_ds * r;
        rho_prev = r;
        xi_prev = xi;
    }
    return 2.0 * seg * sum;
}

}  // namespace

cplx natural_scale(const DiabaticPotential& pot, cplx z, double x_c) {
    if (z == cplx(x_c)) return 0.0;
    const double strip = pot.strip_radius();
    if (std::abs(z.imag()) >= strip)
        throw Error(ErrorCode::InvalidArgument, "natural_scale endpoint outside analyticity strip");
    int order = 64;
    cplx prev = natural_scale_pass(pot, z, x_c, order);
    while (order < 8192) {
        order *= 2;
        const cplx next = natural_scale_pass(pot, z, x_c, order);
        if (std::abs(next - prev) < 1e-12 * std::max(1.0, std::abs(next))) return next;
        prev = next;
    }
    throw Error(ErrorCode::QuadratureNotConverged, "natural_scale quadrature did not converge");
}

StokesData stokes_data(const DiabaticPotential& pot, Interval window) {
    pot.check_no_real_crossing(window);
    StokesData out;
    out.x_c = find_crossing(pot, window);
    const auto lp = local_params(pot, out.x_c);
    out.delta = lp.delta;
    out.d0 = lp.d0;
    out.lambda = lp.lambda;
    out.q_delta = find_complex_zero(pot, out.x_c);
    out.tau_delta = natural_scale(pot, out.q_delta, out.x_c);
    return out;
}

std::optional<double> transition_point(const DiabaticPotential& pot, const StokesData& stokes, Interval window) {
    // Re tau is strictly increasing on the real axis since rho > 0.
    auto residual = [&](double q) { return natural_scale(pot, q, stokes.x_c).real() - stokes.tau_r(); };
    double lo = window.lo;
    double hi = window.hi;
    double f_lo = residual(lo);
    double f_hi = residual(hi);
    if (f_lo > 0.0 || f_hi < 0.0) return std::nullopt;
    for (int iter = 0; iter < 100 && hi - lo > 1e-13; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = residual(mid);
        if (f_mid < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace tiltcross
