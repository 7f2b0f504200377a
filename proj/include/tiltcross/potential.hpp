#pragma once

#include <complex>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace tiltcross {

using cplx = std::complex<double>;

/// Z(x) = alpha tanh(x) + beta x^2 / cosh(x),  X(x) = delta_gap,  d(x) = lambda_tilt tanh(x).
struct ParametricTanh {
    double alpha = 0.5;
    double beta = -0.4;
    double delta_gap = 0.5;
    double lambda_tilt = 1.0;
};

/// Z(x) = slope x,  X(x) = delta_gap,  d(x) = 0.
struct LandauZenerLinear {
    double delta_gap = 0.5;
    double slope = 1.0;
};

/// Truncated power series about `center` for each entry; the caller declares the
/// strip |Im z| < strip_radius in which the series is trusted.
struct SeriesPotential {
    std::vector<double> x_coeffs;
    std::vector<double> z_coeffs;
    std::vector<double> d_coeffs;
    double center = 0.0;
    double strip_radius = 1.0;
};

struct Interval {
    double lo = -5.0;
    double hi = 5.0;
};

/// The real-symmetric diabatic matrix V = X sigma_x + Z sigma_z + d I with
/// entries that continue analytically into a strip around the real axis.
class DiabaticPotential {
public:
    using Kind = std::variant<ParametricTanh, LandauZenerLinear, SeriesPotential>;

    struct Entries {
        cplx x;
        cplx z;
        cplx d;
    };

    DiabaticPotential() = default;
    explicit DiabaticPotential(Kind kind);

    const Kind& kind() const noexcept { return kind_; }
    double strip_radius() const noexcept;

    Entries entries(cplx z) const;
    /// First derivatives (X', Z', d').
    Entries derivatives(cplx z) const;

    /// X^2 + Z^2, analytic in the strip.
    cplx rho_squared(cplx z) const;

    /// Real-axis values.
    double x_entry(double x) const { return entries(x).x.real(); }
    double z_entry(double x) const { return entries(x).z.real(); }
    double trace(double x) const { return entries(x).d.real(); }

    /// Throws InvalidArgument if X^2 + Z^2 vanishes on a sampled window.
    void check_no_real_crossing(Interval window, int samples = 4001) const;

private:
    Kind kind_ = ParametricTanh{};
};

struct AdiabaticPoint {
    double rho = 0.0;
    double theta = 0.0;
    double d = 0.0;
};

/// rho = sqrt(X^2+Z^2), theta = atan2(X, Z), d.
AdiabaticPoint eval_adiabatic(const DiabaticPotential& pot, double x);

/// Sweep version; theta is unwrapped by nearest-branch continuation.
std::vector<AdiabaticPoint> eval_adiabatic(const DiabaticPotential& pot, std::span<const double> xs);

/// theta'(x) = (X'Z - XZ') / (X^2+Z^2); valid at complex arguments.
cplx theta_prime(const DiabaticPotential& pot, cplx z);

double find_crossing(const DiabaticPotential& pot, Interval window);

struct LocalParams {
    double delta = 0.0;
    double d0 = 0.0;
    double lambda = 0.0;
};

LocalParams local_params(const DiabaticPotential& pot, double x_c);

cplx find_complex_zero(const DiabaticPotential& pot, double x_c);

/// tau(z) = 2 * integral of rho along the straight segment x_c -> z, with the
/// branch of rho continued from rho(x_c) > 0.
cplx natural_scale(const DiabaticPotential& pot, cplx z, double x_c);

struct StokesData {
    double x_c = 0.0;
    double delta = 0.0;
    double d0 = 0.0;
    double lambda = 0.0;
    cplx q_delta;
    cplx tau_delta;

    double tau_r() const noexcept { return tau_delta.real(); }
    double tau_c() const noexcept { return tau_delta.imag(); }
};

StokesData stokes_data(const DiabaticPotential& pot, Interval window);

/// Real solution of Re tau(q) = tau_r nearest x_c, if one exists in the window.
std::optional<double> transition_point(const DiabaticPotential& pot, const StokesData& stokes,
                                       Interval window);

}  // namespace tiltcross
