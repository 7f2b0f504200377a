#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "tiltcross/grid.hpp"
#include "tiltcross/potential.hpp"

namespace tiltcross {

/// Spectral calculus on a periodic analysis grid. Inputs are multiplied by a
/// smooth taper over the outer `taper_fraction` of the window before each
/// derivative, and modes above the noise floor are discarded.
class SpectralCalculus {
public:
    explicit SpectralCalculus(Grid grid, double taper_fraction = 0.1);

    const Grid& grid() const noexcept { return grid_; }
    const Eigen::ArrayXd& positions() const noexcept { return x_; }
    const Eigen::ArrayXd& taper() const noexcept { return taper_; }

    Eigen::ArrayXcd derivative(const Eigen::ArrayXcd& f) const;
    /// F(x) = integral of f from x_min to x.
    Eigen::ArrayXcd antiderivative(const Eigen::ArrayXcd& f) const;
    /// Fraction of the spectral energy in the top quarter of the modes.
    double high_band_fraction(const Eigen::ArrayXcd& f) const;

private:
    Grid grid_;
    Eigen::ArrayXd x_;
    Eigen::ArrayXd taper_;
    Eigen::ArrayXd wavenumber_;
    std::shared_ptr<FftPlan> plan_;
};

struct RecursionConfig {
    Grid grid{2048, -40.0, 40.0};
    double taper_fraction = 0.1;
    /// SmoothnessLost once the high-band fraction of any level exceeds this.
    double smoothness_threshold = 1e-12;
};

/// a_n, b_n, c_n with d^n V = a_n sigma_z(q) + b_n sigma_x(q) + c_n.
struct DerivativeCoeffs {
    Eigen::ArrayXd x;
    std::vector<Eigen::ArrayXcd> a, b, c;
};

DerivativeCoeffs potential_derivative_coeffs(const DiabaticPotential& pot, int n_max,
                                             const RecursionConfig& cfg = {});

/// Entries of the matrix a sigma_z(q) + b sigma_x(q) + c, as (X, Z, d) parts.
struct MatrixParts {
    Eigen::ArrayXcd x, z, d;
};
MatrixParts reconstruct_derivative(const DiabaticPotential& pot, const DerivativeCoeffs& coeffs, int n);

/// The table x_n^m, y_n^m, z_n^m, w_n^m for 1 <= n <= n_max, 0 <= m <= n.
class CouplingTable {
public:
    int n_max() const noexcept { return n_max_; }
    const Eigen::ArrayXd& x() const noexcept { return grid_x_; }
    const Eigen::ArrayXd& rho() const noexcept { return rho_; }

    /// which: 'x', 'y', 'z' or 'w'. Returns zeros outside the table.
    const Eigen::ArrayXcd& coeff(char which, int n, int m) const;
    /// Whether the entry is a structural zero (never computed).
    static bool structural_zero(char which, int n, int m);

    /// kappa_n^-(p, q) coefficient of p^{n-m}: -2 rho (x_n^m - y_n^m).
    Eigen::ArrayXcd kappa_minus(int n, int m) const;

    void write_csv(std::ostream& os) const;

private:
    friend CouplingTable coupling_coeffs(const DiabaticPotential&, int, const RecursionConfig&);
    int n_max_ = 0;
    Eigen::ArrayXd grid_x_;
    Eigen::ArrayXd rho_;
    Eigen::ArrayXcd zero_;
    // entries_[which][n][m]
    std::vector<std::vector<Eigen::ArrayXcd>> entries_[4];
};

CouplingTable coupling_coeffs(const DiabaticPotential& pot, int n_max, const RecursionConfig& cfg = {});

/// (i^n / pi) rho (n-1)! (i / (tau - tau*)^n - i / (tau - tau_delta)^n).
std::vector<cplx> kappa_asymptotic(int n, std::span<const double> q_grid, const DiabaticPotential& pot,
                                   const StokesData& stokes);

/// i sqrt(2) delta / sqrt(pi eps) (2 delta)^{-n} (k/eps)^{n-1} e^{-tau_c |k| / (2 delta eps)} e^{-i tau_r k / (2 delta eps)}.
/// This is the semiclassical transform of kappa_asymptotic in the natural-scale
/// coordinate tau(q) / (2 delta), which agrees with q - x_c only at the crossing.
std::vector<cplx> coupling_fourier(int n, std::span<const double> k_grid, const StokesData& stokes, double eps);

}  // namespace tiltcross
