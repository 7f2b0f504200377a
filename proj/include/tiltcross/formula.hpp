#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "tiltcross/packets.hpp"
#include "tiltcross/potential.hpp"

namespace tiltcross {

struct OptimalOrder {
    double n0 = 0.0;
    double k0 = 0.0;
    double eta0 = 0.0;
};

/// Solves k = sqrt(eta^2 + 4 delta), eta = k (1 - 4 c delta (eta - p0) / tau_c)
/// and returns n0 = tau_c / (eps |k0|). Signs of k0, eta0 follow p0.
OptimalOrder select_n0(double delta, double tau_c, double eps, double c, double p0);

enum class AlphaVariant { Full, Simplified };
enum class OffsetPlacement { A10, A01, None };
enum class HagedornMode { Leading, Hermite };

/// alpha_{2,0} as printed carries eta*^2 without the n0 eps factor; the
/// default is the form that follows from the log expansions.
enum class Alpha20Form { Expanded, AsPrinted };

AlphaVariant parse_alpha_variant(std::string_view s);
OffsetPlacement parse_offset_placement(std::string_view s);
HagedornMode parse_hagedorn_mode(std::string_view s);
std::string_view to_string(AlphaVariant v);
std::string_view to_string(OffsetPlacement v);
std::string_view to_string(HagedornMode v);

struct FormulaOptions {
    AlphaVariant variant = AlphaVariant::Full;
    OffsetPlacement offset = OffsetPlacement::A10;
    bool phase_shift = true;
    HagedornMode hagedorn = HagedornMode::Leading;
    Alpha20Form alpha20 = Alpha20Form::Expanded;
};

struct AlphaSet {
    cplx a10, a01, a11, a20, a02;
    AlphaVariant variant = AlphaVariant::Full;

    /// Re(a11^2 / a20 - 4 a02); must be positive.
    double margin() const;
    bool integrable() const;
    /// |(eta^2 eps + 2 eta eta* sqrt(eps)) / (4 delta)| at the Gaussian centre;
    /// the log expansion behind the coefficients needs it below 1.
    double expansion_parameter(double eps, double eta_star, double delta) const;
};

/// Width and centre of the Gaussian factor seen by the alpha coefficients.
struct GaussianData {
    cplx c;
    double p0 = 0.0;
    double x_rel = 0.0;  ///< position offset relative to the crossing
};

/// Throws CutoffRegion if k^2 <= 4 delta.
AlphaSet alpha_coeffs(double k, double eps, const StokesData& stokes, const GaussianData& g,
                      const OptimalOrder& order, double sign_p, const FormulaOptions& options = {});

double phase_shift(double p0, const OptimalOrder& order, double eps, double lambda, double delta);

/// 2 pi / sqrt(4 a20 a02 - a11^2) * exp[(a20 a01^2 + a02 a10^2 - a10 a01 a11) / (a11^2 - 4 a20 a02)].
/// The square root is taken as 2 sqrt(-a20) sqrt(a11^2/(4 a20) - a02), i.e. the
/// eta integral first, which fixes the branch wherever the integral converges.
cplx gaussian_double_integral(const AlphaSet& a);

enum class PointFlag : std::uint8_t { Ok = 0, Cutoff = 1, ConstraintViolated = 2, OutsideExpansion = 3 };

struct TransitionResult {
    std::vector<double> k;
    std::vector<cplx> psi;
    std::vector<double> margin;  ///< NaN where cut off
    std::vector<PointFlag> flags;
    double norm_sq = 0.0;
    OptimalOrder order;
    double phi = 0.0;
    FormulaOptions options;

    std::size_t violations() const;
    std::size_t outside_expansion() const;
};

/// The transmitted lower-level wave function at the crossing time.
TransitionResult transmitted_gaussian(double eps, const StokesData& stokes, const GaussianPacket& packet,
                                      std::span<const double> k_grid, const FormulaOptions& options = {});
TransitionResult transmitted_hagedorn(double eps, const StokesData& stokes, const HagedornPacket& packet,
                                      std::span<const double> k_grid, const FormulaOptions& options = {});
/// One n0 for the whole sum, from the mean momentum and the effective width
/// c_eff = sum|A_j|^2 / sum(|A_j|^2 / Re c_j).
TransitionResult transmitted_sum(double eps, const StokesData& stokes, const PacketSum& packet,
                                 std::span<const double> k_grid, const FormulaOptions& options = {});
TransitionResult transmit(double eps, const StokesData& stokes, const Packet& packet,
                          std::span<const double> k_grid, const FormulaOptions& options = {});

/// Experimental: the s integral done in closed form and the eta integral by
/// Gauss-Legendre quadrature over |eta| <= half_width (rescaled units), for a
/// general packet. Requires lambda != 0. No phase shift is applied.
std::vector<cplx> transmitted_quadrature(double eps, const StokesData& stokes, const Packet& packet,
                                         std::span<const double> k_grid, double half_width = 6.0,
                                         int nodes = 6000);

/// Trapezoidal sum of |psi|^2 over a (possibly non-uniform) ascending grid.
double trapezoid_norm_sq(std::span<const double> k, std::span<const cplx> psi);

}  // namespace tiltcross
