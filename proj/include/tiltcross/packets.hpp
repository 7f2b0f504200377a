#pragma once

#include <complex>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "tiltcross/grid.hpp"

namespace tiltcross {

/// Momentum-space complex Gaussian
///   A exp(-c (k - p0)^2 / eps) exp(i k x_off / eps).
struct GaussianPacket {
    cplx amplitude = 1.0;
    double p0 = 5.0;
    cplx c = 0.25;
    double x_off = 0.0;
};

/// Monomial times Gaussian: k^degree * GaussianPacket(k).
struct HagedornPacket {
    GaussianPacket base;
    int degree = 0;
};

using PacketTerm = std::variant<GaussianPacket, HagedornPacket>;

struct PacketSum {
    std::vector<PacketTerm> terms;
};

using Packet = std::variant<GaussianPacket, HagedornPacket, PacketSum>;

/// How a width value in a config maps onto `c`.
enum class WidthConvention {
    C,             ///< value is c itself
    SigmaHalfSq,   ///< c = 1 / (2 sigma^2)
    SigmaSq,       ///< c = 1 / sigma^2
};

WidthConvention parse_width_convention(std::string_view tag);
std::string_view to_string(WidthConvention convention);
double width_to_c(WidthConvention convention, double value);

const GaussianPacket& gaussian_part(const PacketTerm& term);
int degree_of(const PacketTerm& term);

cplx eval_term(const PacketTerm& term, double k, double eps);
cplx eval_packet(const Packet& packet, double k, double eps);
std::vector<cplx> eval_packet(const Packet& packet, std::span<const double> k_grid, double eps);

/// Samples the packet on the momentum grid of `grid` as a one-component state.
GridState packet_state(const Packet& packet, const Grid& grid, double eps);

/// Momentum-space L2 norm by trapezoidal quadrature over the packet support.
double packet_norm(const Packet& packet, double eps);

/// Rescales every amplitude by the same real positive factor to unit norm.
Packet normalize(const Packet& packet, double eps);

/// Mean momentum under |phi^(k)|^2.
double mean_momentum(const Packet& packet, double eps);

}  // namespace tiltcross
