#include "tiltcross/packets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tiltcross/error.hpp"

namespace tiltcross {

WidthConvention parse_width_convention(std::string_view tag) {
    if (tag == "c") return WidthConvention::C;
    if (tag == "sigma_halfsq") return WidthConvention::SigmaHalfSq;
    if (tag == "sigma_sq") return WidthConvention::SigmaSq;
    throw Error(ErrorCode::ConfigError, "unknown width convention '" + std::string(tag) + "'");
}

std::string_view to_string(WidthConvention convention) {
    switch (convention) {
        case WidthConvention::C: return "c";
        case WidthConvention::SigmaHalfSq: return "sigma_halfsq";
        case WidthConvention::SigmaSq: return "sigma_sq";
    }
    return "c";
}

double width_to_c(WidthConvention convention, double value) {
    if (!(value > 0.0)) throw Error(ErrorCode::InvalidArgument, "width value must be positive");
    switch (convention) {
        case WidthConvention::C: return value;
        case WidthConvention::SigmaHalfSq: return 1.0 / (2.0 * value * value);
        case WidthConvention::SigmaSq: return 1.0 / (value * value);
    }
    return value;
}

const GaussianPacket& gaussian_part(const PacketTerm& term) {
    if (const auto* g = std::get_if<GaussianPacket>(&term)) return *g;
    return std::get<HagedornPacket>(term).base;
}

int degree_of(const PacketTerm& term) {
    if (const auto* h = std::get_if<HagedornPacket>(&term)) return h->degree;
    return 0;
}

namespace {

cplx eval_gaussian(const GaussianPacket& g, double k, double eps) {
    const double dk = k - g.p0;
    return g.amplitude * std::exp(-g.c * dk * dk / eps) * std::polar(1.0, k * g.x_off / eps);
}

struct Support {
    double lo;
    double hi;
};

Support term_support(const GaussianPacket& g, int degree, double eps) {
    if (!(g.c.real() > 0.0)) throw Error(ErrorCode::InvalidArgument, "packet width requires Re(c) > 0");
    const double sd = std::sqrt(eps / (2.0 * g.c.real()));
    const double reach = (14.0 + 2.0 * degree) * sd;
    return {g.p0 - reach, g.p0 + reach};
}

Support packet_support(const Packet& packet, double eps) {
    Support s{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    auto absorb = [&](const PacketTerm& t) {
        const auto ts = term_support(gaussian_part(t), degree_of(t), eps);
        s.lo = std::min(s.lo, ts.lo);
        s.hi = std::max(s.hi, ts.hi);
    };
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, PacketSum>) {
                if (p.terms.empty()) throw Error(ErrorCode::InvalidArgument, "PacketSum must be non-empty");
                for (const auto& t : p.terms) absorb(t);
            } else {
                absorb(PacketTerm(p));
            }
        },
        packet);
    return s;
}

constexpr int kQuadraturePoints = 8193;

}  // namespace

cplx eval_term(const PacketTerm& term, double k, double eps) {
    const cplx g = eval_gaussian(gaussian_part(term), k, eps);
    const int p = degree_of(term);
    return p == 0 ? g : std::pow(k, p) * g;
}

cplx eval_packet(const Packet& packet, double k, double eps) {
    return std::visit(
        [&](const auto& p) -> cplx {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, PacketSum>) {
                cplx acc = 0.0;
                for (const auto& t : p.terms) acc += eval_term(t, k, eps);
                return acc;
            } else {
                return eval_term(PacketTerm(p), k, eps);
            }
        },
        packet);
}

std::vector<cplx> eval_packet(const Packet& packet, std::span<const double> k_grid, double eps) {
    std::vector<cplx> out(k_grid.size());
    for (std::size_t i = 0; i < k_grid.size(); ++i) out[i] = eval_packet(packet, k_grid[i], eps);
    return out;
}

GridState packet_state(const Packet& packet, const Grid& grid, double eps) {
    grid.validate();
    GridState st(eps, grid, Space::Momentum, 1);
    const auto ks = grid.momenta(eps);
    st[0] = eval_packet(packet, ks, eps);
    return st;
}

double packet_norm(const Packet& packet, double eps) {
    const auto s = packet_support(packet, eps);
    const double h = (s.hi - s.lo) / (kQuadraturePoints - 1);
    double acc = 0.0;
    for (int i = 0; i < kQuadraturePoints; ++i) {
        const double w = (i == 0 || i == kQuadraturePoints - 1) ? 0.5 : 1.0;
        acc += w * std::norm(eval_packet(packet, s.lo + i * h, eps));
    }
    return std::sqrt(acc * h);
}

Packet normalize(const Packet& packet, double eps) {
    const double nrm = packet_norm(packet, eps);
    if (!(nrm > 0.0)) throw Error(ErrorCode::ZeroNorm, "cannot normalize a zero packet");
    auto scale_term = [nrm](PacketTerm t) {
        std::visit(
            [nrm](auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, GaussianPacket>)
                    x.amplitude /= nrm;
                else
                    x.base.amplitude /= nrm;
            },
            t);
        return t;
    };
    return std::visit(
        [&](const auto& p) -> Packet {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, PacketSum>) {
                PacketSum out;
                for (const auto& t : p.terms) out.terms.push_back(scale_term(t));
                return out;
            } else {
                return std::visit([](const auto& x) -> Packet { return x; }, scale_term(PacketTerm(p)));
            }
        },
        packet);
}

double mean_momentum(const Packet& packet, double eps) {
    const auto s = packet_support(packet, eps);
    const double h = (s.hi - s.lo) / (kQuadraturePoints - 1);
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < kQuadraturePoints; ++i) {
        const double k = s.lo + i * h;
        const double w = std::norm(eval_packet(packet, k, eps));
        num += k * w;
        den += w;
    }
    if (den == 0.0) throw Error(ErrorCode::ZeroNorm, "mean momentum of a zero packet");
    return num / den;
}

}  // namespace tiltcross
