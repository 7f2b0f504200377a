#include "tiltcross/formula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tiltcross/error.hpp"
#include "tiltcross/quadrature.hpp"

namespace tiltcross {

namespace {

constexpr double kPi = std::numbers::pi;

double sgn(double v) { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace

OptimalOrder select_n0(double delta, double tau_c, double eps, double c, double p0) {
    if (!(tau_c > 0.0) || !(eps > 0.0) || !(c > 0.0) || p0 == 0.0 || delta < 0.0)
        throw Error(ErrorCode::InvalidArgument, "select_n0 needs tau_c, eps, c > 0, delta >= 0 and p0 != 0");
    const double s = sgn(p0);
    const double P = std::abs(p0);
    const double A = 4.0 * c * delta / tau_c;
    auto kof = [delta](double eta) { return std::sqrt(eta * eta + 4.0 * delta); };
    // eta - k written as -4 delta / (eta + k) to keep small gaps well conditioned
    auto residual = [&](double eta) {
        const double k = kof(eta);
        return -4.0 * delta / (eta + k) + k * A * (eta - P);
    };
    auto slope = [&](double eta) {
        const double k = kof(eta);
        return 4.0 * delta / (k * (eta + k)) + (eta / k) * A * (eta - P) + k * A;
    };

    double eta = P;
    if (delta > 0.0) {
        double lo = 0.2 * P;
        double hi = 5.0 * P;
        double rlo = residual(lo);
        double rhi = residual(hi);
        if ((rlo < 0.0) == (rhi < 0.0))
            throw Error(ErrorCode::NoSolution, "no sign change of the n0 residual on [0.2 p0, 5 p0]");
        // converged when the Newton step, not the residual, is below tol: the
        // residual carries rounding of order A p0 for very wide packets
        const double tol = 1e-12 * std::max(1.0, P);
        bool done = false;
        // Newton is the fixed-point map with optimal damping; fall back to
        // bisection whenever a step leaves the bracket.
        for (int it = 0; it < 200 && !done; ++it) {
            const double r = residual(eta);
            if (r == 0.0 || std::abs(r / slope(eta)) <= tol || hi - lo <= tol) {
                done = true;
                break;
            }
            if ((r < 0.0) == (rlo < 0.0)) {
                lo = eta;
                rlo = r;
            } else {
                hi = eta;
            }
            double next = eta - r / slope(eta);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            eta = next;
        }
        if (!done) throw Error(ErrorCode::NoSolution, "n0 iteration did not converge");
    }
    const double k = kof(eta);
    return {tau_c / (eps * k), s * k, s * eta};
}

AlphaVariant parse_alpha_variant(std::string_view s) {
    if (s == "full") return AlphaVariant::Full;
    if (s == "simplified") return AlphaVariant::Simplified;
    throw Error(ErrorCode::ConfigError, "variant must be full|simplified");
}

OffsetPlacement parse_offset_placement(std::string_view s) {
    if (s == "a10") return OffsetPlacement::A10;
    if (s == "a01") return OffsetPlacement::A01;
    if (s == "none") return OffsetPlacement::None;
    throw Error(ErrorCode::ConfigError, "offset placement must be a10|a01|none");
}

HagedornMode parse_hagedorn_mode(std::string_view s) {
    if (s == "leading") return HagedornMode::Leading;
    if (s == "hermite") return HagedornMode::Hermite;
    throw Error(ErrorCode::ConfigError, "hagedorn mode must be leading|hermite");
}

std::string_view to_string(AlphaVariant v) { return v == AlphaVariant::Full ? "full" : "simplified"; }

std::string_view to_string(OffsetPlacement v) {
    switch (v) {
        case OffsetPlacement::A10: return "a10";
        case OffsetPlacement::A01: return "a01";
        case OffsetPlacement::None: return "none";
    }
    return "a10";
}

std::string_view to_string(HagedornMode v) { return v == HagedornMode::Leading ? "leading" : "hermite"; }

double AlphaSet::margin() const { return (a11 * a11 / a20 - 4.0 * a02).real(); }

bool AlphaSet::integrable() const { return a20.real() < 0.0 && margin() > 0.0; }

double AlphaSet::expansion_parameter(double eps, double eta_star, double delta) const {
    // Stationary point of a20 e^2 + a10 e + a11 e s + a01 s + a02 s^2.
    const cplx det = 4.0 * a20 * a02 - a11 * a11;
    const cplx e = (a11 * a01 - 2.0 * a02 * a10) / det;
    return std::abs((e * e * eps + 2.0 * e * eta_star * std::sqrt(eps)) / (4.0 * delta));
}

AlphaSet alpha_coeffs(double k, double eps, const StokesData& st, const GaussianData& g, const OptimalOrder& order,
                      double sign_p, const FormulaOptions& options) {
    const double delta = st.delta;
    if (!(k * k > 4.0 * delta)) throw Error(ErrorCode::CutoffRegion, "alpha_coeffs requires k^2 > 4 delta");
    const double eta = sgn(sign_p) * std::sqrt(k * k - 4.0 * delta);
    const double se = std::sqrt(eps);
    const double lam = st.lambda;
    const double tc = st.tau_c();
    const double tr = st.tau_r();
    const double n0 = order.n0;
    const double kp = k + eta;
    const cplx I(0.0, 1.0);

    AlphaSet a;
    a.variant = options.variant;
    if (options.variant == AlphaVariant::Full) {
        a.a10 = (sgn(k) * tc + I * tr - eta * n0 * eps - 4.0 * g.c * delta * (eta - g.p0)) / (2.0 * delta * se) +
                se / kp;
        a.a01 = -2.0 * (n0 + 1.0) * se * lam / kp;
        a.a11 = -I * eta + 2.0 * (n0 + 1.0) * lam * eps / (kp * kp);
        if (options.alpha20 == Alpha20Form::Expanded)
            a.a20 = -n0 * eps * (2.0 * delta + eta * eta) / (8.0 * delta * delta) - g.c - eps / (2.0 * kp * kp);
        else
            a.a20 = -(2.0 * delta * n0 * eps + eta * eta) / (8.0 * delta * delta) - g.c - eps / (2.0 * kp * kp);
        a.a02 = -I * 2.0 * delta * lam / kp - 2.0 * (n0 + 1.0) * lam * lam * eps / (kp * kp);
    } else {
        const double ae = std::abs(eta);
        a.a20 = -tc * (2.0 * delta + eta * eta) / (8.0 * delta * delta * ae) - g.c;
        a.a10 = I * tr / (2.0 * delta * se);
        a.a11 = -I * eta;
        a.a01 = -2.0 * tc * lam / (se * kp * ae);
        a.a02 = -I * 2.0 * delta * lam / kp;
    }
    const cplx offset = I * g.x_rel / se;
    if (options.offset == OffsetPlacement::A10) a.a10 += offset;
    if (options.offset == OffsetPlacement::A01) a.a01 += offset;
    return a;
}

double phase_shift(double p0, const OptimalOrder& order, double eps, double lambda, double delta) {
    if (lambda == 0.0) return 0.0;
    const double a0 = std::sqrt(p0 * p0 + 4.0 * delta) + p0;
    const double m = order.n0 + 1.0;
    const double first = -(m * m * eps * lambda * a0 * delta) / (2.0 * m * m * lambda * lambda * eps * eps +
                                                                 2.0 * delta * delta * a0 * a0);
    const double second = -0.5 * std::atan(a0 * delta / (m * eps * lambda));
    return first + second + sgn(lambda * p0) * kPi / 4.0;
}

namespace {

/// sqrt(4 a20 a02 - a11^2) as the product of the two one-dimensional Gaussian
/// normalizations.
cplx root_factor(const AlphaSet& a) {
    return 2.0 * std::sqrt(-a.a20) * std::sqrt(a.a11 * a.a11 / (4.0 * a.a20) - a.a02);
}

cplx exponent(const AlphaSet& a) {
    const cplx num = a.a20 * a.a01 * a.a01 + a.a02 * a.a10 * a.a10 - a.a10 * a.a01 * a.a11;
    return num / (a.a11 * a.a11 - 4.0 * a.a20 * a.a02);
}

/// sum_j C(p,j) eps^{j/2} eta^{p-j} d^j/d a10^j applied to exp(E), divided by exp(E).
cplx hermite_sum(const AlphaSet& a, int p, double eta, double eps) {
    const cplx D = a.a11 * a.a11 - 4.0 * a.a20 * a.a02;
    const cplx u = (2.0 * a.a02 * a.a10 - a.a01 * a.a11) / D;
    const cplx w = 2.0 * a.a02 / D;
    cplx prev = 0.0;
    cplx cur = 1.0;
    cplx acc = 0.0;
    double binom = 1.0;
    const double se = std::sqrt(eps);
    for (int j = 0; j <= p; ++j) {
        acc += binom * std::pow(se, j) * std::pow(eta, p - j) * cur;
        const cplx next = u * cur + static_cast<double>(j) * w * prev;
        prev = cur;
        cur = next;
        binom = binom * static_cast<double>(p - j) / static_cast<double>(j + 1);
    }
    return acc;
}

struct TermContext {
    double eps;
    const StokesData* stokes;
    OptimalOrder order;
    double sign_p;
    FormulaOptions options;
};

/// Contribution of one term with the k-dependent common factors left out.
PointFlag term_value(const TermContext& ctx, const PacketTerm& term, double k, double eta, cplx& out, double& margin) {
    const auto& base = gaussian_part(term);
    const GaussianData gd{base.c, base.p0, base.x_off - ctx.stokes->x_c};
    const AlphaSet a = alpha_coeffs(k, ctx.eps, *ctx.stokes, gd, ctx.order, ctx.sign_p, ctx.options);
    margin = a.margin();
    if (!a.integrable()) return PointFlag::ConstraintViolated;
    if (!(a.expansion_parameter(ctx.eps, eta, ctx.stokes->delta) < 1.0)) return PointFlag::OutsideExpansion;
    // The overall minus sign is the one carried by the coupling integral.
    const cplx pre = -std::exp(exponent(a)) / (2.0 * root_factor(a));
    const int p = degree_of(term);
    cplx amplitude;
    if (p == 0 || ctx.options.hagedorn == HagedornMode::Leading) {
        amplitude = eval_term(term, eta, ctx.eps);
    } else {
        amplitude = eval_term(PacketTerm(base), eta, ctx.eps) * hermite_sum(a, p, eta, ctx.eps);
    }
    cplx phase = 1.0;
    if (ctx.options.phase_shift) {
        const double phi = phase_shift(base.p0, ctx.order, ctx.eps, ctx.stokes->lambda, ctx.stokes->delta);
        phase = std::polar(1.0, -phi);
    }
    out = pre * amplitude * phase;
    return PointFlag::Ok;
}

TransitionResult evaluate(double eps, const StokesData& st, std::span<const PacketTerm> terms, const OptimalOrder& order,
                          double sign_p, double p_ref, std::span<const double> k_grid, const FormulaOptions& options) {
    if (!(st.tau_c() > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau_c must be positive");
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
    TransitionResult res;
    res.k.assign(k_grid.begin(), k_grid.end());
    res.psi.assign(k_grid.size(), cplx(0.0));
    res.margin.assign(k_grid.size(), std::numeric_limits<double>::quiet_NaN());
    res.flags.assign(k_grid.size(), PointFlag::Cutoff);
    res.order = order;
    res.options = options;
    res.phi = options.phase_shift ? phase_shift(p_ref, order, eps, st.lambda, st.delta) : 0.0;
    const TermContext ctx{eps, &st, order, sign_p, options};
    const double delta = st.delta;
    const double decay = st.tau_c() / (2.0 * delta * eps);
    const double drift = st.tau_r() / (2.0 * delta * eps);
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
        const double k = k_grid[i];
        // Outgoing momenta on the far side of the gap from the incoming packet
        // lie outside the derivation and are treated like the cutoff.
        if (!(k * k > 4.0 * delta) || sgn(k) != sgn(sign_p)) continue;
        const double eta = sgn(sign_p) * std::sqrt(k * k - 4.0 * delta);
        cplx acc = 0.0;
        PointFlag flag = PointFlag::Ok;
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& term : terms) {
            cplx v;
            double m = 0.0;
            flag = term_value(ctx, term, k, eta, v, m);
            worst = std::min(worst, m);
            if (flag != PointFlag::Ok) break;
            acc += v;
        }
        res.margin[i] = worst;
        if (flag != PointFlag::Ok) {
            res.flags[i] = flag;
            continue;
        }
        const double dk = k - eta;
        const cplx common = (eta + k) * std::exp(-decay * std::abs(dk)) *
                            std::polar(1.0, -drift * dk - dk * st.x_c / eps);
        res.psi[i] = common * acc;
        res.flags[i] = PointFlag::Ok;
    }
    res.norm_sq = trapezoid_norm_sq(res.k, res.psi);
    return res;
}

}  // namespace

cplx gaussian_double_integral(const AlphaSet& a) {
    if (!a.integrable())
        throw Error(ErrorCode::ConstraintViolated, "Gaussian integral diverges (margin " + std::to_string(a.margin()) +
                                                       ", Re a20 " + std::to_string(a.a20.real()) + ")");
    return 2.0 * kPi / root_factor(a) * std::exp(exponent(a));
}

std::size_t TransitionResult::violations() const {
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), PointFlag::ConstraintViolated));
}

std::size_t TransitionResult::outside_expansion() const {
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), PointFlag::OutsideExpansion));
}

double trapezoid_norm_sq(std::span<const double> k, std::span<const cplx> psi) {
    if (k.size() != psi.size()) throw Error(ErrorCode::GridMismatch, "trapezoid_norm_sq size mismatch");
    double acc = 0.0;
    for (std::size_t i = 1; i < k.size(); ++i)
        acc += 0.5 * (k[i] - k[i - 1]) * (std::norm(psi[i]) + std::norm(psi[i - 1]));
    return acc;
}

TransitionResult transmitted_gaussian(double eps, const StokesData& stokes, const GaussianPacket& packet,
                                      std::span<const double> k_grid, const FormulaOptions& options) {
    const auto order = select_n0(stokes.delta, stokes.tau_c(), eps, packet.c.real(), packet.p0);
    const PacketTerm term(packet);
    return evaluate(eps, stokes, std::span(&term, 1), order, packet.p0, packet.p0, k_grid, options);
}

TransitionResult transmitted_hagedorn(double eps, const StokesData& stokes, const HagedornPacket& packet,
                                      std::span<const double> k_grid, const FormulaOptions& options) {
    if (packet.degree < 0) throw Error(ErrorCode::InvalidArgument, "Hagedorn degree must be non-negative");
    const auto& b = packet.base;
    const auto order = select_n0(stokes.delta, stokes.tau_c(), eps, b.c.real(), b.p0);
    const PacketTerm term(packet);
    return evaluate(eps, stokes, std::span(&term, 1), order, b.p0, b.p0, k_grid, options);
}

TransitionResult transmitted_sum(double eps, const StokesData& stokes, const PacketSum& packet,
                                 std::span<const double> k_grid, const FormulaOptions& options) {
    if (packet.terms.empty()) throw Error(ErrorCode::InvalidArgument, "PacketSum must be non-empty");
    if (packet.terms.size() == 1) {
        if (const auto* g = std::get_if<GaussianPacket>(&packet.terms[0]))
            return transmitted_gaussian(eps, stokes, *g, k_grid, options);
        return transmitted_hagedorn(eps, stokes, std::get<HagedornPacket>(packet.terms[0]), k_grid, options);
    }
    double num = 0.0;
    double den = 0.0;
    for (const auto& t : packet.terms) {
        const auto& g = gaussian_part(t);
        if (!(g.c.real() > 0.0)) throw Error(ErrorCode::InvalidArgument, "packet width requires Re(c) > 0");
        const double w = std::norm(g.amplitude);
        num += w;
        den += w / g.c.real();
    }
    if (!(num > 0.0)) throw Error(ErrorCode::ZeroNorm, "PacketSum has zero amplitudes");
    const double c_eff = num / den;
    const double p_mean = mean_momentum(Packet(packet), eps);
    const auto order = select_n0(stokes.delta, stokes.tau_c(), eps, c_eff, p_mean);
    return evaluate(eps, stokes, packet.terms, order, p_mean, p_mean, k_grid, options);
}

TransitionResult transmit(double eps, const StokesData& stokes, const Packet& packet, std::span<const double> k_grid,
                          const FormulaOptions& options) {
    return std::visit(
        [&](const auto& p) -> TransitionResult {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GaussianPacket>)
                return transmitted_gaussian(eps, stokes, p, k_grid, options);
            else if constexpr (std::is_same_v<T, HagedornPacket>)
                return transmitted_hagedorn(eps, stokes, p, k_grid, options);
            else
                return transmitted_sum(eps, stokes, p, k_grid, options);
        },
        packet);
}

std::vector<cplx> transmitted_quadrature(double eps, const StokesData& st, const Packet& packet,
                                         std::span<const double> k_grid, double half_width, int nodes) {
    if (st.lambda == 0.0)
        throw Error(ErrorCode::InvalidArgument, "the s integral degenerates at lambda = 0; use the closed form");
    const double p_mean = mean_momentum(packet, eps);
    double c_ref = 0.0;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, PacketSum>) {
                double num = 0.0, den = 0.0;
                for (const auto& t : p.terms) {
                    const auto& g = gaussian_part(t);
                    num += std::norm(g.amplitude);
                    den += std::norm(g.amplitude) / g.c.real();
                }
                c_ref = num / den;
            } else {
                c_ref = gaussian_part(PacketTerm(p)).c.real();
            }
        },
        packet);
    const auto order = select_n0(st.delta, st.tau_c(), eps, c_ref, p_mean);
    const double n = order.n0;
    const double se = std::sqrt(eps);
    const double delta = st.delta;
    const double lam = st.lambda;
    const cplx I(0.0, 1.0);
    const auto& rule = gauss_legendre(nodes);
    std::vector<cplx> out(k_grid.size(), cplx(0.0));
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
        const double k = k_grid[i];
        if (!(k * k > 4.0 * delta) || sgn(k) != sgn(p_mean)) continue;
        const double es = sgn(p_mean) * std::sqrt(k * k - 4.0 * delta);
        cplx acc = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double h = half_width * rule.nodes[q];
            const double kp = k + es + se * h;
            const double ratio = 1.0 - (h * h * eps + 2.0 * h * es * se) / (4.0 * delta);
            if (!(ratio > 0.0) || !(kp != 0.0)) continue;
            const cplx as = -2.0 * (n + 1.0) * lam * lam * eps / (kp * kp) - I * lam * (k - es) / 2.0 +
                            I * se * lam * h / 2.0;
            const cplx bs = -2.0 * lam * (n + 1.0) * se / kp - I * es * h - I * se * h * h / 2.0;
            const double gap = k - es - h * se;
            const cplx logs = n * std::log(ratio) + std::log(cplx(kp)) - st.tau_c() / (2.0 * delta * eps) * std::abs(gap) -
                              I * st.tau_r() / (2.0 * delta * eps) * gap;
            const cplx val = eval_packet(packet, es + se * h, eps) * std::sqrt(-kPi / as) *
                             std::exp(logs - bs * bs / (4.0 * as));
            acc += rule.weights[q] * half_width * val;
        }
        out[i] = -acc / (4.0 * kPi);
    }
    return out;
}

}  // namespace tiltcross
