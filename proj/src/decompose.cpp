#include "tiltcross/decompose.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <random>
#include <thread>

#include "tiltcross/error.hpp"

namespace tiltcross {

namespace {

constexpr int kPerTerm = 5;  // Re A, Im A, p, sigma, x

struct Window {
    std::vector<double> k;
    std::vector<cplx> data;
    double eps = 0.0;
    double data_norm = 0.0;
};

Window fit_window(const GridState& state) {
    if (state.space != Space::Momentum) throw Error(ErrorCode::InvalidArgument, "fit_gaussians expects a momentum-space state");
    if (state.n_components() != 1) throw Error(ErrorCode::InvalidArgument, "fit_gaussians expects one component");
    const auto ks = state.grid.momenta(state.eps);
    const auto& f = state[0];
    double peak = 0.0;
    for (const auto& v : f) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) throw Error(ErrorCode::ZeroNorm, "state is identically zero");
    std::size_t lo = f.size(), hi = 0;
    for (std::size_t j = 0; j < f.size(); ++j)
        if (std::abs(f[j]) >= 1e-10 * peak) {
            lo = std::min(lo, j);
            hi = std::max(hi, j);
        }
    const std::size_t pad = (hi - lo) / 4 + 4;
    lo = lo > pad ? lo - pad : 0;
    hi = std::min(f.size() - 1, hi + pad);
    Window w;
    w.eps = state.eps;
    w.k.assign(ks.begin() + static_cast<std::ptrdiff_t>(lo), ks.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    w.data.assign(f.begin() + static_cast<std::ptrdiff_t>(lo), f.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    double s = 0.0;
    for (const auto& v : w.data) s += std::norm(v);
    w.data_norm = std::sqrt(s);
    return w;
}

GaussianPacket make_term(const double* q) {
    const double sigma = q[3];
    return {cplx(q[0], q[1]), q[2], 1.0 / (2.0 * sigma * sigma), q[4]};
}

PacketSum to_packet(const Eigen::VectorXd& theta) {
    PacketSum s;
    for (Eigen::Index t = 0; t < theta.size() / kPerTerm; ++t) s.terms.emplace_back(make_term(theta.data() + t * kPerTerm));
    return s;
}

Eigen::VectorXd to_params(const PacketSum& packet) {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(packet.terms.size()) * kPerTerm);
    for (std::size_t t = 0; t < packet.terms.size(); ++t) {
        if (degree_of(packet.terms[t]) != 0) throw Error(ErrorCode::InvalidArgument, "only Gaussian terms can be refined");
        const auto& g = gaussian_part(packet.terms[t]);
        const auto i = static_cast<Eigen::Index>(t) * kPerTerm;
        theta.segment(i, kPerTerm) << g.amplitude.real(), g.amplitude.imag(), g.p0, sigma_of(g), g.x_off;
    }
    return theta;
}

/// Model values go through eval_packet so a reconstruction is bit-identical.
Eigen::VectorXd residual(const Window& w, const Eigen::VectorXd& theta) {
    const Packet model = to_packet(theta);
    const auto n = static_cast<Eigen::Index>(w.k.size());
    Eigen::VectorXd r(2 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const cplx d = eval_packet(model, w.k[static_cast<std::size_t>(j)], w.eps) - w.data[static_cast<std::size_t>(j)];
        r[2 * j] = d.real();
        r[2 * j + 1] = d.imag();
    }
    return r;
}

Eigen::MatrixXd jacobian(const Window& w, const Eigen::VectorXd& theta) {
    const auto n = static_cast<Eigen::Index>(w.k.size());
    const Eigen::Index terms = theta.size() / kPerTerm;
    Eigen::MatrixXd jac(2 * n, theta.size());
    for (Eigen::Index t = 0; t < terms; ++t) {
        const double* q = theta.data() + t * kPerTerm;
        GaussianPacket unit = make_term(q);
        const cplx amp = unit.amplitude;
        unit.amplitude = 1.0;
        const double sigma = q[3];
        const double c = unit.c.real();
        for (Eigen::Index j = 0; j < n; ++j) {
            const double k = w.k[static_cast<std::size_t>(j)];
            const cplx g = eval_term(unit, k, w.eps);
            const cplx f = amp * g;
            const double u = k - q[2];
            const cplx cols[kPerTerm] = {g, cplx(0.0, 1.0) * g, f * (2.0 * c * u / w.eps),
                                         f * (u * u / (w.eps * sigma * sigma * sigma)), f * cplx(0.0, k / w.eps)};
            for (int p = 0; p < kPerTerm; ++p) {
                jac(2 * j, t * kPerTerm + p) = cols[p].real();
                jac(2 * j + 1, t * kPerTerm + p) = cols[p].imag();
            }
        }
    }
    return jac;
}

void clamp_sigmas(Eigen::VectorXd& theta, const FitConfig& cfg) {
    for (Eigen::Index t = 0; t < theta.size() / kPerTerm; ++t) {
        double& s = theta[t * kPerTerm + 3];
        s = std::clamp(s, cfg.sigma_min, cfg.sigma_max);
    }
}

struct RunResult {
    Eigen::VectorXd theta;
    double cost = 0.0;
    int iterations = 0;
};

struct LeastSquares {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> jacobian;
    std::function<void(Eigen::VectorXd&)> project;
};

/// Projected Levenberg-Marquardt with Marquardt diagonal scaling.
RunResult levenberg_marquardt(const LeastSquares& ls, Eigen::VectorXd theta, int max_iter, double target) {
    ls.project(theta);
    Eigen::VectorXd r = ls.residual(theta);
    double cost = r.squaredNorm();
    double mu = 1e-3;
    double nu = 2.0;
    int it = 0;
    bool converged = false;
    double checkpoint = cost;
    for (; it < max_iter && cost > target && !converged; ++it) {
        // Stagnation: under 0.1% progress over 25 iterations.
        if (it > 0 && it % 25 == 0) {
            if (cost > (1.0 - 1e-3) * checkpoint) break;
            checkpoint = cost;
        }
        const Eigen::MatrixXd jac = ls.jacobian(theta, r);
        const Eigen::MatrixXd a = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        Eigen::VectorXd diag = a.diagonal();
        diag = diag.cwiseMax(1e-12 * std::max(diag.maxCoeff(), 1e-300));
        bool accepted = false;
        while (!accepted && mu < 1e30) {
            Eigen::MatrixXd lhs = a;
            lhs.diagonal() += mu * diag;
            Eigen::VectorXd trial = theta + lhs.ldlt().solve(-g);
            ls.project(trial);
            const Eigen::VectorXd rt = ls.residual(trial);
            const double ct = rt.squaredNorm();
            const Eigen::VectorXd taken = trial - theta;
            const double predicted = -(2.0 * taken.dot(g) + taken.dot(a * taken));
            if (std::isfinite(ct) && ct < cost) {
                const double ratio = predicted > 0.0 ? (cost - ct) / predicted : 1.0;
                const bool tiny = taken.norm() <= 1e-14 * (theta.norm() + 1e-14);
                const double gain = cost - ct;
                theta = std::move(trial);
                r = rt;
                cost = ct;
                mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * ratio - 1.0, 3));
                nu = 2.0;
                accepted = true;
                converged = tiny || gain <= 1e-15 * cost;
            } else {
                mu *= nu;
                nu *= 2.0;
            }
        }
        if (!accepted) break;
    }
    return {theta, cost, it};
}

double cost_target(const Window& w) { return std::pow(1e-14 * w.data_norm, 2); }

/// All five parameters per term, analytic Jacobian.
RunResult full_fit(const Window& w, const Eigen::VectorXd& theta, const FitConfig& cfg) {
    LeastSquares ls{[&](const Eigen::VectorXd& t) { return residual(w, t); },
                    [&](const Eigen::VectorXd& t, const Eigen::VectorXd&) { return jacobian(w, t); },
                    [&](Eigen::VectorXd& t) { clamp_sigmas(t, cfg); }};
    return levenberg_marquardt(ls, theta, cfg.max_iter, cost_target(w));
}

// Variable projection: (p, sigma, x) per term, amplitudes by linear least squares.
constexpr int kNonlinear = 3;

Eigen::MatrixXcd basis(const Window& w, const Eigen::VectorXd& nl) {
    const Eigen::Index terms = nl.size() / kNonlinear;
    Eigen::MatrixXcd g(static_cast<Eigen::Index>(w.k.size()), terms);
    for (Eigen::Index t = 0; t < terms; ++t) {
        const double* q = nl.data() + t * kNonlinear;
        const GaussianPacket unit{1.0, q[0], 1.0 / (2.0 * q[1] * q[1]), q[2]};
        for (Eigen::Index j = 0; j < g.rows(); ++j) g(j, t) = eval_term(unit, w.k[static_cast<std::size_t>(j)], w.eps);
    }
    return g;
}

Eigen::VectorXcd amplitudes(const Window& w, const Eigen::MatrixXcd& g) {
    const Eigen::Map<const Eigen::VectorXcd> d(w.data.data(), static_cast<Eigen::Index>(w.data.size()));
    return g.colPivHouseholderQr().solve(d);
}

Eigen::VectorXd projected_residual(const Window& w, const Eigen::VectorXd& nl) {
    const Eigen::MatrixXcd g = basis(w, nl);
    const Eigen::Map<const Eigen::VectorXcd> d(w.data.data(), static_cast<Eigen::Index>(w.data.size()));
    const Eigen::VectorXcd r = g * amplitudes(w, g) - d;
    Eigen::VectorXd out(2 * r.size());
    for (Eigen::Index j = 0; j < r.size(); ++j) {
        out[2 * j] = r[j].real();
        out[2 * j + 1] = r[j].imag();
    }
    return out;
}

Eigen::VectorXd expand(const Window& w, const Eigen::VectorXd& nl) {
    const Eigen::VectorXcd a = amplitudes(w, basis(w, nl));
    Eigen::VectorXd theta(a.size() * kPerTerm);
    for (Eigen::Index t = 0; t < a.size(); ++t)
        theta.segment(t * kPerTerm, kPerTerm) << a[t].real(), a[t].imag(), nl.segment(t * kNonlinear, kNonlinear);
    return theta;
}

RunResult projected_fit(const Window& w, const Eigen::VectorXd& nl, const FitConfig& cfg) {
    const double sqrt_eps = std::sqrt(w.eps);
    LeastSquares ls;
    ls.residual = [&](const Eigen::VectorXd& t) { return projected_residual(w, t); };
    ls.project = [&](Eigen::VectorXd& t) {
        for (Eigen::Index i = 1; i < t.size(); i += kNonlinear) t[i] = std::clamp(t[i], cfg.sigma_min, cfg.sigma_max);
    };
    ls.jacobian = [&](const Eigen::VectorXd& t, const Eigen::VectorXd& r0) {
        Eigen::MatrixXd jac(r0.size(), t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            const double scale = (i % kNonlinear == 2) ? sqrt_eps : std::abs(t[i]) + 1.0;
            const double h = 1e-7 * scale;
            Eigen::VectorXd tp = t;
            tp[i] += h;
            jac.col(i) = (projected_residual(w, tp) - r0) / h;
        }
        return jac;
    };
    return levenberg_marquardt(ls, nl, cfg.max_iter, cost_target(w));
}

/// Moment-based single-term guess for a momentum profile.
Eigen::VectorXd moment_guess(const Window& w, const std::vector<cplx>& f) {
    double m0 = 0.0, m1 = 0.0;
    std::size_t peak = 0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double e = std::norm(f[j]);
        m0 += e;
        m1 += e * w.k[j];
        if (std::abs(f[j]) > std::abs(f[peak])) peak = j;
    }
    const double mean = m1 / m0;
    double m2 = 0.0, slope = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        m2 += std::norm(f[j]) * (w.k[j] - mean) * (w.k[j] - mean);
        if (j > 0 && j + 1 < f.size()) {
            const double h = w.k[j + 1] - w.k[j - 1];
            slope += (std::conj(f[j]) * (f[j + 1] - f[j - 1])).imag() / h;
        }
    }
    const double var = m2 / m0;
    const double sigma = std::sqrt(2.0 * var / w.eps);
    const double x = w.eps * slope / m0;
    // Amplitude by projection onto the unit term.
    GaussianPacket unit{1.0, mean, 1.0 / (2.0 * sigma * sigma), x};
    cplx num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const cplx g = eval_term(unit, w.k[j], w.eps);
        num += std::conj(g) * f[j];
        den += std::norm(g);
    }
    const cplx amp = den > 0.0 ? num / den : cplx(0.0);
    Eigen::VectorXd q(kPerTerm);
    q << amp.real(), amp.imag(), mean, sigma, x;
    (void)peak;
    return q;
}

/// Single-term seed centred on the largest residual.
Eigen::VectorXd residual_peak_guess(const Window& w, const std::vector<cplx>& f) {
    Eigen::VectorXd q = moment_guess(w, f);
    std::size_t peak = 0;
    for (std::size_t j = 0; j < f.size(); ++j)
        if (std::abs(f[j]) > std::abs(f[peak])) peak = j;
    q[2] = w.k[peak];
    GaussianPacket unit{1.0, q[2], 1.0 / (2.0 * q[3] * q[3]), q[4]};
    cplx num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const cplx g = eval_term(unit, w.k[j], w.eps);
        num += std::conj(g) * f[j];
        den += std::norm(g);
    }
    const cplx amp = den > 0.0 ? num / den : cplx(0.0);
    q[0] = amp.real();
    q[1] = amp.imag();
    return q;
}

/// Random restart around a nonlinear parameter set; the last term moves most.
Eigen::VectorXd perturb(const Eigen::VectorXd& nl, std::mt19937_64& rng, double eps, double k_spread) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Eigen::VectorXd out = nl;
    const Eigen::Index terms = nl.size() / kNonlinear;
    for (Eigen::Index t = 0; t < terms; ++t) {
        double* q = out.data() + t * kNonlinear;
        const double scale = t + 1 == terms ? 1.0 : 0.2;
        q[0] += scale * k_spread * n01(rng);
        q[1] *= std::exp(0.5 * scale * n01(rng));
        q[2] += scale * std::sqrt(eps) * q[1] * n01(rng) * 0.2;
    }
    return out;
}

bool lexicographic_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

RunResult best_of(const Window& w, const std::vector<Eigen::VectorXd>& starts, const FitConfig& cfg) {
    // Starts are nonlinear parameter sets; results carry them too.
    std::vector<RunResult> results(starts.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < starts.size(); i = next++) results[i] = projected_fit(w, starts[i], cfg);
    };
    unsigned threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(starts.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
        const auto& r = results[i];
        const auto& b = results[best];
        if (r.cost < b.cost || (r.cost == b.cost && lexicographic_less(r.theta, b.theta))) best = i;
    }
    return results[best];
}

std::vector<cplx> residual_profile(const Window& w, const Eigen::VectorXd& theta) {
    const Packet model = to_packet(theta);
    std::vector<cplx> out(w.k.size());
    for (std::size_t j = 0; j < w.k.size(); ++j) out[j] = w.data[j] - eval_packet(model, w.k[j], w.eps);
    return out;
}

FitResult finish(const Window& w, Eigen::VectorXd theta, int iterations, const FitConfig& cfg) {
    FitResult res;
    res.iterations = iterations;
    // Merge pairs that collapsed onto each other.
    std::vector<Eigen::VectorXd> terms;
    for (Eigen::Index t = 0; t < theta.size() / kPerTerm; ++t) terms.push_back(theta.segment(t * kPerTerm, kPerTerm));
    for (std::size_t i = 0; i < terms.size(); ++i)
        for (std::size_t j = i + 1; j < terms.size();) {
            const auto d = (terms[i].tail<3>() - terms[j].tail<3>()).cwiseAbs();
            if (d.maxCoeff() <= 1e-6) {
                terms[i].head<2>() += terms[j].head<2>();
                terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(j));
                res.merged = true;
            } else {
                ++j;
            }
        }
    Eigen::VectorXd merged(static_cast<Eigen::Index>(terms.size()) * kPerTerm);
    for (std::size_t i = 0; i < terms.size(); ++i) merged.segment(static_cast<Eigen::Index>(i) * kPerTerm, kPerTerm) = terms[i];
    res.packet = to_packet(merged);
    res.residual = residual(w, merged).norm() / w.data_norm;
    res.above_tolerance = !(res.residual <= cfg.tolerance);
    return res;
}

void check_config(const FitConfig& cfg) {
    if (cfg.n_terms < 1) throw Error(ErrorCode::InvalidArgument, "n_terms must be >= 1");
    if (!(cfg.sigma_min > 0.0) || !(cfg.sigma_max > cfg.sigma_min))
        throw Error(ErrorCode::InvalidArgument, "variance bounds need 0 < sigma_min < sigma_max");
    if (cfg.max_iter < 1 || cfg.multistarts < 1) throw Error(ErrorCode::InvalidArgument, "max_iter and multistarts must be >= 1");
}

}  // namespace

double sigma_of(const GaussianPacket& g) { return std::sqrt(0.5 / g.c.real()); }

FitResult fit_gaussians(const GridState& state, const FitConfig& cfg) {
    check_config(cfg);
    if (static_cast<std::size_t>(cfg.n_terms) * 4 > state.grid.n_points / 8)
        throw Error(ErrorCode::InvalidArgument, "too many terms for the grid");
    const Window w = fit_window(state);
    Eigen::VectorXd best(0);  // nonlinear parameters of the current optimum
    int iterations = 0;
    double k_spread = 0.0;
    for (int stage = 1; stage <= cfg.n_terms; ++stage) {
        const auto rest = residual_profile(w, best.size() ? expand(w, best) : Eigen::VectorXd(0));
        const Eigen::VectorXd seed = stage == 1 ? moment_guess(w, rest) : residual_peak_guess(w, rest);
        if (stage == 1) k_spread = seed[3] * std::sqrt(w.eps);
        Eigen::VectorXd seeded(best.size() + kNonlinear);
        seeded << best, seed.tail<kNonlinear>();
        // Zero amplitude is admissible for the new term, so no stage can end
        // worse than the previous optimum.
        std::vector<Eigen::VectorXd> starts{seeded};
        std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(stage));
        while (static_cast<int>(starts.size()) < cfg.multistarts) starts.push_back(perturb(seeded, rng, w.eps, k_spread));
        const RunResult r = best_of(w, starts, cfg);
        best = r.theta;
        iterations += r.iterations;
    }
    const RunResult polished = full_fit(w, expand(w, best), cfg);
    iterations += polished.iterations;
    return finish(w, polished.theta, iterations, cfg);
}

FitResult refine_gaussians(const GridState& state, const PacketSum& initial, const FitConfig& cfg) {
    check_config(cfg);
    const Window w = fit_window(state);
    const RunResult r = full_fit(w, to_params(initial), cfg);
    return finish(w, r.theta, r.iterations, cfg);
}

}  // namespace tiltcross
