#include "tiltcross/recursions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "tiltcross/error.hpp"

namespace tiltcross {

namespace {

constexpr cplx I{0.0, 1.0};

/// C-infinity step: 0 at t <= 0, 1 at t >= 1.
double planck_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return 1.0 / (1.0 + std::exp(1.0 / t - 1.0 / (1.0 - t)));
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

SpectralCalculus::SpectralCalculus(Grid grid, double taper_fraction)
    : grid_(grid), plan_(std::make_shared<FftPlan>(grid.n_points)) {
    grid_.validate();
    if (!(taper_fraction > 0.0 && taper_fraction < 0.5))
        throw Error(ErrorCode::InvalidArgument, "taper_fraction must lie in (0, 0.5)");
    const auto n = static_cast<Eigen::Index>(grid_.n_points);
    x_.resize(n);
    taper_.resize(n);
    wavenumber_.resize(n);
    const double width = taper_fraction * grid_.length();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double x = grid_.x(static_cast<std::size_t>(j));
        x_[j] = x;
        taper_[j] = planck_step((x - grid_.x_min) / width) * planck_step((grid_.x_max - x) / width);
        const double m = j < n / 2 ? static_cast<double>(j) : static_cast<double>(j - n);
        wavenumber_[j] = j == n / 2 ? 0.0 : 2.0 * std::numbers::pi * m / grid_.length();
    }
}

Eigen::ArrayXcd SpectralCalculus::derivative(const Eigen::ArrayXcd& f) const {
    Eigen::ArrayXcd g = f * taper_;
    std::span<cplx> data(g.data(), static_cast<std::size_t>(g.size()));
    plan_->forward(data);
    // Drop every mode beyond the last one above the rounding floor.
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * g.abs().maxCoeff();
    const Eigen::Index n = g.size();
    Eigen::Index keep = 0;
    for (Eigen::Index j = 0; j < n; ++j)
        if (std::abs(g[j]) > floor) keep = std::max(keep, j < n / 2 ? j : n - j);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index m = j < n / 2 ? j : n - j;
        g[j] = m > keep ? cplx(0.0) : g[j] * I * wavenumber_[j] / static_cast<double>(n);
    }
    plan_->backward(data);
    return g;
}

Eigen::ArrayXcd SpectralCalculus::antiderivative(const Eigen::ArrayXcd& f) const {
    Eigen::ArrayXcd g = f;
    std::span<cplx> data(g.data(), static_cast<std::size_t>(g.size()));
    plan_->forward(data);
    const Eigen::Index n = g.size();
    const cplx mean = g[0] / static_cast<double>(n);
    g[0] = 0.0;
    for (Eigen::Index j = 1; j < n; ++j)
        g[j] = wavenumber_[j] == 0.0 ? cplx(0.0) : g[j] / (I * wavenumber_[j] * static_cast<double>(n));
    plan_->backward(data);
    const cplx g0 = g[0];
    return g - g0 + mean * (x_ - grid_.x_min);
}

double SpectralCalculus::high_band_fraction(const Eigen::ArrayXcd& f) const {
    Eigen::ArrayXcd g = f * taper_;
    std::span<cplx> data(g.data(), static_cast<std::size_t>(g.size()));
    plan_->forward(data);
    const Eigen::Index n = g.size();
    double total = 0.0, high = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double e = std::norm(g[j]);
        total += e;
        const Eigen::Index m = j < n / 2 ? j : n - j;
        if (4 * m >= 3 * (n / 2)) high += e;
    }
    return total > 0.0 ? high / total : 0.0;
}

namespace {

struct BaseFunctions {
    Eigen::ArrayXd x, rho, theta, theta_p, d;
    Eigen::ArrayXd rho_p, d_p;
};

BaseFunctions base_functions(const DiabaticPotential& pot, const SpectralCalculus& calc) {
    BaseFunctions b;
    b.x = calc.positions();
    const auto n = b.x.size();
    std::vector<double> xs(b.x.data(), b.x.data() + n);
    const auto ad = eval_adiabatic(pot, xs);
    b.rho.resize(n);
    b.theta.resize(n);
    b.theta_p.resize(n);
    b.d.resize(n);
    b.rho_p.resize(n);
    b.d_p.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double x = b.x[j];
        const auto e = pot.entries(x);
        const auto de = pot.derivatives(x);
        b.rho[j] = ad[static_cast<std::size_t>(j)].rho;
        b.theta[j] = ad[static_cast<std::size_t>(j)].theta;
        b.d[j] = ad[static_cast<std::size_t>(j)].d;
        b.theta_p[j] = theta_prime(pot, x).real();
        b.rho_p[j] = (e.x.real() * de.x.real() + e.z.real() * de.z.real()) / b.rho[j];
        b.d_p[j] = de.d.real();
    }
    return b;
}

void check_smooth(const SpectralCalculus& calc, const Eigen::ArrayXcd& f, double threshold, const char* what,
                  int level) {
    const double frac = calc.high_band_fraction(f);
    if (!(frac <= threshold))
        throw Error(ErrorCode::SmoothnessLost, std::string(what) + " at level " + std::to_string(level) +
                                                   " has high-band fraction " + std::to_string(frac));
}

DerivativeCoeffs derivative_coeffs(const BaseFunctions& b, const SpectralCalculus& calc, int n_max,
                                   double threshold) {
    DerivativeCoeffs out;
    out.x = b.x;
    const auto tp = b.theta_p.cast<cplx>();
    out.a.push_back(b.rho.cast<cplx>());
    out.b.push_back(Eigen::ArrayXcd::Zero(b.x.size()));
    out.c.push_back(b.d.cast<cplx>());
    if (n_max >= 1) {
        // The first level is analytic; the window need not be periodic in rho or d.
        out.a.push_back(b.rho_p.cast<cplx>());
        out.b.push_back(-tp * b.rho);
        out.c.push_back(b.d_p.cast<cplx>());
    }
    for (int n = 1; n < n_max; ++n) {
        const auto& an = out.a[static_cast<std::size_t>(n)];
        const auto& bn = out.b[static_cast<std::size_t>(n)];
        const auto& cn = out.c[static_cast<std::size_t>(n)];
        check_smooth(calc, an, threshold, "a", n);
        check_smooth(calc, bn, threshold, "b", n);
        check_smooth(calc, cn, threshold, "c", n);
        Eigen::ArrayXcd a_next = calc.derivative(an) + tp * bn;
        Eigen::ArrayXcd b_next = calc.derivative(bn) - tp * an;
        Eigen::ArrayXcd c_next = calc.derivative(cn);
        out.a.push_back(std::move(a_next));
        out.b.push_back(std::move(b_next));
        out.c.push_back(std::move(c_next));
    }
    return out;
}

}  // namespace

DerivativeCoeffs potential_derivative_coeffs(const DiabaticPotential& pot, int n_max, const RecursionConfig& cfg) {
    if (n_max < 0 || n_max > 12) throw Error(ErrorCode::InvalidArgument, "n_max must lie in [0, 12]");
    const SpectralCalculus calc(cfg.grid, cfg.taper_fraction);
    return derivative_coeffs(base_functions(pot, calc), calc, n_max, cfg.smoothness_threshold);
}

MatrixParts reconstruct_derivative(const DiabaticPotential& pot, const DerivativeCoeffs& coeffs, int n) {
    if (n < 0 || n >= static_cast<int>(coeffs.a.size()))
        throw Error(ErrorCode::InvalidArgument, "derivative order not in the coefficient set");
    std::vector<double> xs(coeffs.x.data(), coeffs.x.data() + coeffs.x.size());
    const auto ad = eval_adiabatic(pot, xs);
    Eigen::ArrayXd c(coeffs.x.size()), s(coeffs.x.size());
    for (Eigen::Index j = 0; j < coeffs.x.size(); ++j) {
        c[j] = std::cos(ad[static_cast<std::size_t>(j)].theta);
        s[j] = std::sin(ad[static_cast<std::size_t>(j)].theta);
    }
    const auto& a = coeffs.a[static_cast<std::size_t>(n)];
    const auto& b = coeffs.b[static_cast<std::size_t>(n)];
    return {a * s - b * c, a * c + b * s, coeffs.c[static_cast<std::size_t>(n)]};
}

namespace {

int slot(char which) {
    switch (which) {
        case 'x': return 0;
        case 'y': return 1;
        case 'z': return 2;
        case 'w': return 3;
        default: throw Error(ErrorCode::InvalidArgument, std::string("unknown coefficient '") + which + "'");
    }
}

}  // namespace

bool CouplingTable::structural_zero(char which, int n, int m) {
    if (m % 2 != 0) return true;
    if (which == 'y') return n % 2 == 0;
    return n % 2 != 0;
}

const Eigen::ArrayXcd& CouplingTable::coeff(char which, int n, int m) const {
    const int s = slot(which);
    if (n < 1 || n > n_max_ || m < 0 || m > n || structural_zero(which, n, m)) return zero_;
    return entries_[s][static_cast<std::size_t>(n)][static_cast<std::size_t>(m)];
}

Eigen::ArrayXcd CouplingTable::kappa_minus(int n, int m) const {
    return -2.0 * rho_ * (coeff('x', n, m) - coeff('y', n, m));
}

void CouplingTable::write_csv(std::ostream& os) const {
    os << "coeff,n,m,q,re,im\n";
    os.precision(17);
    for (char w : {'x', 'y', 'z', 'w'})
        for (int n = 1; n <= n_max_; ++n)
            for (int m = 0; m <= n; ++m) {
                if (structural_zero(w, n, m)) continue;
                const auto& v = coeff(w, n, m);
                for (Eigen::Index j = 0; j < v.size(); ++j)
                    os << w << ',' << n << ',' << m << ',' << grid_x_[j] << ',' << v[j].real() << ','
                       << v[j].imag() << '\n';
            }
}

CouplingTable coupling_coeffs(const DiabaticPotential& pot, int n_max, const RecursionConfig& cfg) {
    if (n_max < 1 || n_max > 8) throw Error(ErrorCode::InvalidArgument, "n_max must lie in [1, 8]");
    const SpectralCalculus calc(cfg.grid, cfg.taper_fraction);
    const BaseFunctions base = base_functions(pot, calc);
    const DerivativeCoeffs dv = derivative_coeffs(base, calc, n_max / 2 + 1, cfg.smoothness_threshold);
    const auto size = base.x.size();

    CouplingTable t;
    t.n_max_ = n_max;
    t.grid_x_ = base.x;
    t.rho_ = base.rho;
    t.zero_ = Eigen::ArrayXcd::Zero(size);
    for (auto& e : t.entries_) {
        e.assign(static_cast<std::size_t>(n_max) + 1, {});
        for (int n = 1; n <= n_max; ++n) e[static_cast<std::size_t>(n)].assign(static_cast<std::size_t>(n) + 1, t.zero_);
    }
    auto set = [&](char w, int n, int m, Eigen::ArrayXcd v) {
        t.entries_[slot(w)][static_cast<std::size_t>(n)][static_cast<std::size_t>(m)] = std::move(v);
    };
    auto get = [&](char w, int n, int m) -> const Eigen::ArrayXcd& { return t.coeff(w, n, m); };

    const Eigen::ArrayXcd tp = base.theta_p.cast<cplx>();
    const Eigen::ArrayXcd inv_2rho = (0.5 / base.rho).cast<cplx>();
    set('y', 1, 0, -I * tp * (0.25 / base.rho));

    // sum_{j=1}^{m/2} (2i)^{-j} C(n+1-m+j, j) * term(j, level n+1-j, index m-2j)
    auto coupling_sum = [&](int n, int m, auto&& term) {
        Eigen::ArrayXcd acc = Eigen::ArrayXcd::Zero(size);
        cplx factor = 1.0;
        for (int j = 1; j <= m / 2; ++j) {
            factor /= 2.0 * I;
            acc += factor * binomial(n + 1 - m + j, j) * term(j, n + 1 - j, m - 2 * j);
        }
        return acc;
    };
    auto a = [&](int j) -> const Eigen::ArrayXcd& { return dv.a[static_cast<std::size_t>(j)]; };
    auto b = [&](int j) -> const Eigen::ArrayXcd& { return dv.b[static_cast<std::size_t>(j)]; };
    auto c = [&](int j) -> const Eigen::ArrayXcd& { return dv.c[static_cast<std::size_t>(j)]; };

    for (int n = 1; n < n_max; ++n) {
        const int nn = n + 1;
        if (n % 2 == 1) {
            for (int m = 0; m <= nn; m += 2) {
                const auto& y = get('y', n, m);
                check_smooth(calc, y, cfg.smoothness_threshold, "y", n);
                const Eigen::ArrayXcd s = coupling_sum(n, m, [&](int j, int l, int i) -> Eigen::ArrayXcd {
                    return b(j) * get('z', l, i) - a(j) * get('x', l, i) + c(j) * get('y', l, i);
                });
                set('x', nn, m, -inv_2rho * (-I * calc.derivative(y) - 2.0 * s));
            }
            // Even level: z and w from their first-order equations, vanishing at x_min.
            for (int m = 0; m <= nn; m += 2) {
                const Eigen::ArrayXcd sz = coupling_sum(nn, m, [&](int j, int l, int i) -> Eigen::ArrayXcd {
                    return b(j) * get('y', l, i) + a(j) * get('w', l, i) + c(j) * get('z', l, i);
                });
                set('z', nn, m, calc.antiderivative(-tp * get('x', nn, m) + 2.0 * I * sz));
                const Eigen::ArrayXcd sw = coupling_sum(nn, m, [&](int j, int l, int i) -> Eigen::ArrayXcd {
                    return a(j) * get('z', l, i) + b(j) * get('x', l, i) + c(j) * get('w', l, i);
                });
                set('w', nn, m, calc.antiderivative(2.0 * I * sw));
            }
        } else {
            for (int m = 0; m <= nn; m += 2) {
                const auto& x = get('x', n, m);
                check_smooth(calc, x, cfg.smoothness_threshold, "x", n);
                const Eigen::ArrayXcd s = coupling_sum(n, m, [&](int j, int l, int i) -> Eigen::ArrayXcd {
                    return -a(j) * get('y', l, i) + b(j) * get('w', l, i) + c(j) * get('x', l, i);
                });
                set('y', nn, m, -inv_2rho * (-I * (calc.derivative(x) - tp * get('z', n, m)) - 2.0 * s));
            }
        }
    }
    return t;
}

std::vector<cplx> kappa_asymptotic(int n, std::span<const double> q_grid, const DiabaticPotential& pot,
                                   const StokesData& stokes) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "kappa_asymptotic needs n >= 1");
    double fact = 1.0;
    for (int i = 2; i < n; ++i) fact *= i;
    const cplx in = std::pow(I, n);
    const cplx td = stokes.tau_delta;
    std::vector<cplx> out(q_grid.size());
    for (std::size_t j = 0; j < q_grid.size(); ++j) {
        const double q = q_grid[j];
        const cplx tau = natural_scale(pot, q, stokes.x_c);
        const double rho = eval_adiabatic(pot, q).rho;
        const cplx bracket = I / std::pow(tau - std::conj(td), n) - I / std::pow(tau - td, n);
        out[j] = in / std::numbers::pi * rho * fact * bracket;
    }
    return out;
}

std::vector<cplx> coupling_fourier(int n, std::span<const double> k_grid, const StokesData& stokes, double eps) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "coupling_fourier needs n >= 1");
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
    const double delta = stokes.delta;
    const double pre = std::sqrt(2.0) * delta / std::sqrt(std::numbers::pi * eps) * std::pow(2.0 * delta, -n);
    std::vector<cplx> out(k_grid.size());
    for (std::size_t j = 0; j < k_grid.size(); ++j) {
        const double k = k_grid[j];
        const double decay = std::exp(-stokes.tau_c() * std::abs(k) / (2.0 * delta * eps));
        out[j] = I * pre * std::pow(k / eps, n - 1) * decay *
                 std::polar(1.0, -stokes.tau_r() * k / (2.0 * delta * eps));
    }
    return out;
}

}  // namespace tiltcross
