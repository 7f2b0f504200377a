// Independent reference computations shared by the tests. Nothing here calls
// into the library's numerical kernels.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

namespace oracle {

using cplx = std::complex<double>;

/// n-th derivative of an analytic f by the Cauchy integral over |z - x| = r.
template <class F>
cplx cauchy_derivative(F f, double x, int n, double r = 0.4, int m = 128) {
    cplx acc = 0.0;
    double fact = 1.0;
    for (int i = 2; i <= n; ++i) fact *= i;
    for (int j = 0; j < m; ++j) {
        const cplx w = std::polar(1.0, 2.0 * std::numbers::pi * j / m);
        acc += f(x + r * w) / std::pow(r * w, n);
    }
    return acc / double(m) * fact;
}

/// Adaptive Simpson on [a, b] for complex integrands.
inline cplx simpson(const std::function<cplx(double)>& f, double a, double b, double tol, int depth = 40) {
    struct Rec {
        const std::function<cplx(double)>& f;
        cplx run(double a, double b, cplx fa, cplx fm, cplx fb, cplx whole, double tol, int depth) const {
            const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const cplx flm = f(lm), frm = f(rm);
            const cplx left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const cplx right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            const cplx delta = left + right - whole;
            if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
            return run(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + run(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
        }
    } rec{f};
    const double m = 0.5 * (a + b);
    const cplx fa = f(a), fm = f(m), fb = f(b);
    return rec.run(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

/// Iterated adaptive Simpson over a rectangle.
inline cplx simpson_2d(const std::function<cplx(double, double)>& f, double a, double b, double c, double d,
                       double tol) {
    return simpson([&](double x) { return simpson([&](double y) { return f(x, y); }, c, d, tol / (b - a)); }, a, b,
                   tol);
}

/// Golden-section minimum of a unimodal f on [a, b].
inline double golden_min(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d, d = c, fd = fc;
            c = b - g * (b - a), fc = f(c);
        } else {
            a = c, c = d, fc = fd;
            d = a + g * (b - a), fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

/// Plain discrete sum  h / sqrt(2 pi eps) sum_j exp(-i k x_j / eps) f_j.
template <class Xs, class Fs>
cplx direct_fourier(const Xs& x, const Fs& f, double k, double eps, double h) {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) acc += std::polar(1.0, -k * x[j] / eps) * f[j];
    return acc * h / std::sqrt(2.0 * std::numbers::pi * eps);
}

}  // namespace oracle
