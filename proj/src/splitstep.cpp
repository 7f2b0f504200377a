#include "tiltcross/splitstep.hpp"

#include <cmath>
#include <numbers>

#include "tiltcross/error.hpp"

namespace tiltcross {

namespace {

bool is_coupled(const Surface& s) { return s.kind == SurfaceKind::CoupledDiabatic; }

/// One symmetric Strang step of fixed size on a fixed grid.
class Stepper {
public:
    Stepper(const Grid& grid, double eps, const Surface& surface, const DiabaticPotential& pot, double dt)
        : coupled_(is_coupled(surface)), plan_(grid.n_points) {
        const std::size_t n = grid.n_points;
        const double half = 0.5 * dt;
        kinetic_.resize(n);
        const double dkappa = 2.0 * std::numbers::pi / grid.length();
        for (std::size_t m = 0; m < n; ++m) {
            const auto signed_m = m < n / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(n);
            const double k = eps * dkappa * signed_m;
            kinetic_[m] = std::polar(1.0 / static_cast<double>(n), -dt * k * k / (2.0 * eps));
        }
        if (coupled_) {
            m11_.resize(n);
            m12_.resize(n);
            m22_.resize(n);
            for (std::size_t j = 0; j < n; ++j) {
                const double x = grid.x(j);
                const auto e = pot.entries(x);
                const double X = e.x.real();
                const double Z = e.z.real();
                const double d = e.d.real();
                const double rho = std::hypot(X, Z);
                const cplx ph = std::polar(1.0, -half * d / eps);
                const double c = std::cos(half * rho / eps);
                const double s = std::sin(half * rho / eps);
                const double zr = rho > 0.0 ? Z / rho : 1.0;
                const double xr = rho > 0.0 ? X / rho : 0.0;
                m11_[j] = ph * cplx(c, -s * zr);
                m22_[j] = ph * cplx(c, s * zr);
                m12_[j] = ph * cplx(0.0, -s * xr);
            }
        } else {
            v_.resize(n);
            for (std::size_t j = 0; j < n; ++j) {
                const double x = grid.x(j);
                double v = 0.0;
                switch (surface.kind) {
                    case SurfaceKind::UpperAdiabatic: {
                        const auto a = eval_adiabatic(pot, x);
                        v = a.rho + a.d;
                        break;
                    }
                    case SurfaceKind::LowerAdiabatic: {
                        const auto a = eval_adiabatic(pot, x);
                        v = -a.rho + a.d;
                        break;
                    }
                    case SurfaceKind::LinearUpper: v = surface.delta + surface.lambda * x; break;
                    case SurfaceKind::LinearLower: v = -surface.delta + surface.lambda * x; break;
                    case SurfaceKind::CoupledDiabatic: break;
                }
                v_[j] = std::polar(1.0, -half * v / eps);
            }
        }
    }

    void step(GridState& st) {
        if (coupled_) {
            apply_matrix(st);
            kinetic(st[0]);
            kinetic(st[1]);
            apply_matrix(st);
        } else {
            apply_scalar(st[0]);
            kinetic(st[0]);
            apply_scalar(st[0]);
        }
    }

private:
    void apply_matrix(GridState& st) const {
        auto& a = st[0];
        auto& b = st[1];
        for (std::size_t j = 0; j < a.size(); ++j) {
            const cplx u = a[j];
            const cplx w = b[j];
            a[j] = m11_[j] * u + m12_[j] * w;
            b[j] = m12_[j] * u + m22_[j] * w;
        }
    }

    void apply_scalar(std::vector<cplx>& psi) const {
        for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= v_[j];
    }

    void kinetic(std::vector<cplx>& psi) {
        plan_.forward(psi);
        for (std::size_t m = 0; m < psi.size(); ++m) psi[m] *= kinetic_[m];
        plan_.backward(psi);
    }

    bool coupled_;
    FftPlan plan_;
    std::vector<cplx> kinetic_;
    std::vector<cplx> v_;
    std::vector<cplx> m11_, m12_, m22_;
};

void check_state(const GridState& state, const PropagatorSpec& spec) {
    if (!(state.grid == spec.grid)) throw Error(ErrorCode::GridMismatch, "state grid differs from propagator grid");
    const std::size_t want = is_coupled(spec.surface) ? 2 : 1;
    if (state.n_components() != want)
        throw Error(ErrorCode::GridMismatch, "propagator expects " + std::to_string(want) + " component(s)");
    if (spec.n_steps < 1) throw Error(ErrorCode::InvalidArgument, "n_steps must be >= 1");
}

}  // namespace

GridState propagate(const PropagatorSpec& spec, const DiabaticPotential& pot, GridState state,
                    const StepObserver& observer) {
    spec.grid.validate();
    check_state(state, spec);
    if (state.eps != spec.eps) throw Error(ErrorCode::GridMismatch, "state eps differs from propagator eps");
    const bool momentum = state.space == Space::Momentum;
    if (momentum) state = inverse_semiclassical_fourier(state);
    const double dt = (spec.t1 - spec.t0) / spec.n_steps;
    if (dt != 0.0) {
        Stepper stepper(spec.grid, spec.eps, spec.surface, pot, dt);
        for (int i = 0; i < spec.n_steps; ++i) {
            stepper.step(state);
            if (observer) observer(spec.t0 + (i + 1) * dt, state);
        }
    }
    if (momentum) state = semiclassical_fourier(state);
    return state;
}

GridState adiabatic_transform(const GridState& state, const DiabaticPotential& pot) {
    if (state.space != Space::Position)
        throw Error(ErrorCode::InvalidArgument, "adiabatic_transform expects a position-space state");
    if (state.n_components() != 2) throw Error(ErrorCode::InvalidArgument, "adiabatic_transform needs 2 components");
    const auto xs = state.grid.positions();
    const auto ad = eval_adiabatic(pot, xs);
    GridState out = state;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        const double c = std::cos(0.5 * ad[j].theta);
        const double s = std::sin(0.5 * ad[j].theta);
        const cplx a = state[0][j];
        const cplx b = state[1][j];
        out[0][j] = c * a + s * b;
        out[1][j] = s * a - c * b;
    }
    return out;
}

namespace {

double branch_sign(Branch b) { return b == Branch::Upper ? 1.0 : -1.0; }

cplx avron_herbst_phase(double k, double s, Branch branch, double delta, double lambda, double eps) {
    const double arg = ((k * k + 2.0 * branch_sign(branch) * delta) * s - lambda * k * s * s) / (2.0 * eps);
    return std::polar(1.0, -arg);
}

}  // namespace

GridState avron_herbst(const GridState& state, double s, Branch branch, double delta, double lambda) {
    if (state.space != Space::Momentum)
        throw Error(ErrorCode::InvalidArgument, "avron_herbst expects a momentum-space state");
    const double eps = state.eps;
    const double shift = lambda * s;
    const double period = static_cast<double>(state.grid.n_points) * state.grid.dk(eps);
    if (std::abs(shift) > period) throw Error(ErrorCode::ShiftOffGrid, "|lambda s| exceeds the momentum period");
    const auto ks = state.grid.momenta(eps);
    GridState g = state;
    for (auto& comp : g.components)
        for (std::size_t j = 0; j < ks.size(); ++j) comp[j] *= avron_herbst_phase(ks[j], s, branch, delta, lambda, eps);
    if (shift == 0.0) return g;
    // f(k + a) is the transform of exp(-i a x / eps) f(x).
    GridState pos = inverse_semiclassical_fourier(g);
    const auto xs = pos.grid.positions();
    for (auto& comp : pos.components)
        for (std::size_t j = 0; j < xs.size(); ++j) comp[j] *= std::polar(1.0, -shift * xs[j] / eps);
    GridState out = semiclassical_fourier(pos);
    const cplx cubic = std::polar(1.0, -lambda * lambda * s * s * s / (6.0 * eps));
    for (auto& comp : out.components)
        for (auto& v : comp) v *= cubic;
    return out;
}

std::vector<cplx> avron_herbst(const Packet& packet, std::span<const double> k_grid, double s, Branch branch,
                               double delta, double lambda, double eps) {
    const double shift = lambda * s;
    const cplx cubic = std::polar(1.0, -lambda * lambda * s * s * s / (6.0 * eps));
    std::vector<cplx> out(k_grid.size());
    for (std::size_t j = 0; j < k_grid.size(); ++j) {
        const double ks = k_grid[j] + shift;
        out[j] = cubic * avron_herbst_phase(ks, s, branch, delta, lambda, eps) * eval_packet(packet, ks, eps);
    }
    return out;
}

CrossingResult evolve_to_crossing(const GridState& state, const DiabaticPotential& pot, double x_c, double t_max,
                                  double dt_max, double tolerance) {
    if (state.space != Space::Position)
        throw Error(ErrorCode::InvalidArgument, "evolve_to_crossing expects a position-space state");
    if (state.n_components() != 1) throw Error(ErrorCode::InvalidArgument, "evolve_to_crossing needs one component");
    const Surface upper{SurfaceKind::UpperAdiabatic};
    GridState current = state;
    double t = 0.0;
    double f_cur = mean_position(current) - x_c;
    if (std::abs(f_cur) <= tolerance) return {current, 0.0, f_cur + x_c};

    Stepper coarse(state.grid, state.eps, upper, pot, dt_max);
    while (t < t_max) {
        const double h = std::min(dt_max, t_max - t);
        GridState next = current;
        if (h == dt_max) {
            coarse.step(next);
        } else {
            Stepper last(state.grid, state.eps, upper, pot, h);
            last.step(next);
        }
        const double f_next = mean_position(next) - x_c;
        if (std::abs(f_next) <= tolerance) return {next, t + h, f_next + x_c};
        if ((f_cur < 0.0) != (f_next < 0.0)) {
            // Illinois-modified regula falsi on the sub-step length.
            double a = 0.0, fa = f_cur;
            double b = h, fb = f_next;
            int side = 0;
            GridState trial = next;
            double f_trial = f_next;
            double tau = h;
            for (int iter = 0; iter < 60; ++iter) {
                tau = (a * fb - b * fa) / (fb - fa);
                trial = current;
                Stepper sub(state.grid, state.eps, upper, pot, tau);
                sub.step(trial);
                f_trial = mean_position(trial) - x_c;
                if (std::abs(f_trial) <= tolerance) break;
                if ((f_trial < 0.0) == (fb < 0.0)) {
                    b = tau;
                    fb = f_trial;
                    if (side == -1) fa *= 0.5;
                    side = -1;
                } else {
                    a = tau;
                    fa = f_trial;
                    if (side == 1) fb *= 0.5;
                    side = 1;
                }
            }
            return {trial, t + tau, f_trial + x_c};
        }
        current = std::move(next);
        f_cur = f_next;
        t += h;
    }
    throw Error(ErrorCode::CrossingNotReached, "<X> did not reach the crossing before t_max");
}

}  // namespace tiltcross
