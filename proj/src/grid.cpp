#include "tiltcross/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include "tiltcross/error.hpp"

namespace tiltcross {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

}  // namespace

double Grid::dk(double eps) const noexcept { return 2.0 * std::numbers::pi * eps / length(); }

double Grid::k(std::size_t j, double eps) const noexcept {
    return (static_cast<double>(j) - static_cast<double>(n_points / 2)) * dk(eps);
}

std::vector<double> Grid::positions() const {
    std::vector<double> out(n_points);
    for (std::size_t j = 0; j < n_points; ++j) out[j] = x(j);
    return out;
}

std::vector<double> Grid::momenta(double eps) const {
    std::vector<double> out(n_points);
    for (std::size_t j = 0; j < n_points; ++j) out[j] = k(j, eps);
    return out;
}

void Grid::validate() const {
    if (!is_power_of_two(n_points))
        throw Error(ErrorCode::GridNotPowerOfTwo, "n_points = " + std::to_string(n_points));
    if (!(x_max > x_min)) throw Error(ErrorCode::InvalidArgument, "grid requires x_max > x_min");
}

GridState::GridState(double eps_, Grid grid_, Space space_, std::size_t n_components)
    : eps(eps_), grid(grid_), space(space_),
      components(n_components, std::vector<cplx>(grid_.n_points, cplx(0.0))) {}

double GridState::spacing() const noexcept { return space == Space::Position ? grid.dx() : grid.dk(eps); }

std::vector<double> GridState::axis() const {
    return space == Space::Position ? grid.positions() : grid.momenta(eps);
}

double GridState::component_norm_sq(std::size_t c) const {
    double acc = 0.0;
    for (const auto& v : components[c]) acc += std::norm(v);
    return acc * spacing();
}

double GridState::norm_sq() const {
    double acc = 0.0;
    for (std::size_t c = 0; c < components.size(); ++c) acc += component_norm_sq(c);
    return acc;
}

double GridState::norm() const { return std::sqrt(norm_sq()); }

struct FftPlan::Impl {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

FftPlan::FftPlan(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
    if (!is_power_of_two(n)) throw Error(ErrorCode::GridNotPowerOfTwo, "FFT size " + std::to_string(n));
    std::lock_guard lock(planner_mutex());
    auto* buf = fftw_alloc_complex(n);
    impl_->fwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    impl_->bwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_free(buf);
}

FftPlan::~FftPlan() {
    if (!impl_) return;
    std::lock_guard lock(planner_mutex());
    if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
    if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
}

FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&&) noexcept = default;

void FftPlan::forward(std::span<cplx> data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(impl_->fwd, p, p);
}

void FftPlan::backward(std::span<cplx> data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(impl_->bwd, p, p);
}

GridState semiclassical_fourier(const GridState& state) {
    state.grid.validate();
    if (state.space != Space::Position)
        throw Error(ErrorCode::InvalidArgument, "semiclassical_fourier expects a position-space state");
    const std::size_t n = state.grid.n_points;
    const FftPlan plan(n);
    GridState out(state.eps, state.grid, Space::Momentum, state.n_components());
    const double scale = state.grid.dx() / std::sqrt(2.0 * std::numbers::pi * state.eps);
    const double phase_unit = -2.0 * std::numbers::pi * state.grid.x_min / state.grid.length();
    std::vector<cplx> buf(n);
    for (std::size_t c = 0; c < state.n_components(); ++c) {
        std::copy(state[c].begin(), state[c].end(), buf.begin());
        plan.forward(buf);
        for (std::size_t j = 0; j < n; ++j) {
            const auto m = static_cast<long long>(j) - static_cast<long long>(n / 2);
            const std::size_t src = static_cast<std::size_t>((m + static_cast<long long>(n)) % static_cast<long long>(n));
            out[c][j] = scale * std::polar(1.0, phase_unit * static_cast<double>(m)) * buf[src];
        }
    }
    return out;
}

GridState inverse_semiclassical_fourier(const GridState& state) {
    state.grid.validate();
    if (state.space != Space::Momentum)
        throw Error(ErrorCode::InvalidArgument, "inverse_semiclassical_fourier expects a momentum-space state");
    const std::size_t n = state.grid.n_points;
    const FftPlan plan(n);
    GridState out(state.eps, state.grid, Space::Position, state.n_components());
    const double scale =
        std::sqrt(2.0 * std::numbers::pi * state.eps) / (state.grid.dx() * static_cast<double>(n));
    const double phase_unit = 2.0 * std::numbers::pi * state.grid.x_min / state.grid.length();
    std::vector<cplx> buf(n);
    for (std::size_t c = 0; c < state.n_components(); ++c) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto m = static_cast<long long>(j) - static_cast<long long>(n / 2);
            const std::size_t dst = static_cast<std::size_t>((m + static_cast<long long>(n)) % static_cast<long long>(n));
            buf[dst] = std::polar(1.0, phase_unit * static_cast<double>(m)) * state[c][j];
        }
        plan.backward(buf);
        for (std::size_t j = 0; j < n; ++j) out[c][j] = scale * buf[j];
    }
    return out;
}

double l2_norm(std::span<const cplx> values, double spacing) {
    double acc = 0.0;
    for (const auto& v : values) acc += std::norm(v);
    return std::sqrt(acc * spacing);
}

double relative_l2_error(std::span<const cplx> a, std::span<const cplx> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::GridMismatch, "relative_l2_error size mismatch");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

GridState normalize(GridState state) {
    const double nrm = state.norm();
    if (!(nrm > 0.0)) throw Error(ErrorCode::ZeroNorm, "cannot normalize a zero state");
    for (auto& comp : state.components)
        for (auto& v : comp) v /= nrm;
    return state;
}

double edge_mass(const GridState& state, double fraction) {
    const std::size_t n = state.grid.n_points;
    const auto edge = static_cast<std::size_t>(fraction * static_cast<double>(n));
    double outer = 0.0;
    double total = 0.0;
    for (const auto& comp : state.components) {
        for (std::size_t j = 0; j < n; ++j) {
            const double w = std::norm(comp[j]);
            total += w;
            if (j < edge || j >= n - edge) outer += w;
        }
    }
    return total > 0.0 ? outer / total : 0.0;
}

double mean_position(const GridState& state) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& comp : state.components) {
        for (std::size_t j = 0; j < state.grid.n_points; ++j) {
            const double w = std::norm(comp[j]);
            num += state.grid.x(j) * w;
            den += w;
        }
    }
    if (den == 0.0) throw Error(ErrorCode::ZeroNorm, "mean position of a zero state");
    return num / den;
}

}  // namespace tiltcross
