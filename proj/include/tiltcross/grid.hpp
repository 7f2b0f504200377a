#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace tiltcross {

using cplx = std::complex<double>;

/// Uniform periodic grid x_j = x_min + j dx, j in [0, n), dx = (x_max - x_min) / n.
/// The dual momentum grid is k_j = 2 pi eps (j - n/2) / (x_max - x_min),
/// stored in ascending order.
struct Grid {
    std::size_t n_points = 16384;
    double x_min = -40.0;
    double x_max = 40.0;

    double length() const noexcept { return x_max - x_min; }
    double dx() const noexcept { return length() / static_cast<double>(n_points); }
    double x(std::size_t j) const noexcept { return x_min + static_cast<double>(j) * dx(); }
    double dk(double eps) const noexcept;
    double k(std::size_t j, double eps) const noexcept;

    std::vector<double> positions() const;
    std::vector<double> momenta(double eps) const;

    /// Throws GridNotPowerOfTwo or InvalidArgument.
    void validate() const;

    bool operator==(const Grid&) const = default;
};

enum class Space { Position, Momentum };

struct GridState {
    double eps = 1.0 / 50.0;
    Grid grid;
    Space space = Space::Position;
    std::vector<std::vector<cplx>> components;

    GridState() = default;
    GridState(double eps_, Grid grid_, Space space_, std::size_t n_components);

    std::size_t n_components() const noexcept { return components.size(); }
    std::vector<cplx>& operator[](std::size_t c) { return components[c]; }
    const std::vector<cplx>& operator[](std::size_t c) const { return components[c]; }

    /// Sample spacing of the current representation (dx or dk).
    double spacing() const noexcept;
    /// Coordinates of the current representation.
    std::vector<double> axis() const;

    double norm_sq() const;
    double norm() const;
    double component_norm_sq(std::size_t c) const;
};

/// Radix-2 complex transform of fixed size. Plans are created under a global
/// lock; execution on distinct buffers is thread-safe.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);
    ~FftPlan();
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;
    FftPlan(FftPlan&&) noexcept;
    FftPlan& operator=(FftPlan&&) noexcept;

    std::size_t size() const noexcept { return n_; }

    /// Unnormalized in-place transforms: forward uses exp(-2 pi i m j / n).
    void forward(std::span<cplx> data) const;
    void backward(std::span<cplx> data) const;

private:
    struct Impl;
    std::size_t n_ = 0;
    std::unique_ptr<Impl> impl_;
};

/// f^(k) = (2 pi eps)^{-1/2} int exp(-i k q / eps) f(q) dq on every component.
GridState semiclassical_fourier(const GridState& state);
GridState inverse_semiclassical_fourier(const GridState& state);

/// L2 norm with the given sample spacing.
double l2_norm(std::span<const cplx> values, double spacing);
/// ||a - b|| / ||b||.
double relative_l2_error(std::span<const cplx> a, std::span<const cplx> b);

/// Scales every component by a positive real factor so the state has unit norm.
GridState normalize(GridState state);

/// Fraction of probability mass in the outer `fraction` of the position grid
/// at each end.
double edge_mass(const GridState& position_state, double fraction = 0.05);

/// <X> = int x |psi|^2 / int |psi|^2 over all components.
double mean_position(const GridState& position_state);

}  // namespace tiltcross
