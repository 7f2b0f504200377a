#pragma once

#include <functional>
#include <optional>

#include "tiltcross/grid.hpp"
#include "tiltcross/packets.hpp"
#include "tiltcross/potential.hpp"

namespace tiltcross {

enum class SurfaceKind {
    CoupledDiabatic,
    UpperAdiabatic,  ///< rho + d
    LowerAdiabatic,  ///< -rho + d
    LinearUpper,     ///< delta + lambda x
    LinearLower,     ///< -delta + lambda x
};

struct Surface {
    SurfaceKind kind = SurfaceKind::CoupledDiabatic;
    double delta = 0.0;   ///< LinearUpper / LinearLower only
    double lambda = 0.0;  ///< LinearUpper / LinearLower only
};

struct PropagatorSpec {
    double eps = 1.0 / 50.0;
    double t0 = 0.0;
    double t1 = 1.0;
    int n_steps = 1000;
    Grid grid;
    Surface surface;
};

/// Called after every step with (time, state in position space).
using StepObserver = std::function<void(double, const GridState&)>;

/// Symmetric Strang splitting V/2 K V/2 with the potential exponential in
/// closed form per grid point. Negative time spans evolve backwards.
/// Accepts either representation and returns the same one.
GridState propagate(const PropagatorSpec& spec, const DiabaticPotential& pot, GridState state,
                    const StepObserver& observer = {});

/// Pointwise U0(x) = [[cos(theta/2), sin(theta/2)], [sin(theta/2), -cos(theta/2)]].
/// Maps diabatic to adiabatic and back (U0 is its own inverse).
GridState adiabatic_transform(const GridState& position_state, const DiabaticPotential& pot);

enum class Branch { Upper, Lower };

/// Exact propagator exp(-i s H1/eps) for H1 = -eps^2 d_x^2 / 2 +- delta + lambda x,
/// on a momentum-space grid state. The shift k -> k + lambda s is applied by
/// band-limited (trigonometric) interpolation.
GridState avron_herbst(const GridState& momentum_state, double s, Branch branch, double delta,
                       double lambda);

/// Same propagator applied to an analytic packet: the shifted argument is
/// evaluated exactly on the packet's closed form.
std::vector<cplx> avron_herbst(const Packet& packet, std::span<const double> k_grid, double s, Branch branch,
                               double delta, double lambda, double eps);

struct CrossingResult {
    GridState state;  ///< position space
    double t0 = 0.0;
    double mean_x = 0.0;
};

/// Evolves on the upper adiabatic surface until <X> reaches x_c, refined by a
/// secant iteration on <X>(t).
CrossingResult evolve_to_crossing(const GridState& position_state, const DiabaticPotential& pot, double x_c,
                                  double t_max, double dt_max = 0.01, double tolerance = 1e-6);

}  // namespace tiltcross
