#pragma once

#include <cstdint>
#include <optional>

#include "tiltcross/grid.hpp"
#include "tiltcross/packets.hpp"

namespace tiltcross {

/// Terms are A exp(-(k - p)^2 / (2 sigma^2 eps)) exp(i k x / eps), i.e. c = 1/(2 sigma^2).
struct FitConfig {
    int n_terms = 1;
    double sigma_min = 0.05;
    double sigma_max = 20.0;
    int max_iter = 400;
    double tolerance = 1e-6;  ///< on the relative L2 residual
    std::uint64_t seed = 12345;
    int multistarts = 8;
    int threads = 0;  ///< 0: one per hardware thread, capped at `multistarts`
};

struct FitResult {
    PacketSum packet;
    double residual = 0.0;  ///< relative L2 over the fitted momentum window
    bool above_tolerance = false;
    bool merged = false;  ///< a degenerate pair was merged
    int iterations = 0;
};

/// Least-squares fit of a one-component momentum-space state by a sum of
/// complex Gaussians. Terms are added one at a time; each stage starts from the
/// previous optimum padded with a residual-peak term plus perturbed restarts.
FitResult fit_gaussians(const GridState& state, const FitConfig& cfg);

/// Single Levenberg-Marquardt run from the given terms (Gaussian terms only).
FitResult refine_gaussians(const GridState& state, const PacketSum& initial, const FitConfig& cfg);

double sigma_of(const GaussianPacket& g);

}  // namespace tiltcross
