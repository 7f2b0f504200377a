#pragma once

#include <complex>
#include <vector>

namespace tiltcross {

/// Gauss–Legendre nodes and weights on [-1, 1], ascending nodes.
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Rules are cached per order; the returned reference stays valid for the
/// lifetime of the process.
const GaussLegendreRule& gauss_legendre(int order);

}  // namespace tiltcross
