#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiltcross/config.hpp"
#include "tiltcross/formula.hpp"
#include "tiltcross/grid.hpp"

namespace tiltcross {

/// A checked invariant; a run is clean only if every monitor holds.
struct Monitor {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    bool ok = true;
};

nlohmann::json stokes_to_json(const StokesData& s);

struct ReferenceResult {
    GridState lower;          ///< momentum space, one component, at the crossing time
    double t_cross = 0.0;     ///< crossing time on the run's clock (0 for the crossing stage)
    std::vector<Monitor> monitors;
    double seconds = 0.0;
};

/// Split-step oracle. Crossing stage: upper leg 0 -> -T, coupled run -T -> t*,
/// lower leg t* -> 0. Initial stage: the packet is the state at -T and the lower
/// leg stops at the crossing time found on the upper surface. All legs share the
/// coupled run's step size. Throws EdgeMassExceeded if the boundary monitor trips.
ReferenceResult run_reference(const RunConfig& cfg);

struct FormulaRun {
    TransitionResult result;            ///< on the momentum grid of cfg.grid
    std::optional<FitResult> fit;       ///< initial stage: Gaussian fit at the crossing
    double t_cross = 0.0;
    std::optional<GridState> evolved;   ///< lower-surface state at t*, momentum space
    std::vector<Monitor> monitors;
    double seconds = 0.0;
};

/// Formula pipeline: optional upper-surface run to the crossing with a Gaussian
/// fit, the transmitted state, and optionally its lower-surface evolution to t*.
FormulaRun run_formula(const RunConfig& cfg);

struct ComparisonReport {
    double norm_sq_formula = 0.0;
    double norm_sq_reference = 0.0;
    std::vector<double> k;              ///< significant region
    std::vector<double> rel_error;      ///< |f - r| / |r|
    std::vector<double> modulus_error;  ///< (|f| - |r|) / |r|
    std::vector<double> phase_error;    ///< unwrapped arg f - arg r
    std::size_t masked = 0;             ///< formula-masked points inside the region, excluded
    double max_rel_error = 0.0;
    double max_modulus_error = 0.0;
    double max_phase_error = 0.0;
    double l2_rel_error = 0.0;
    double seconds_formula = 0.0;
    double seconds_reference = 0.0;
};

/// Significant region: |reference| >= threshold * max|reference|. `mask`, if
/// given, marks formula points to leave out. Throws GridMismatch on length mismatch.
ComparisonReport compare(std::span<const double> k, std::span<const cplx> formula, std::span<const cplx> reference,
                         double threshold, std::span<const PointFlag> mask = {});

nlohmann::json report_to_json(const ComparisonReport& r);

/// Relative L2 distance between two momentum-space states on grids with a
/// common spacing; the coarser k range is used.
double refinement_distance(const GridState& coarse, const GridState& fine);

struct SweepRow {
    double eps = 0.0, p0 = 0.0, lambda = 0.0, delta = 0.0;
    double norm_sq_formula = 0.0;
    double norm_sq_reference = 0.0;
    double max_rel_error = 0.0;
    double l2_rel_error = 0.0;
    std::string status;  ///< ok | unverified | failed
    std::string message;
};

/// Cartesian product of the sweep lists (empty list: the base value), in
/// eps-major order. Rows run concurrently; the result order is fixed.
std::vector<SweepRow> run_sweep(const RunConfig& cfg, int threads = 0);

/// The config for one sweep row.
RunConfig sweep_config(const RunConfig& cfg, double eps, double p0, double lambda, double delta);

// Persistence.
void write_transition_csv(const std::filesystem::path& path, const TransitionResult& r);
void write_state_csv(const std::filesystem::path& path, const GridState& s);
void write_report_csv(const std::filesystem::path& path, const ComparisonReport& r);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

struct SeriesFile {
    std::vector<double> axis;
    std::vector<cplx> values;
};
/// Reads the first three columns (axis, re, im) of any CSV written above.
SeriesFile read_series_csv(const std::filesystem::path& path);

}  // namespace tiltcross
