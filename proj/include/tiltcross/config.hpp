#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiltcross/decompose.hpp"
#include "tiltcross/formula.hpp"
#include "tiltcross/grid.hpp"
#include "tiltcross/packets.hpp"
#include "tiltcross/potential.hpp"

namespace tiltcross {

struct PacketTermSpec {
    cplx amplitude = 1.0;
    double p0 = 5.0;
    double width = 1.4142135623730951;
    WidthConvention convention = WidthConvention::SigmaHalfSq;
    double x_off = 0.0;
    int degree = 0;
};

/// Crossing: the packet is given at t = 0. Initial: it is given at t = -T and
/// first run to the crossing on the upper level.
enum class PacketStage { Crossing, Initial };

struct PacketSpec {
    std::vector<PacketTermSpec> terms{PacketTermSpec{}};
    bool normalize = true;
    PacketStage stage = PacketStage::Crossing;
};

struct TimeSpec {
    double T = 4.0;
    double t_star = 4.0;
    int n_steps = 1000;  ///< steps of the coupled run over [-T, t_star]
};

struct SweepSpec {
    std::vector<double> eps;
    std::vector<double> p0;
    std::vector<double> lambda;
    std::vector<double> delta;
    double floor = 1e-8;  ///< reference probabilities below this are not certified
};

struct RunConfig {
    DiabaticPotential potential;
    Interval window{-5.0, 5.0};
    double eps = 1.0 / 50.0;
    PacketSpec packet;
    Grid grid;
    TimeSpec time;
    FormulaOptions formula;
    FitConfig fit{3};
    SweepSpec sweep;
    std::filesystem::path output_dir = "out";
    double threshold = 1e-3;
    double edge_mass_limit = 1e-8;
    bool write_evolved = false;

    /// Throws ConfigError on inconsistent values.
    void validate() const;
};

RunConfig config_from_json(const nlohmann::json& j);
/// Every field, defaults included.
nlohmann::json to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

nlohmann::json potential_to_json(const DiabaticPotential& pot);
DiabaticPotential potential_from_json(const nlohmann::json& j);

/// A fitted sum in the same fragment format as the "packet" section.
nlohmann::json packet_to_json(const PacketSum& sum);

Packet build_packet(const RunConfig& cfg);

}  // namespace tiltcross
