#include "tiltcross/config.hpp"

#include <fstream>

#include "tiltcross/error.hpp"

namespace tiltcross {

using nlohmann::json;

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("field '") + key + "': " + e.what());
    }
}

cplx parse_complex(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
    throw Error(ErrorCode::ConfigError, "complex values are numbers or [re, im] pairs");
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

std::string_view to_string(PacketStage s) { return s == PacketStage::Crossing ? "crossing" : "initial"; }

PacketStage parse_stage(std::string_view s) {
    if (s == "crossing") return PacketStage::Crossing;
    if (s == "initial") return PacketStage::Initial;
    throw Error(ErrorCode::ConfigError, "packet stage must be 'crossing' or 'initial'");
}

std::string_view to_string(Alpha20Form f) { return f == Alpha20Form::Expanded ? "expanded" : "printed"; }

Alpha20Form parse_alpha20(std::string_view s) {
    if (s == "expanded") return Alpha20Form::Expanded;
    if (s == "printed") return Alpha20Form::AsPrinted;
    throw Error(ErrorCode::ConfigError, "alpha20 must be 'expanded' or 'printed'");
}

std::vector<double> number_list(const json& j, const char* key) {
    return get_or<std::vector<double>>(j, key, {});
}

}  // namespace

json potential_to_json(const DiabaticPotential& pot) {
    return std::visit(
        [](const auto& p) -> json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ParametricTanh>) {
                return {{"type", "tanh"}, {"alpha", p.alpha}, {"beta", p.beta}, {"delta", p.delta_gap},
                        {"lambda", p.lambda_tilt}};
            } else if constexpr (std::is_same_v<T, LandauZenerLinear>) {
                return {{"type", "landau_zener"}, {"delta", p.delta_gap}, {"slope", p.slope}};
            } else {
                return {{"type", "series"}, {"x", p.x_coeffs},       {"z", p.z_coeffs},
                        {"d", p.d_coeffs},  {"center", p.center}, {"strip_radius", p.strip_radius}};
            }
        },
        pot.kind());
}

DiabaticPotential potential_from_json(const json& j) {
    const auto type = get_or<std::string>(j, "type", "tanh");
    if (type == "tanh") {
        ParametricTanh p;
        p.alpha = get_or(j, "alpha", p.alpha);
        p.beta = get_or(j, "beta", p.beta);
        p.delta_gap = get_or(j, "delta", p.delta_gap);
        p.lambda_tilt = get_or(j, "lambda", p.lambda_tilt);
        return DiabaticPotential(p);
    }
    if (type == "landau_zener") {
        LandauZenerLinear p;
        p.delta_gap = get_or(j, "delta", p.delta_gap);
        p.slope = get_or(j, "slope", p.slope);
        return DiabaticPotential(p);
    }
    if (type == "series") {
        SeriesPotential p;
        p.x_coeffs = number_list(j, "x");
        p.z_coeffs = number_list(j, "z");
        p.d_coeffs = number_list(j, "d");
        p.center = get_or(j, "center", 0.0);
        p.strip_radius = get_or(j, "strip_radius", 1.0);
        return DiabaticPotential(p);
    }
    throw Error(ErrorCode::ConfigError, "unknown potential type '" + type + "'");
}

json packet_to_json(const PacketSum& sum) {
    json terms = json::array();
    for (const auto& t : sum.terms) {
        const auto& g = gaussian_part(t);
        terms.push_back({{"amplitude", complex_json(g.amplitude)},
                         {"p0", g.p0},
                         {"width", std::sqrt(0.5 / g.c.real())},
                         {"width_convention", "sigma_halfsq"},
                         {"x_off", g.x_off},
                         {"degree", degree_of(t)}});
    }
    return {{"terms", terms}, {"normalize", false}, {"stage", "crossing"}};
}

RunConfig config_from_json(const json& j) {
    RunConfig cfg;
    if (j.contains("potential")) cfg.potential = potential_from_json(j.at("potential"));
    if (j.contains("window")) {
        const auto w = j.at("window").get<std::vector<double>>();
        if (w.size() != 2) throw Error(ErrorCode::ConfigError, "window is [lo, hi]");
        cfg.window = {w[0], w[1]};
    }
    cfg.eps = get_or(j, "eps", cfg.eps);
    if (j.contains("packet")) {
        const auto& p = j.at("packet");
        cfg.packet.normalize = get_or(p, "normalize", cfg.packet.normalize);
        cfg.packet.stage = parse_stage(get_or<std::string>(p, "stage", "crossing"));
        if (p.contains("terms")) {
            cfg.packet.terms.clear();
            for (const auto& t : p.at("terms")) {
                PacketTermSpec s;
                if (t.contains("amplitude")) s.amplitude = parse_complex(t.at("amplitude"));
                s.p0 = get_or(t, "p0", s.p0);
                s.width = get_or(t, "width", s.width);
                s.convention = parse_width_convention(get_or<std::string>(t, "width_convention", "sigma_halfsq"));
                s.x_off = get_or(t, "x_off", s.x_off);
                s.degree = get_or(t, "degree", s.degree);
                cfg.packet.terms.push_back(s);
            }
        }
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        cfg.grid.n_points = get_or<std::size_t>(g, "n_points", cfg.grid.n_points);
        cfg.grid.x_min = get_or(g, "x_min", cfg.grid.x_min);
        cfg.grid.x_max = get_or(g, "x_max", cfg.grid.x_max);
    }
    if (j.contains("time")) {
        const auto& t = j.at("time");
        cfg.time.T = get_or(t, "T", cfg.time.T);
        cfg.time.t_star = get_or(t, "t_star", cfg.time.t_star);
        cfg.time.n_steps = get_or(t, "n_steps", cfg.time.n_steps);
    }
    if (j.contains("formula")) {
        const auto& f = j.at("formula");
        cfg.formula.variant = parse_alpha_variant(get_or<std::string>(f, "variant", "full"));
        cfg.formula.offset = parse_offset_placement(get_or<std::string>(f, "offset", "a10"));
        cfg.formula.phase_shift = get_or(f, "phase_shift", true);
        cfg.formula.hagedorn = parse_hagedorn_mode(get_or<std::string>(f, "hagedorn", "leading"));
        cfg.formula.alpha20 = parse_alpha20(get_or<std::string>(f, "alpha20", "expanded"));
    }
    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        cfg.fit.n_terms = get_or(f, "n_terms", cfg.fit.n_terms);
        cfg.fit.sigma_min = get_or(f, "sigma_min", cfg.fit.sigma_min);
        cfg.fit.sigma_max = get_or(f, "sigma_max", cfg.fit.sigma_max);
        cfg.fit.max_iter = get_or(f, "max_iter", cfg.fit.max_iter);
        cfg.fit.tolerance = get_or(f, "tolerance", cfg.fit.tolerance);
        cfg.fit.seed = get_or<std::uint64_t>(f, "seed", cfg.fit.seed);
        cfg.fit.multistarts = get_or(f, "multistarts", cfg.fit.multistarts);
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        cfg.sweep.eps = number_list(s, "eps");
        cfg.sweep.p0 = number_list(s, "p0");
        cfg.sweep.lambda = number_list(s, "lambda");
        cfg.sweep.delta = number_list(s, "delta");
        cfg.sweep.floor = get_or(s, "floor", cfg.sweep.floor);
    }
    cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir.string());
    cfg.threshold = get_or(j, "threshold", cfg.threshold);
    cfg.edge_mass_limit = get_or(j, "edge_mass_limit", cfg.edge_mass_limit);
    cfg.write_evolved = get_or(j, "write_evolved", cfg.write_evolved);
    cfg.validate();
    return cfg;
}

json to_json(const RunConfig& cfg) {
    json terms = json::array();
    for (const auto& t : cfg.packet.terms)
        terms.push_back({{"amplitude", complex_json(t.amplitude)},
                         {"p0", t.p0},
                         {"width", t.width},
                         {"width_convention", to_string(t.convention)},
                         {"x_off", t.x_off},
                         {"degree", t.degree}});
    return {
        {"potential", potential_to_json(cfg.potential)},
        {"window", {cfg.window.lo, cfg.window.hi}},
        {"eps", cfg.eps},
        {"packet", {{"terms", terms}, {"normalize", cfg.packet.normalize}, {"stage", to_string(cfg.packet.stage)}}},
        {"grid", {{"n_points", cfg.grid.n_points}, {"x_min", cfg.grid.x_min}, {"x_max", cfg.grid.x_max}}},
        {"time", {{"T", cfg.time.T}, {"t_star", cfg.time.t_star}, {"n_steps", cfg.time.n_steps}}},
        {"formula",
         {{"variant", to_string(cfg.formula.variant)},
          {"offset", to_string(cfg.formula.offset)},
          {"phase_shift", cfg.formula.phase_shift},
          {"hagedorn", to_string(cfg.formula.hagedorn)},
          {"alpha20", to_string(cfg.formula.alpha20)}}},
        {"fit",
         {{"n_terms", cfg.fit.n_terms},
          {"sigma_min", cfg.fit.sigma_min},
          {"sigma_max", cfg.fit.sigma_max},
          {"max_iter", cfg.fit.max_iter},
          {"tolerance", cfg.fit.tolerance},
          {"seed", cfg.fit.seed},
          {"multistarts", cfg.fit.multistarts}}},
        {"sweep",
         {{"eps", cfg.sweep.eps},
          {"p0", cfg.sweep.p0},
          {"lambda", cfg.sweep.lambda},
          {"delta", cfg.sweep.delta},
          {"floor", cfg.sweep.floor}}},
        {"output_dir", cfg.output_dir.string()},
        {"threshold", cfg.threshold},
        {"edge_mass_limit", cfg.edge_mass_limit},
        {"write_evolved", cfg.write_evolved},
    };
}

void RunConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
    if (!(eps > 0.0)) fail("eps must be positive");
    if (packet.terms.empty()) fail("packet needs at least one term");
    for (const auto& t : packet.terms) {
        if (!(t.width > 0.0)) fail("packet widths must be positive");
        if (t.degree < 0) fail("packet degree must be >= 0");
    }
    if (!(time.T > 0.0) || !(time.t_star > 0.0)) fail("T and t_star must be positive");
    if (time.n_steps < 2) fail("n_steps must be >= 2");
    if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold must lie in (0, 1)");
    if (!(window.hi > window.lo)) fail("window must be increasing");
    try {
        grid.validate();
    } catch (const Error& e) {
        fail(e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << to_json(cfg).dump(2) << '\n';
}

Packet build_packet(const RunConfig& cfg) {
    std::vector<PacketTerm> terms;
    for (const auto& t : cfg.packet.terms) {
        const GaussianPacket g{t.amplitude, t.p0, width_to_c(t.convention, t.width), t.x_off};
        if (t.degree == 0)
            terms.emplace_back(g);
        else
            terms.emplace_back(HagedornPacket{g, t.degree});
    }
    Packet p;
    if (terms.size() == 1) {
        if (const auto* g = std::get_if<GaussianPacket>(&terms[0]))
            p = *g;
        else
            p = std::get<HagedornPacket>(terms[0]);
    } else {
        p = PacketSum{terms};
    }
    return cfg.packet.normalize ? normalize(p, cfg.eps) : p;
}

}  // namespace tiltcross
