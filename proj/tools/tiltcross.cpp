// tiltcross: transmitted wave packets at tilted avoided crossings.
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tiltcross/config.hpp"
#include "tiltcross/error.hpp"
#include "tiltcross/pipeline.hpp"
#include "tiltcross/splitstep.hpp"

using namespace tiltcross;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string config;
    std::string out;
    int threads = 0;
    bool verbose = false;
    std::optional<std::string> variant;
    std::optional<std::string> offset;
    bool no_phase_shift = false;
    std::optional<std::string> hagedorn;
};

RunConfig effective_config(const Options& o) {
    RunConfig cfg = o.config.empty() ? config_from_json(json::object()) : load_config(o.config);
    if (o.variant) cfg.formula.variant = parse_alpha_variant(*o.variant);
    if (o.offset) cfg.formula.offset = parse_offset_placement(*o.offset);
    if (o.no_phase_shift) cfg.formula.phase_shift = false;
    if (o.hagedorn) cfg.formula.hagedorn = parse_hagedorn_mode(*o.hagedorn);
    if (!o.out.empty()) cfg.output_dir = o.out;
    cfg.fit.threads = o.threads;
    cfg.validate();
    return cfg;
}

json monitors_json(const std::vector<Monitor>& ms) {
    json a = json::array();
    for (const auto& m : ms) a.push_back({{"name", m.name}, {"value", m.value}, {"limit", m.limit}, {"ok", m.ok}});
    return a;
}

bool all_ok(const std::vector<Monitor>& ms) {
    return std::all_of(ms.begin(), ms.end(), [](const Monitor& m) { return m.ok; });
}

void log(const Options& o, const std::string& msg) {
    if (o.verbose) std::cerr << msg << '\n';
}

int cmd_analyze(const Options& o) {
    const RunConfig cfg = effective_config(o);
    const StokesData s = stokes_data(cfg.potential, cfg.window);
    json j = stokes_to_json(s);
    if (const auto tp = transition_point(cfg.potential, s, cfg.window)) j["transition_point"] = *tp;
    write_json(cfg.output_dir / "stokes.json", j);
    std::cout << j.dump(2) << '\n';
    return 0;
}

json transition_summary(const FormulaRun& run) {
    const auto& r = run.result;
    json j = {{"norm_sq", r.norm_sq},
              {"n0", r.order.n0},
              {"k0", r.order.k0},
              {"eta0", r.order.eta0},
              {"phase_shift", r.phi},
              {"constraint_violations", r.violations()},
              {"outside_expansion", r.outside_expansion()},
              {"t_cross", run.t_cross},
              {"seconds", run.seconds},
              {"monitors", monitors_json(run.monitors)}};
    if (run.fit) {
        j["fit"] = packet_to_json(run.fit->packet);
        j["fit_residual"] = run.fit->residual;
    }
    if (run.evolved) j["norm_sq_t_star"] = run.evolved->norm_sq();
    return j;
}

int cmd_transmit(const Options& o) {
    const RunConfig cfg = effective_config(o);
    save_config(cfg, cfg.output_dir / "config.json");
    const FormulaRun run = run_formula(cfg);
    write_transition_csv(cfg.output_dir / "transmitted.csv", run.result);
    if (run.evolved) write_state_csv(cfg.output_dir / "evolved.csv", *run.evolved);
    const json j = transition_summary(run);
    write_json(cfg.output_dir / "transmit.json", j);
    std::printf("norm_sq %.6e  n0 %.4f  (%.3f s)\n", run.result.norm_sq, run.result.order.n0, run.seconds);
    return all_ok(run.monitors) ? 0 : 1;
}

int cmd_reference(const Options& o) {
    const RunConfig cfg = effective_config(o);
    save_config(cfg, cfg.output_dir / "config.json");
    const ReferenceResult ref = run_reference(cfg);
    write_state_csv(cfg.output_dir / "reference.csv", ref.lower);
    write_json(cfg.output_dir / "reference_summary.json", {{"norm_sq", ref.lower.component_norm_sq(0)},
                                                             {"t_cross", ref.t_cross},
                                                             {"seconds", ref.seconds},
                                                             {"monitors", monitors_json(ref.monitors)}});
    std::printf("norm_sq %.6e  (%.2f s)\n", ref.lower.component_norm_sq(0), ref.seconds);
    return all_ok(ref.monitors) ? 0 : 1;
}

void write_plot_csv(const fs::path& path, std::span<const double> k, std::span<const cplx> f,
                    std::span<const cplx> r) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.precision(17);
    out << "k,abs_formula,phase_formula,abs_reference,phase_reference\n";
    for (std::size_t i = 0; i < k.size(); ++i)
        out << k[i] << ',' << std::abs(f[i]) << ',' << std::arg(f[i]) << ',' << std::abs(r[i]) << ','
            << std::arg(r[i]) << '\n';
}

int cmd_compare(const Options& o, const std::string& formula_file, const std::string& reference_file,
                std::optional<double> threshold, bool plot) {
    const RunConfig cfg = effective_config(o);
    const double thr = threshold.value_or(cfg.threshold);
    std::vector<double> k;
    std::vector<cplx> f, r;
    std::vector<PointFlag> mask;
    std::vector<Monitor> monitors;
    double sec_f = 0.0, sec_r = 0.0;
    if (!formula_file.empty() || !reference_file.empty()) {
        if (formula_file.empty() || reference_file.empty())
            throw Error(ErrorCode::ConfigError, "--formula and --reference go together");
        auto a = read_series_csv(formula_file);
        auto b = read_series_csv(reference_file);
        if (a.axis.size() != b.axis.size()) throw Error(ErrorCode::GridMismatch, "files have different lengths");
        for (std::size_t i = 0; i < a.axis.size(); ++i)
            if (std::abs(a.axis[i] - b.axis[i]) > 1e-9 * (1.0 + std::abs(b.axis[i])))
                throw Error(ErrorCode::GridMismatch, "momentum grids differ at row " + std::to_string(i + 2));
        k = std::move(b.axis);
        f = std::move(a.values);
        r = std::move(b.values);
    } else {
        save_config(cfg, cfg.output_dir / "config.json");
        log(o, "running reference");
        const ReferenceResult ref = run_reference(cfg);
        log(o, "running formula");
        FormulaRun run = run_formula(cfg);
        k = run.result.k;
        f = run.result.psi;
        r = ref.lower[0];
        mask = run.result.flags;
        monitors = ref.monitors;
        monitors.insert(monitors.end(), run.monitors.begin(), run.monitors.end());
        sec_f = run.seconds;
        sec_r = ref.seconds;
        write_transition_csv(cfg.output_dir / "transmitted.csv", run.result);
        write_state_csv(cfg.output_dir / "reference.csv", ref.lower);
    }
    ComparisonReport rep = compare(k, f, r, thr, mask);
    rep.seconds_formula = sec_f;
    rep.seconds_reference = sec_r;
    json j = report_to_json(rep);
    j["threshold"] = thr;
    j["monitors"] = monitors_json(monitors);
    write_json(cfg.output_dir / "compare.json", j);
    write_report_csv(cfg.output_dir / "compare.csv", rep);
    if (plot) write_plot_csv(cfg.output_dir / "compare_plot.csv", k, f, r);
    std::printf("norm_sq formula %.6e reference %.6e  max rel %.4e  L2 rel %.4e\n", rep.norm_sq_formula,
                rep.norm_sq_reference, rep.max_rel_error, rep.l2_rel_error);
    return all_ok(monitors) ? 0 : 1;
}

int cmd_sweep(const Options& o) {
    const RunConfig cfg = effective_config(o);
    save_config(cfg, cfg.output_dir / "config.json");
    const auto rows = run_sweep(cfg, o.threads);
    write_sweep_csv(cfg.output_dir / "sweep.csv", rows);
    bool ok = true;
    for (const auto& r : rows) {
        std::printf("eps %.5f p0 %.2f lambda %.2f delta %.2f  formula %.4e reference %.4e  err %.4e  %s\n", r.eps,
                    r.p0, r.lambda, r.delta, r.norm_sq_formula, r.norm_sq_reference, r.max_rel_error,
                    r.status.c_str());
        if (r.status == "failed") {
            ok = false;
            log(o, r.message);
        }
    }
    return ok ? 0 : 1;
}

int cmd_decompose(const Options& o) {
    const RunConfig cfg = effective_config(o);
    GridState state = packet_state(build_packet(cfg), cfg.grid, cfg.eps);
    if (cfg.packet.stage == PacketStage::Initial) {
        const double x_c = stokes_data(cfg.potential, cfg.window).x_c;
        const double dt = (cfg.time.T + cfg.time.t_star) / cfg.time.n_steps;
        state = semiclassical_fourier(evolve_to_crossing(inverse_semiclassical_fourier(state), cfg.potential, x_c,
                                                         cfg.time.T + cfg.time.t_star, dt)
                                          .state);
    }
    const FitResult fit = fit_gaussians(state, cfg.fit);
    json j = {{"packet", packet_to_json(fit.packet)},
              {"residual", fit.residual},
              {"above_tolerance", fit.above_tolerance},
              {"merged", fit.merged},
              {"iterations", fit.iterations}};
    write_json(cfg.output_dir / "decompose.json", j);
    std::cout << j.dump(2) << '\n';
    return fit.above_tolerance ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transmitted wave packets at tilted avoided crossings"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", o.out, "output directory (overrides the config)");
    app.add_option("--threads", o.threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
    app.add_flag("--verbose", o.verbose);
    app.add_option("--variant", o.variant)->check(CLI::IsMember({"full", "simplified"}));
    app.add_option("--offset-in", o.offset)->check(CLI::IsMember({"a10", "a01", "none"}));
    app.add_flag("--no-phase-shift", o.no_phase_shift);
    app.add_option("--hagedorn-mode", o.hagedorn)->check(CLI::IsMember({"leading", "hermite"}));

    auto* analyze = app.add_subcommand("analyze", "Stokes data of the potential");
    auto* transmit = app.add_subcommand("transmit", "transmitted state from the formula");
    auto* reference = app.add_subcommand("reference", "split-step reference run");
    auto* comp = app.add_subcommand("compare", "formula against reference");
    std::string formula_file, reference_file;
    std::optional<double> threshold;
    bool plot = false;
    comp->add_option("--formula", formula_file, "formula CSV (k, re, im, ...)");
    comp->add_option("--reference", reference_file, "reference CSV (k, re, im, ...)");
    comp->add_option("--threshold", threshold, "significance threshold relative to the peak");
    comp->add_flag("--plot", plot, "also write k vs abs/phase of both series");
    auto* sweep = app.add_subcommand("sweep", "parameter sweep");
    auto* decompose = app.add_subcommand("decompose", "fit the packet by complex Gaussians");

    // Global options may also follow the subcommand.
    for (auto* sub : {analyze, transmit, reference, comp, sweep, decompose}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);
    try {
        if (analyze->parsed()) return cmd_analyze(o);
        if (transmit->parsed()) return cmd_transmit(o);
        if (reference->parsed()) return cmd_reference(o);
        if (comp->parsed()) return cmd_compare(o, formula_file, reference_file, threshold, plot);
        if (sweep->parsed()) return cmd_sweep(o);
        if (decompose->parsed()) return cmd_decompose(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
