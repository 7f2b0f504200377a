#include "tiltcross/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "tiltcross/error.hpp"
#include "tiltcross/splitstep.hpp"

namespace tiltcross {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double step_size(const RunConfig& cfg) { return (cfg.time.T + cfg.time.t_star) / cfg.time.n_steps; }

int steps_for(double span, double dt) {
    return std::max(1, static_cast<int>(std::lround(std::abs(span) / dt)));
}

void check_edge(std::vector<Monitor>& monitors, const GridState& pos, const std::string& leg, double limit) {
    const double m = edge_mass(pos);
    monitors.push_back({"edge_mass_" + leg, m, limit, m <= limit});
    if (m > limit) {
        std::ostringstream os;
        os << leg << " leg: edge mass " << m << " above " << limit;
        throw Error(ErrorCode::EdgeMassExceeded, os.str());
    }
}

GridState one_component(const GridState& s, std::size_t c) {
    GridState out(s.eps, s.grid, s.space, 1);
    out[0] = s[c];
    return out;
}

// Upper-surface run from the initial packet to the crossing.
CrossingResult run_to_crossing(const RunConfig& cfg, const GridState& start_pos, double x_c) {
    const double dt = step_size(cfg);
    return evolve_to_crossing(start_pos, cfg.potential, x_c, cfg.time.T + cfg.time.t_star, dt);
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

}  // namespace

json stokes_to_json(const StokesData& s) {
    return {{"x_c", s.x_c},
            {"delta", s.delta},
            {"d0", s.d0},
            {"lambda", s.lambda},
            {"q_delta_re", s.q_delta.real()},
            {"q_delta_im", s.q_delta.imag()},
            {"tau_r", s.tau_r()},
            {"tau_c", s.tau_c()}};
}

ReferenceResult run_reference(const RunConfig& cfg) {
    cfg.validate();
    const auto t0 = Clock::now();
    const double eps = cfg.eps;
    const double T = cfg.time.T, ts = cfg.time.t_star;
    const double dt = step_size(cfg);
    const auto& pot = cfg.potential;
    ReferenceResult res;

    const GridState packet = packet_state(build_packet(cfg), cfg.grid, eps);
    GridState upper;
    if (cfg.packet.stage == PacketStage::Crossing) {
        upper = inverse_semiclassical_fourier(propagate(
            {eps, 0.0, -T, steps_for(T, dt), cfg.grid, {SurfaceKind::UpperAdiabatic}}, pot, packet));
    } else {
        upper = inverse_semiclassical_fourier(packet);
        const double x_c = stokes_data(pot, cfg.window).x_c;
        res.t_cross = -T + run_to_crossing(cfg, upper, x_c).t0;
    }
    check_edge(res.monitors, upper, "upper", cfg.edge_mass_limit);

    GridState two(eps, cfg.grid, Space::Position, 2);
    two[0] = upper[0];
    GridState coupled = propagate({eps, -T, ts, cfg.time.n_steps, cfg.grid, {SurfaceKind::CoupledDiabatic}}, pot,
                                  adiabatic_transform(two, pot));
    check_edge(res.monitors, coupled, "coupled", cfg.edge_mass_limit);

    GridState lower = one_component(adiabatic_transform(coupled, pot), 1);
    lower = propagate({eps, ts, res.t_cross, steps_for(ts - res.t_cross, dt), cfg.grid, {SurfaceKind::LowerAdiabatic}},
                      pot, std::move(lower));
    check_edge(res.monitors, lower, "lower", cfg.edge_mass_limit);

    res.lower = semiclassical_fourier(lower);
    res.seconds = seconds_since(t0);
    return res;
}

FormulaRun run_formula(const RunConfig& cfg) {
    cfg.validate();
    const auto t0 = Clock::now();
    FormulaRun run;
    const StokesData stokes = stokes_data(cfg.potential, cfg.window);
    const auto k = cfg.grid.momenta(cfg.eps);
    const Packet packet = build_packet(cfg);

    if (cfg.packet.stage == PacketStage::Crossing) {
        run.result = transmit(cfg.eps, stokes, packet, k, cfg.formula);
    } else {
        const GridState start = inverse_semiclassical_fourier(packet_state(packet, cfg.grid, cfg.eps));
        const CrossingResult crossing = run_to_crossing(cfg, start, stokes.x_c);
        run.t_cross = -cfg.time.T + crossing.t0;
        // Positions are measured from the crossing; the packet's centre offset
        // is carried by the fitted x_j.
        run.fit = fit_gaussians(semiclassical_fourier(crossing.state), cfg.fit);
        run.monitors.push_back(
            {"fit_residual", run.fit->residual, cfg.fit.tolerance, !run.fit->above_tolerance});
        run.result = transmit(cfg.eps, stokes, run.fit->packet, k, cfg.formula);
    }
    run.monitors.push_back({"constraint_violations", static_cast<double>(run.result.violations()), 0.0,
                            run.result.violations() == 0});

    if (cfg.write_evolved) {
        GridState s(cfg.eps, cfg.grid, Space::Momentum, 1);
        s[0] = run.result.psi;
        const double before = s.norm_sq();
        const double span = cfg.time.t_star - run.t_cross;
        GridState after = propagate({cfg.eps, run.t_cross, cfg.time.t_star, steps_for(span, step_size(cfg)), cfg.grid,
                                     {SurfaceKind::LowerAdiabatic}},
                                    cfg.potential, std::move(s));
        const double drift = before > 0.0 ? std::abs(after.norm_sq() - before) / before : 0.0;
        run.monitors.push_back({"step3_norm_drift", drift, 1e-12, drift <= 1e-12});
        run.evolved = std::move(after);
    }
    run.seconds = seconds_since(t0);
    return run;
}

ComparisonReport compare(std::span<const double> k, std::span<const cplx> formula, std::span<const cplx> reference,
                         double threshold, std::span<const PointFlag> mask) {
    if (formula.size() != reference.size() || k.size() != reference.size() ||
        (!mask.empty() && mask.size() != reference.size()))
        throw Error(ErrorCode::GridMismatch, "formula and reference series differ in length");
    if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");

    ComparisonReport r;
    double peak = 0.0;
    for (const auto& v : reference) peak = std::max(peak, std::abs(v));
    if (!(peak > 0.0)) throw Error(ErrorCode::ZeroNorm, "reference vanishes identically");

    double diff_sq = 0.0, ref_sq = 0.0, phase_prev = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double a = std::abs(reference[i]);
        if (a < threshold * peak) continue;
        if (!mask.empty() && mask[i] != PointFlag::Ok) {
            ++r.masked;
            continue;
        }
        const cplx f = formula[i];
        r.k.push_back(k[i]);
        r.rel_error.push_back(std::abs(f - reference[i]) / a);
        r.modulus_error.push_back((std::abs(f) - a) / a);
        double ph = std::arg(f * std::conj(reference[i]));
        if (!first) ph += 2.0 * std::numbers::pi * std::round((phase_prev - ph) / (2.0 * std::numbers::pi));
        first = false;
        phase_prev = ph;
        r.phase_error.push_back(ph);
        diff_sq += std::norm(f - reference[i]);
        ref_sq += a * a;
        r.max_rel_error = std::max(r.max_rel_error, r.rel_error.back());
        r.max_modulus_error = std::max(r.max_modulus_error, std::abs(r.modulus_error.back()));
        r.max_phase_error = std::max(r.max_phase_error, std::abs(ph));
    }
    if (r.k.empty()) throw Error(ErrorCode::InvalidArgument, "significant region is empty");
    r.l2_rel_error = std::sqrt(diff_sq / ref_sq);

    std::vector<double> kk(k.begin(), k.end());
    std::vector<cplx> f(formula.begin(), formula.end()), g(reference.begin(), reference.end());
    r.norm_sq_formula = trapezoid_norm_sq(kk, f);
    r.norm_sq_reference = trapezoid_norm_sq(kk, g);
    return r;
}

json report_to_json(const ComparisonReport& r) {
    return {{"norm_sq_formula", r.norm_sq_formula},
            {"norm_sq_reference", r.norm_sq_reference},
            {"region_points", r.k.size()},
            {"region_k_min", r.k.front()},
            {"region_k_max", r.k.back()},
            {"masked_points", r.masked},
            {"max_rel_error", r.max_rel_error},
            {"max_modulus_error", r.max_modulus_error},
            {"max_phase_error", r.max_phase_error},
            {"l2_rel_error", r.l2_rel_error},
            {"seconds_formula", r.seconds_formula},
            {"seconds_reference", r.seconds_reference}};
}

double refinement_distance(const GridState& coarse, const GridState& fine) {
    if (coarse.space != Space::Momentum || fine.space != Space::Momentum)
        throw Error(ErrorCode::InvalidArgument, "refinement_distance compares momentum-space states");
    const double dk = coarse.grid.dk(coarse.eps);
    if (std::abs(fine.grid.dk(fine.eps) - dk) > 1e-12 * dk)
        throw Error(ErrorCode::GridMismatch, "momentum spacings differ");
    const auto kc = coarse.axis();
    const auto kf = fine.axis();
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < kc.size(); ++i) {
        const double pos = (kc[i] - kf.front()) / dk;
        const long j = std::lround(pos);
        if (j < 0 || j >= static_cast<long>(kf.size()) || std::abs(pos - j) > 1e-6)
            throw Error(ErrorCode::GridMismatch, "coarse momenta are not a subset of the fine grid");
        diff += std::norm(coarse[0][i] - fine[0][static_cast<std::size_t>(j)]);
        norm += std::norm(fine[0][static_cast<std::size_t>(j)]);
    }
    return std::sqrt(diff / norm);
}

RunConfig sweep_config(const RunConfig& cfg, double eps, double p0, double lambda, double delta) {
    RunConfig rc = cfg;
    rc.eps = eps;
    const double shift = p0 - rc.packet.terms.front().p0;
    for (auto& t : rc.packet.terms) t.p0 += shift;
    auto kind = rc.potential.kind();
    if (auto* p = std::get_if<ParametricTanh>(&kind)) {
        p->lambda_tilt = lambda;
        p->delta_gap = delta;
    } else if (auto* lz = std::get_if<LandauZenerLinear>(&kind)) {
        if (lambda != 0.0) throw Error(ErrorCode::ConfigError, "the linear potential has no tilt");
        lz->delta_gap = delta;
    } else {
        throw Error(ErrorCode::ConfigError, "series potentials cannot be swept");
    }
    rc.potential = DiabaticPotential(kind);
    rc.write_evolved = false;
    return rc;
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, int threads) {
    const auto base = [&]() {
        SweepRow r;
        r.eps = cfg.eps;
        r.p0 = cfg.packet.terms.front().p0;
        const auto& kind = cfg.potential.kind();
        if (const auto* p = std::get_if<ParametricTanh>(&kind)) {
            r.lambda = p->lambda_tilt;
            r.delta = p->delta_gap;
        } else if (const auto* lz = std::get_if<LandauZenerLinear>(&kind)) {
            r.delta = lz->delta_gap;
        }
        return r;
    }();
    auto or_base = [](const std::vector<double>& v, double b) { return v.empty() ? std::vector<double>{b} : v; };
    const auto E = or_base(cfg.sweep.eps, base.eps);
    const auto P = or_base(cfg.sweep.p0, base.p0);
    const auto L = or_base(cfg.sweep.lambda, base.lambda);
    const auto D = or_base(cfg.sweep.delta, base.delta);

    std::vector<SweepRow> rows;
    for (double e : E)
        for (double p : P)
            for (double l : L)
                for (double d : D) {
                    SweepRow r;
                    r.eps = e, r.p0 = p, r.lambda = l, r.delta = d;
                    rows.push_back(r);
                }

    auto work = [&](SweepRow& row) {
        try {
            const RunConfig rc = sweep_config(cfg, row.eps, row.p0, row.lambda, row.delta);
            const ReferenceResult ref = run_reference(rc);
            const FormulaRun f = run_formula(rc);
            row.norm_sq_reference = ref.lower.component_norm_sq(0);
            row.norm_sq_formula = f.result.norm_sq;
            if (row.norm_sq_reference < cfg.sweep.floor) {
                row.status = "unverified";
                row.max_rel_error = row.l2_rel_error = std::numeric_limits<double>::quiet_NaN();
                return;
            }
            const auto rep = compare(f.result.k, f.result.psi, ref.lower[0], rc.threshold, f.result.flags);
            row.max_rel_error = rep.max_rel_error;
            row.l2_rel_error = rep.l2_rel_error;
            row.status = "ok";
        } catch (const std::exception& e) {
            row.status = "failed";
            row.message = e.what();
            row.max_rel_error = row.l2_rel_error = std::numeric_limits<double>::quiet_NaN();
        }
    };

    std::size_t n_threads = threads > 0 ? static_cast<std::size_t>(threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, rows.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) work(rows[i]);
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

void write_transition_csv(const std::filesystem::path& path, const TransitionResult& r) {
    auto out = open_out(path);
    out << "k,re,im,abs,phase,margin\n";
    for (std::size_t i = 0; i < r.k.size(); ++i)
        out << r.k[i] << ',' << r.psi[i].real() << ',' << r.psi[i].imag() << ',' << std::abs(r.psi[i]) << ','
            << std::arg(r.psi[i]) << ',' << r.margin[i] << '\n';
}

void write_state_csv(const std::filesystem::path& path, const GridState& s) {
    {
        auto out = open_out(path);
        out << (s.space == Space::Position ? "x" : "k");
        const bool multi = s.n_components() > 1;
        for (std::size_t c = 0; c < s.n_components(); ++c) {
            const std::string sfx = multi ? std::to_string(c) : "";
            out << ",re" << sfx << ",im" << sfx;
        }
        if (!multi) out << ",abs,phase";
        out << '\n';
        const auto axis = s.axis();
        for (std::size_t i = 0; i < axis.size(); ++i) {
            out << axis[i];
            for (std::size_t c = 0; c < s.n_components(); ++c) out << ',' << s[c][i].real() << ',' << s[c][i].imag();
            if (!multi) out << ',' << std::abs(s[0][i]) << ',' << std::arg(s[0][i]);
            out << '\n';
        }
    }
    auto header = path;
    header.replace_extension(".json");
    write_json(header, {{"eps", s.eps},
                        {"x_min", s.grid.x_min},
                        {"x_max", s.grid.x_max},
                        {"n_points", s.grid.n_points},
                        {"space", s.space == Space::Position ? "position" : "momentum"},
                        {"components", s.n_components()}});
}

void write_report_csv(const std::filesystem::path& path, const ComparisonReport& r) {
    auto out = open_out(path);
    out << "k,rel_error,modulus_error,phase_error\n";
    for (std::size_t i = 0; i < r.k.size(); ++i)
        out << r.k[i] << ',' << r.rel_error[i] << ',' << r.modulus_error[i] << ',' << r.phase_error[i] << '\n';
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
    auto out = open_out(path);
    out << "eps,p0,lambda,delta,norm_sq_formula,norm_sq_reference,max_rel_error,l2_rel_error,status,message\n";
    for (const auto& r : rows) {
        std::string msg = r.message;
        for (auto& ch : msg)
            if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
        out << r.eps << ',' << r.p0 << ',' << r.lambda << ',' << r.delta << ',' << r.norm_sq_formula << ','
            << r.norm_sq_reference << ',' << r.max_rel_error << ',' << r.l2_rel_error << ',' << r.status << ','
            << msg << '\n';
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

SeriesFile read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    SeriesFile f;
    std::string line;
    std::getline(in, line);  // header
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, re, im;
        if (!std::getline(ls, a, ',') || !std::getline(ls, re, ',') || !std::getline(ls, im, ','))
            throw Error(ErrorCode::IoError, path.string() + ": short row " + std::to_string(row));
        try {
            f.axis.push_back(std::stod(a));
            f.values.emplace_back(std::stod(re), std::stod(im));
        } catch (const std::exception&) {
            throw Error(ErrorCode::IoError, path.string() + ": bad number in row " + std::to_string(row));
        }
    }
    return f;
}

}  // namespace tiltcross
