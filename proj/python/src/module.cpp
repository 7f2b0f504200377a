// Python bindings. Configurations cross the boundary as JSON text; the Python
// package converts dicts with the json module.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tiltcross/config.hpp"
#include "tiltcross/decompose.hpp"
#include "tiltcross/error.hpp"
#include "tiltcross/pipeline.hpp"
#include "tiltcross/recursions.hpp"

namespace py = pybind11;
using namespace tiltcross;
using nlohmann::json;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ComplexArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

RunConfig parse(const std::string& text) { return config_from_json(json::parse(text)); }

std::vector<double> to_vec(const RealArray& a) { return {a.data(), a.data() + a.size()}; }
std::vector<cplx> to_vec(const ComplexArray& a) { return {a.data(), a.data() + a.size()}; }

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
    py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::dict transition_dict(const TransitionResult& r) {
    std::vector<int> flags(r.flags.size());
    for (std::size_t i = 0; i < flags.size(); ++i) flags[i] = static_cast<int>(r.flags[i]);
    py::dict d;
    d["k"] = to_array(r.k);
    d["psi"] = to_array(r.psi);
    d["flags"] = to_array(flags);
    d["norm_sq"] = r.norm_sq;
    d["n0"] = r.order.n0;
    d["k0"] = r.order.k0;
    d["eta0"] = r.order.eta0;
    d["phi"] = r.phi;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Transmitted wavepackets at tilted avoided crossings";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    m.def(
        "default_config", [] { return to_json(RunConfig{}).dump(); }, "Every configuration field with its default.");

    m.def(
        "stokes_data",
        [](const std::string& cfg_text) {
            const RunConfig cfg = parse(cfg_text);
            return stokes_to_json(stokes_data(cfg.potential, cfg.window)).dump();
        },
        py::arg("config"));

    m.def("select_n0",
          [](double delta, double tau_c, double eps, double c, double p0) {
              const auto o = select_n0(delta, tau_c, eps, c, p0);
              return py::make_tuple(o.n0, o.k0, o.eta0);
          },
          py::arg("delta"), py::arg("tau_c"), py::arg("eps"), py::arg("c"), py::arg("p0"));

    m.def(
        "transmit",
        [](const std::string& cfg_text, std::optional<RealArray> k) {
            const RunConfig cfg = parse(cfg_text);
            const auto kk = k ? to_vec(*k) : cfg.grid.momenta(cfg.eps);
            const auto stokes = stokes_data(cfg.potential, cfg.window);
            return transition_dict(transmit(cfg.eps, stokes, build_packet(cfg), kk, cfg.formula));
        },
        py::arg("config"), py::arg("k") = py::none());

    m.def(
        "run_formula",
        [](const std::string& cfg_text) {
            const FormulaRun r = run_formula(parse(cfg_text));
            py::dict d = transition_dict(r.result);
            d["t_cross"] = r.t_cross;
            d["seconds"] = r.seconds;
            if (r.fit) d["fit"] = packet_to_json(r.fit->packet).dump();
            return d;
        },
        py::arg("config"));

    m.def(
        "run_reference",
        [](const std::string& cfg_text) {
            ReferenceResult r;
            {
                py::gil_scoped_release release;
                r = run_reference(parse(cfg_text));
            }
            py::dict d;
            d["k"] = to_array(r.lower.axis());
            d["psi"] = to_array(r.lower[0]);
            d["t_cross"] = r.t_cross;
            d["seconds"] = r.seconds;
            return d;
        },
        py::arg("config"));

    m.def(
        "compare",
        [](const RealArray& k, const ComplexArray& formula, const ComplexArray& reference, double threshold) {
            const auto kk = to_vec(k);
            const auto f = to_vec(formula), r = to_vec(reference);
            return report_to_json(compare(kk, f, r, threshold)).dump();
        },
        py::arg("k"), py::arg("formula"), py::arg("reference"), py::arg("threshold") = 1e-3);

    m.def(
        "fit_gaussians",
        [](const std::string& cfg_text, const ComplexArray& psi, int n_terms) {
            const RunConfig cfg = parse(cfg_text);
            GridState st(cfg.eps, cfg.grid, Space::Momentum, 1);
            if (static_cast<std::size_t>(psi.size()) != cfg.grid.n_points)
                throw Error(ErrorCode::GridMismatch, "psi must be sampled on the configured momentum grid");
            st[0] = to_vec(psi);
            FitConfig fc = cfg.fit;
            fc.n_terms = n_terms;
            const FitResult r = fit_gaussians(st, fc);
            return py::make_tuple(packet_to_json(r.packet).dump(), r.residual);
        },
        py::arg("config"), py::arg("psi"), py::arg("n_terms"));

    m.def(
        "kappa_asymptotic",
        [](const std::string& cfg_text, int n, const RealArray& q) {
            const RunConfig cfg = parse(cfg_text);
            const auto qq = to_vec(q);
            return to_array(kappa_asymptotic(n, qq, cfg.potential, stokes_data(cfg.potential, cfg.window)));
        },
        py::arg("config"), py::arg("n"), py::arg("q"));

    m.def(
        "coupling_fourier",
        [](const std::string& cfg_text, int n, const RealArray& k) {
            const RunConfig cfg = parse(cfg_text);
            const auto kk = to_vec(k);
            return to_array(coupling_fourier(n, kk, stokes_data(cfg.potential, cfg.window), cfg.eps));
        },
        py::arg("config"), py::arg("n"), py::arg("k"));
}
