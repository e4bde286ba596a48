#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "proxflow/altproj.hpp"
#include "proxflow/cli.hpp"
#include "proxflow/errors.hpp"
#include "proxflow/experiments.hpp"
#include "proxflow/multistep.hpp"
#include "proxflow/prox.hpp"
#include "proxflow/spectral.hpp"
#include "proxflow/tables.hpp"

namespace py = pybind11;
using namespace proxflow;

namespace {

py::dict trace_dict(const ExperimentTrace& t) {
    py::dict d;
    std::vector<std::size_t> k;
    std::vector<double> v;
    for (const auto& p : t.points) {
        k.push_back(p.k);
        v.push_back(p.value);
    }
    d["experiment"] = t.experiment;
    d["seed"] = t.seed;
    d["tau"] = t.tau;
    d["metric"] = t.metric_name;
    d["k"] = k;
    d["value"] = v;
    d["diverged"] = t.diverged;
    return d;
}

py::list traces_list(const std::vector<ExperimentTrace>& traces) {
    py::list out;
    for (const auto& t : traces) out.append(trace_dict(t));
    return out;
}

py::list rows_list(const std::vector<TableRow>& rows) {
    py::list out;
    for (const auto& r : rows) {
        py::dict d;
        d["table"] = r.table;
        d["method"] = r.method;
        d["m"] = r.m;
        d["beta"] = r.beta;
        d["L"] = r.L;
        d["mu"] = r.mu;
        d["alpha"] = r.alpha;
        d["computed"] = r.computed;
        d["published"] = r.published;
        d["tolerance"] = r.tolerance;
        d["status"] = std::string(to_string(r.status));
        d["companion_discrepancy"] = r.companion_discrepancy;
        out.append(d);
    }
    return out;
}

WarmupPolicy warmup_of(const std::string& w) {
    if (w == "ramp") return WarmupPolicy::ramp;
    if (w == "repeat") return WarmupPolicy::repeat;
    throw ValidationError("warmup must be 'ramp' or 'repeat'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multistep proximal point methods";

    // translators run newest first, so the base class goes first
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

    m.def("prox_l1", &prox_l1, py::arg("x"), py::arg("t"));
    m.def("prox_lsp", &prox_lsp, py::arg("x"), py::arg("theta"), py::arg("beta"));
    m.def(
        "polynomial_max_root_modulus",
        [](const std::vector<double>& c) { return polynomial_max_root_modulus(c); }, py::arg("coeffs"));

    m.def("bdf_coefficients", [](int order) { return bdf_coefficients(order).xi; }, py::arg("order"));
    m.def(
        "delta_constant_exact",
        [](int order) {
            const auto r = delta_constant(bdf_coefficients(order).xi_exact);
            return py::make_tuple(r.num(), r.den());
        },
        py::arg("order"), "BDF delta constant as (numerator, denominator)");
    m.def(
        "delta_constant", [](const std::vector<double>& xi) { return delta_constant(xi); }, py::arg("xi"));
    m.def("gamma_bound", &gamma_bound, py::arg("beta"), py::arg("L"), py::arg("m"));

    m.def(
        "scalar_radius",
        [](double lambda, const std::vector<double>& xi, double alpha, double beta, int m_steps) {
            return scalar_radius(lambda, {xi, alpha, beta, m_steps});
        },
        py::arg("lam"), py::arg("xi"), py::arg("alpha"), py::arg("beta"), py::arg("m"));
    m.def(
        "spectrum_radius",
        [](const std::vector<double>& xi, double alpha, double beta, int m_steps, double mu, double L) {
            return spectrum_radius({xi, alpha, beta, m_steps}, mu, L);
        },
        py::arg("xi"), py::arg("alpha"), py::arg("beta"), py::arg("m"), py::arg("mu"), py::arg("L"));
    m.def(
        "max_stable_alpha",
        [](double mu, double L, double beta, int m_steps, const std::vector<double>& xi) -> py::object {
            const auto s = max_stable_alpha(mu, L, beta, m_steps, xi);
            if (!s.stable_found) return py::none();
            return py::float_(s.alpha);
        },
        py::arg("mu"), py::arg("L"), py::arg("beta"), py::arg("m"), py::arg("xi"),
        "Edge of the stable step interval, or None when no step is stable.");
    m.def(
        "optimal_rate",
        [](double mu, double L, double beta, int m_steps, const std::vector<double>& xi) {
            const auto r = optimal_rate(mu, L, beta, m_steps, xi);
            return py::make_tuple(r.rho, r.alpha);
        },
        py::arg("mu"), py::arg("L"), py::arg("beta"), py::arg("m"), py::arg("xi"), "Returns (rho, alpha).");

    m.def(
        "table2", [](bool ppm_only) { return rows_list(compute_table2({ppm_only})); }, py::arg("ppm_only") = false);
    m.def(
        "table3", [](bool ppm_only) { return rows_list(compute_table3({ppm_only})); }, py::arg("ppm_only") = false);

    m.def(
        "tuned_xi2",
        [](double rho) {
            const auto t = tuned_xi2(rho);
            return py::make_tuple(t.xi(), t.radius);
        },
        py::arg("rho"), "Returns ([xi1, xi2], radius).");
    m.def("multistep_altproj_radius", &multistep_altproj_radius, py::arg("lam"), py::arg("xi"));

    m.def(
        "run_l1",
        [](int p, int q, const std::string& spectrum, std::uint64_t seed, double lambda, const std::vector<int>& taus,
           double beta, int m_steps, std::size_t iterations, const std::string& warmup) {
            RunOptions o;
            o.beta = beta;
            o.inner_m = m_steps;
            o.iterations = iterations;
            o.warmup = warmup_of(warmup);
            const auto problem = gen_sensing(p, q, parse_spectrum_kind(spectrum), seed);
            py::gil_scoped_release release;
            auto traces = run_l1(problem, lambda, taus, o).traces;
            py::gil_scoped_acquire acquire;
            return traces_list(traces);
        },
        py::arg("p") = 50, py::arg("q") = 100, py::arg("spectrum") = "uniform", py::arg("seed") = 7,
        py::arg("lam") = 0.1, py::arg("taus") = std::vector<int>{1, 2, 3}, py::arg("beta") = 1.0, py::arg("m") = 1,
        py::arg("iterations") = 1000, py::arg("warmup") = "ramp");
    m.def(
        "run_lsp",
        [](int p, int q, const std::string& spectrum, std::uint64_t seed, double theta, const std::vector<int>& taus,
           double beta, int m_steps, std::size_t iterations, const std::string& warmup) {
            RunOptions o;
            o.beta = beta;
            o.inner_m = m_steps;
            o.iterations = iterations;
            o.warmup = warmup_of(warmup);
            const auto problem = gen_sensing(p, q, parse_spectrum_kind(spectrum), seed);
            return traces_list(run_lsp(problem, theta, taus, o).traces);
        },
        py::arg("p") = 20, py::arg("q") = 50, py::arg("spectrum") = "uniform", py::arg("seed") = 7,
        py::arg("theta") = 10.0, py::arg("taus") = std::vector<int>{1, 2, 3}, py::arg("beta") = 0.5, py::arg("m") = 1,
        py::arg("iterations") = 1000, py::arg("warmup") = "ramp");
    m.def(
        "run_altproj",
        [](int n, int d, double sigma, std::uint64_t seed, const std::vector<int>& taus, std::size_t iterations) {
            AltProjOptions o;
            o.iterations = iterations;
            std::vector<ExperimentTrace> traces;
            for (auto& r : run_altproj(gen_subspaces(n, d, sigma, seed), taus, o)) traces.push_back(std::move(r.trace));
            return traces_list(traces);
        },
        py::arg("n") = 500, py::arg("d") = 400, py::arg("sigma") = 0.1, py::arg("seed") = 7,
        py::arg("taus") = std::vector<int>{1, 2, 3}, py::arg("iterations") = 200);
    m.def(
        "run_matfac",
        [](int n, int rank, double alpha, std::uint64_t seed, const std::vector<int>& taus, std::size_t iterations) {
            MatFacOptions o;
            o.iterations = iterations;
            std::vector<ExperimentTrace> traces;
            for (auto& r : run_matfac(gen_matfac(n, rank, alpha, seed), taus, o)) traces.push_back(std::move(r.trace));
            return traces_list(traces);
        },
        py::arg("n") = 100, py::arg("rank") = 10, py::arg("alpha") = 1.0, py::arg("seed") = 7,
        py::arg("taus") = std::vector<int>{1, 2, 3}, py::arg("iterations") = 200);

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command line in-process; returns (exit_code, stdout, stderr).");
}
