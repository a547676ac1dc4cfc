#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>

#include "dgn/error.hpp"
#include "dgn/harness.hpp"
#include "dgn/problems.hpp"
#include "dgn/solvers.hpp"

namespace py = pybind11;
using namespace dgn;

namespace {

SolverConfig solver_config(const py::dict& kwargs) {
    SolverConfig c;
    for (auto [key, value] : kwargs) {
        const auto k = key.cast<std::string>();
        if (k == "step_tol") c.step_tol = value.cast<double>();
        else if (k == "max_iters") c.max_iters = value.cast<int>();
        else if (k == "epsilon") c.epsilon = value.cast<double>();
        else if (k == "min_norm_fallback") c.min_norm_fallback = value.cast<bool>();
        else throw py::type_error("unknown solver option '" + k + "'");
    }
    c.validate();
    return c;
}

DeflationState<double> state_from(const std::vector<RealVector>& points) {
    DeflationState<double> state;
    for (const auto& y : points) state = state.with_point(y);
    return state;
}

py::dict result_dict(const SolveResult<double>& r) {
    py::dict d;
    d["x"] = r.x;
    d["status"] = std::string(to_string(r.status));
    d["message"] = r.message;
    d["iterations"] = r.iterations;
    d["residual_norm"] = r.residual_norm;
    d["objective"] = r.objective;
    d["grad_norm"] = r.grad_norm;
    d["residual_evals"] = r.counts.residual;
    d["jacobian_evals"] = r.counts.jacobian;
    py::list trace;
    for (const auto& rec : r.trace) {
        py::dict t;
        t["x"] = rec.x;
        t["objective"] = rec.objective;
        t["beta"] = rec.beta;
        t["alpha"] = rec.alpha;
        t["branch"] = std::string(to_string(rec.branch));
        trace.append(t);
    }
    d["trace"] = trace;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Deflated Newton and Gauss-Newton solvers";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<Problem<double>>(m, "Problem")
        .def_readonly("name", &Problem<double>::name)
        .def_readonly("num_params", &Problem<double>::num_params)
        .def_readonly("num_residuals", &Problem<double>::num_residuals)
        .def("residual", [](const Problem<double>& p, const RealVector& x) { return p.residual(x); })
        .def("jacobian", [](const Problem<double>& p, const RealVector& x) { return p.jacobian(x); })
        .def("objective", &Problem<double>::objective)
        .def("gradient", &Problem<double>::gradient);

    m.def("himmelblau", &himmelblau);
    m.def("ftrig", &ftrig, py::arg("a") = 10.0);
    m.def("mn12", [](const RealVector& planted) { return mn12_problem(planted); },
          py::arg("planted") = mn12_default_parameters());
    m.def("mn12_isospectral_partner", &mn12_isospectral_partner);

    m.def(
        "solve",
        [](const Problem<double>& p, const std::string& method, const RealVector& x0,
           const std::vector<RealVector>& deflated, const py::kwargs& kwargs) {
            return result_dict(solve(method_from_string(method), p, x0, solver_config(kwargs), state_from(deflated)));
        },
        py::arg("problem"), py::arg("method"), py::arg("x0"), py::arg("deflated") = std::vector<RealVector>{},
        "One solve from x0 with the given points deflated. Options: step_tol, max_iters, epsilon, min_norm_fallback.");

    m.def(
        "deflation_loop",
        [](const Problem<double>& p, const std::string& method, const RealVector& x0, int rounds,
           bool stop_on_failure, const py::kwargs& kwargs) {
            DeflationLoopOptions opt;
            opt.rounds = rounds;
            opt.stop_on_failure = stop_on_failure;
            const auto loop = deflation_loop<double>(method_from_string(method), p, x0, solver_config(kwargs), {}, opt);
            py::list solutions;
            for (const auto& s : loop.solutions.items()) solutions.append(s.x);
            py::list rounds_out;
            for (const auto& r : loop.rounds) rounds_out.append(result_dict(r.result));
            py::dict d;
            d["solutions"] = solutions;
            d["rounds"] = rounds_out;
            d["residual_evals"] = loop.counts.residual;
            d["jacobian_evals"] = loop.counts.jacobian;
            return d;
        },
        py::arg("problem"), py::arg("method"), py::arg("x0"), py::arg("rounds"), py::arg("stop_on_failure") = true);

    m.def(
        "run_experiment_json",
        [](const std::string& config_json, bool write_outputs) {
            const auto config = config_from_json(nlohmann::json::parse(config_json));
            RunReport report;
            {
                py::gil_scoped_release release;
                report = run_experiment(config, write_outputs);
            }
            return report.to_json().dump();
        },
        py::arg("config_json"), py::arg("write_outputs") = false);

    m.def(
        "beta_field_json",
        [](const std::string& config_json) {
            const auto config = config_from_json(nlohmann::json::parse(config_json));
            const auto report = emit_beta_field(config, false);
            const Index nx = report.field.grid.nx, ny = report.field.grid.ny;
            RealMatrix beta(ny, nx);
            for (Index j = 0; j < ny; ++j)
                for (Index i = 0; i < nx; ++i)
                    beta(j, i) = report.field.at(i, j).value_or(std::numeric_limits<double>::quiet_NaN());
            RealVector xs(nx), ys(ny);
            for (Index i = 0; i < nx; ++i) xs(i) = report.field.grid.x_at(i);
            for (Index j = 0; j < ny; ++j) ys(j) = report.field.grid.y_at(j);
            return py::make_tuple(xs, ys, beta, report.deflated_points);
        },
        py::arg("config_json"));

    m.def("list_problems", [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& e : problem_registry()) out.emplace_back(e.name, e.description);
        return out;
    });
    m.def("list_methods", [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& e : method_registry()) out.emplace_back(e.name, e.description);
        return out;
    });
}
