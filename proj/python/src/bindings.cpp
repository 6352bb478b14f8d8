// Copyright 2026 The qtraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qtraj/ame.hpp"
#include "qtraj/config.hpp"
#include "qtraj/ensemble.hpp"

namespace py = pybind11;
using namespace qtraj;

namespace {

PauliAxis parse_axis(const std::string& a) {
    if (a == "x") return PauliAxis::X;
    if (a == "y") return PauliAxis::Y;
    if (a == "z") return PauliAxis::Z;
    throw std::invalid_argument("axis must be \"x\", \"y\" or \"z\" (got \"" + a + "\")");
}

const char* axis_name(PauliAxis a) {
    switch (a) {
        case PauliAxis::X: return "x";
        case PauliAxis::Y: return "y";
        default: return "z";
    }
}

IntegratorOptions integrator(double dt_safety, int m_levels, int rebuild_every) {
    IntegratorOptions o;
    o.dt_safety = dt_safety;
    o.binning.m_levels = m_levels;
    o.rebuild_every = rebuild_every;
    return o;
}

py::dict jump_dict(const JumpEvent& e) {
    py::dict d;
    d["s"] = e.s_jump;
    d["op"] = e.op;
    d["channel"] = e.channel;
    d["omega"] = e.omega;
    d["pre_gs_overlap"] = e.pre_gs_overlap;
    d["post_gs_overlap"] = e.post_gs_overlap;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Quantum trajectories for the adiabatic master equation of transverse-field Ising models.";

    py::class_<AnnealSchedule>(m, "AnnealSchedule")
        .def(py::init<>())
        .def(py::init([](const std::vector<std::tuple<double, double, double>>& knots) {
                 std::vector<ScheduleKnot> k;
                 for (const auto& [s, a, b] : knots) k.push_back({s, a, b});
                 return AnnealSchedule(std::move(k));
             }),
             py::arg("knots"), "Piecewise-linear schedule from (s, A, B) knots, A and B in rad/ns.")
        .def_static("linear", &AnnealSchedule::linear, py::arg("A0"), py::arg("B0"))
        .def_static("constant", &AnnealSchedule::constant, py::arg("A"), py::arg("B"))
        .def("__call__",
             [](const AnnealSchedule& sch, double s) {
                 const auto v = sch.eval(s);
                 return py::make_tuple(v.A, v.B);
             },
             py::arg("s"))
        .def("derivative",
             [](const AnnealSchedule& sch, double s) {
                 const auto v = sch.eval(s);
                 return py::make_tuple(v.dA_ds, v.dB_ds);
             },
             py::arg("s"))
        .def_property_readonly("knots", [](const AnnealSchedule& sch) {
            std::vector<std::tuple<double, double, double>> out;
            for (const auto& k : sch.knots()) out.emplace_back(k.s, k.A, k.B);
            return out;
        });

    py::class_<IsingSpec>(m, "IsingSpec")
        .def(py::init<>())
        .def_readwrite("n", &IsingSpec::n)
        .def_readwrite("h", &IsingSpec::h)
        .def_property(
            "J",
            [](const IsingSpec& s) {
                std::vector<std::tuple<int, int, double>> out;
                for (const auto& c : s.J) out.emplace_back(c.i, c.j, c.J);
                return out;
            },
            [](IsingSpec& s, const std::vector<std::tuple<int, int, double>>& v) {
                s.J.clear();
                for (const auto& [i, j, w] : v) s.J.push_back({i, j, w});
            })
        .def_readwrite("schedule", &IsingSpec::schedule)
        .def_readwrite("t_f", &IsingSpec::t_f, "Anneal time in ns.")
        .def("validate", &IsingSpec::validate)
        .def_property_readonly("dimension", &IsingSpec::dimension);

    py::class_<BathSpec>(m, "BathSpec")
        .def(py::init<>())
        .def_static("from_ghz", &BathSpec::from_ghz, py::arg("g2"), py::arg("temperature_GHz"),
                    py::arg("omega_c_GHz") = 4.0)
        .def_readwrite("g2", &BathSpec::g2)
        .def_readwrite("beta", &BathSpec::beta, "Inverse temperature in ns/rad.")
        .def_readwrite("omega_c", &BathSpec::omega_c, "Cutoff in rad/ns.")
        .def_property(
            "couplings",
            [](const BathSpec& b) {
                std::vector<std::pair<int, std::string>> out;
                for (const auto& c : b.coupling_ops) out.emplace_back(c.qubit, axis_name(c.axis));
                return out;
            },
            [](BathSpec& b, const std::vector<std::pair<int, std::string>>& v) {
                b.coupling_ops.clear();
                for (const auto& [q, a] : v) b.coupling_ops.push_back({q, parse_axis(a)});
            },
            "(qubit, axis) pairs; empty means sigma^z on every qubit.")
        .def("validate", &BathSpec::validate);

    m.def("chain_problem", &chain_problem, py::arg("n"));
    m.def("builtin_problem", [](const std::string& name) { return builtin_problem(name); }, py::arg("name"));
    m.def("builtin_problem_names", &builtin_problem_names);
    m.def("default_schedule", &default_schedule);

    m.def(
        "gamma_ohmic",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> omega, const BathSpec& bath) {
            py::array_t<double> out(omega.request().shape);
            const double* in = omega.data();
            double* o = out.mutable_data();
            for (py::ssize_t i = 0; i < omega.size(); ++i) o[i] = gamma_ohmic(in[i], bath);
            return out;
        },
        py::arg("omega"), py::arg("bath"), "Ohmic rate in rad/ns, elementwise over omega.");
    m.def("hamiltonian", [](const IsingSpec& spec, double s) { return build_hamiltonian(spec, s).dense(); },
          py::arg("spec"), py::arg("s"), "Dense H_S(s) in rad/ns.");

    m.def(
        "adiabatic_diagnostic",
        [](const IsingSpec& spec, int points) {
            const auto r = adiabatic_diagnostic(spec, points);
            py::dict d;
            d["ratio"] = r.ratio;
            d["min_gap"] = r.min_gap;
            d["s_min_gap"] = r.s_min_gap;
            d["max_element"] = r.max_element;
            return d;
        },
        py::arg("spec"), py::arg("points") = 201);

    m.def(
        "solve_ame",
        [](const IsingSpec& spec, const BathSpec& bath, int grid_points, int levels, double dt_safety, int m_levels,
           int rebuild_every) {
            AmeOptions o;
            o.integrator = integrator(dt_safety, m_levels, rebuild_every);
            o.sample_grid = uniform_grid(grid_points);
            o.levels = levels;
            PopulationTrace t;
            {
                py::gil_scoped_release release;
                t = solve_ame(spec, bath, o);
            }
            py::dict d;
            d["grid"] = t.grid;
            d["populations"] = t.populations;
            d["steps"] = t.steps;
            d["max_trace_error"] = t.max_trace_error;
            d["min_eigenvalue"] = t.min_eigenvalue;
            return d;
        },
        py::arg("spec"), py::arg("bath"), py::arg("grid_points") = 101, py::arg("levels") = 2,
        py::arg("dt_safety") = 0.05, py::arg("m_levels") = 0, py::arg("rebuild_every") = 1);

    m.def(
        "run_ensemble",
        [](const IsingSpec& spec, const BathSpec& bath, std::size_t trajectories, std::uint64_t seed, int grid_points,
           int levels, int workers, std::size_t batch_size, int bootstrap, double dt_safety, int m_levels,
           int rebuild_every) {
            EnsembleOptions o;
            o.trajectory.integrator = integrator(dt_safety, m_levels, rebuild_every);
            o.trajectory.sample_grid = uniform_grid(grid_points);
            o.trajectory.levels = levels;
            o.trajectories = trajectories;
            o.master_seed = seed;
            o.workers = workers;
            o.batch_size = batch_size;
            o.bootstrap = bootstrap;
            EnsembleResult r;
            {
                py::gil_scoped_release release;
                r = run_ensemble(spec, bath, o);
            }
            py::list jumps;
            for (const auto& log : r.jumps) {
                py::list one;
                for (const auto& e : log) one.append(jump_dict(e));
                jumps.append(one);
            }
            py::dict d;
            d["grid"] = r.grid;
            d["mean"] = r.mean;
            d["stderr"] = r.stderror;
            d["samples"] = r.samples;
            d["jumps"] = jumps;
            d["net_jumps"] = r.net_jumps;
            if (bootstrap > 0) {
                d["boot_sigma"] = r.boot_sigma;
                d["ci_low"] = r.ci_low;
                d["ci_high"] = r.ci_high;
            }
            return d;
        },
        py::arg("spec"), py::arg("bath"), py::arg("trajectories"), py::arg("seed") = 1, py::arg("grid_points") = 101,
        py::arg("levels") = 2, py::arg("workers") = 1, py::arg("batch_size") = 256, py::arg("bootstrap") = 0,
        py::arg("dt_safety") = 0.05, py::arg("m_levels") = 0, py::arg("rebuild_every") = 1);

    m.def(
        "load_config",
        [](const std::string& path) {
            const RunConfig c = parse_config_file(path);
            return py::make_tuple(make_spec(c), make_bath(c));
        },
        py::arg("path"), "Problem and bath described by a JSON run configuration.");

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
}
