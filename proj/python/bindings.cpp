#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlh/checkpoint.hpp"
#include "nlh/io.hpp"

namespace py = pybind11;
using namespace nlh;

namespace {

py::array_t<double> to_array(const Field& f) { return py::array_t<double>(f.size(), f.data()); }

Field to_field(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return Field(a.data(), a.data() + a.size());
}

py::dict series_dict(const ErrorSeries& s) {
  std::vector<std::int64_t> t;
  std::vector<double> e;
  for (const auto& x : s.samples) {
    t.push_back(x.t);
    e.push_back(x.e);
  }
  py::dict d;
  d["t"] = py::array_t<std::int64_t>(t.size(), t.data());
  d["E"] = py::array_t<double>(e.size(), e.data());
  d["t0"] = s.t0 ? py::object(py::int_(*s.t0)) : py::object(py::none());
  return d;
}

ErrorSeries make_series(const std::vector<double>& e, double steady_threshold) {
  ErrorSeries s;
  for (std::size_t i = 0; i < e.size(); ++i) s.append(static_cast<std::int64_t>(i) + 1, e[i], steady_threshold);
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nonlocal hyperbolic aggregation model: schemes, diagnostics and runner";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CliError>(m, "CliError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_IOError);
  py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_ArithmeticError);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("gamma", &ModelParams::gamma)
      .def_readwrite("lambda1", &ModelParams::lambda1)
      .def_readwrite("lambda2", &ModelParams::lambda2)
      .def_readwrite("y0", &ModelParams::y0)
      .def_readwrite("q_a", &ModelParams::q_a)
      .def_readwrite("q_r", &ModelParams::q_r)
      .def_readwrite("q_al", &ModelParams::q_al)
      .def_readwrite("s_a", &ModelParams::s_a)
      .def_readwrite("s_r", &ModelParams::s_r)
      .def_readwrite("s_al", &ModelParams::s_al)
      .def_readwrite("m_a", &ModelParams::m_a)
      .def_readwrite("m_r", &ModelParams::m_r)
      .def_readwrite("m_al", &ModelParams::m_al)
      .def_readwrite("A", &ModelParams::A)
      .def_readwrite("L", &ModelParams::L)
      .def("set_widths_from_ranges", &ModelParams::set_widths_from_ranges)
      .def("validate", &ModelParams::validate)
      .def(py::self == py::self);

  py::class_<GridSpec>(m, "GridSpec")
      .def_static("make", &GridSpec::make, py::arg("params"), py::arg("dx"), py::arg("dt"), py::arg("T"))
      .def_readonly("dx", &GridSpec::dx)
      .def_readonly("dt", &GridSpec::dt)
      .def_readonly("T", &GridSpec::T)
      .def_readonly("length", &GridSpec::length)
      .def_readonly("nx", &GridSpec::nx)
      .def_readonly("nt", &GridSpec::nt)
      .def("courant", &GridSpec::courant);

  py::class_<PopulationState>(m, "PopulationState")
      .def(py::init([](py::array_t<double> up, py::array_t<double> um, std::int64_t k) {
             PopulationState s{to_field(up), to_field(um), k};
             if (s.u_plus.size() != s.u_minus.size()) throw py::value_error("u_plus and u_minus differ in length");
             return s;
           }),
           py::arg("u_plus"), py::arg("u_minus"), py::arg("time_index") = 0)
      .def_property_readonly("u_plus", [](const PopulationState& s) { return to_array(s.u_plus); })
      .def_property_readonly("u_minus", [](const PopulationState& s) { return to_array(s.u_minus); })
      .def_property_readonly("u", [](const PopulationState& s) { return to_array(s.total_density()); })
      .def_readonly("time_index", &PopulationState::time_index)
      .def("__len__", &PopulationState::size)
      .def(py::self == py::self);

  m.def("total_mass", &total_mass, py::arg("state"), py::arg("dx"));
  m.def("scheme_names", [] {
    std::vector<std::string> out;
    for (auto id : kAllSchemes) out.emplace_back(scheme_name(id));
    return out;
  });

  auto scheme_of = [](const std::string& name) {
    const auto id = parse_scheme(name);
    if (!id) throw py::value_error("unknown scheme '" + name + "'; valid schemes: " + scheme_name_list());
    return *id;
  };

  m.def(
      "step",
      [scheme_of](const std::string& scheme, const PopulationState& s, const ModelParams& p, const GridSpec& g,
                  int threads) { return step(scheme_of(scheme), s, p, g, build_kernel_table(p, g), threads); },
      py::arg("scheme"), py::arg("state"), py::arg("params"), py::arg("grid"), py::arg("threads") = 1);

  m.def(
      "advance",
      [scheme_of](const std::string& scheme, PopulationState s, const ModelParams& p, const GridSpec& g,
                  std::int64_t steps, int threads) {
        const auto id = scheme_of(scheme);
        const KernelTable k = build_kernel_table(p, g);
        py::gil_scoped_release release;
        for (std::int64_t n = 0; n < steps; ++n) s = step(id, s, p, g, k, threads);
        return s;
      },
      py::arg("scheme"), py::arg("state"), py::arg("params"), py::arg("grid"), py::arg("steps"),
      py::arg("threads") = 1);

  m.def(
      "compute_signals",
      [](const PopulationState& s, const ModelParams& p, const GridSpec& g) {
        const SignalField y = compute_signals(s, build_kernel_table(p, g), p);
        return py::make_tuple(to_array(y.y_plus), to_array(y.y_minus));
      },
      py::arg("state"), py::arg("params"), py::arg("grid"));

  m.def(
      "initial_state",
      [](const std::string& kind, double amplitude, const GridSpec& g, std::uint64_t seed) {
        InitialConditionSpec ic;
        if (kind == "sin02") ic.kind = InitialKind::Sin02;
        else if (kind == "sin04") ic.kind = InitialKind::Sin04;
        else if (kind == "rand") ic.kind = InitialKind::UniformRandom;
        else throw py::value_error("kind must be sin02, sin04 or rand");
        ic.amplitude = amplitude;
        ic.seed = seed;
        return make_initial_state(ic, g);
      },
      py::arg("kind"), py::arg("amplitude"), py::arg("grid"), py::arg("seed") = 0);

  m.def(
      "step_error",
      [](py::array_t<double> now, py::array_t<double> prev, const GridSpec& g) {
        return step_error(to_field(now), to_field(prev), g);
      },
      py::arg("now"), py::arg("prev"), py::arg("grid"));

  m.def(
      "classify_symmetry",
      [](py::array_t<double> u, double tol) {
        DiagnosticThresholds th;
        th.symmetry_tol = tol;
        const SymmetryReport r = classify_symmetry(to_field(u), th);
        py::dict d;
        d["symmetry"] = std::string(to_string(r.symmetry));
        d["label"] = symmetry_label(r);
        d["peak_count"] = r.peak_count;
        d["aggregation_count"] = r.aggregation_count;
        d["aggregation_peaks"] = r.aggregation_peaks;
        d["residual"] = r.residual;
        d["axis"] = r.axis;
        d["peaks"] = r.peaks;
        return d;
      },
      py::arg("u"), py::arg("tol") = 1e-3);

  m.def(
      "classify_series",
      [](const std::vector<double>& e, bool final_time_reached) {
        const DiagnosticThresholds th;
        const ErrorSeries s = make_series(e, th.steady_threshold);
        const auto minima = classify_minimum(s, th);
        const auto band = detect_nonconvergence(s, th);
        const auto stop = final_time_reached ? StopReason::FinalTimeReached : StopReason::SteadyStateStop;
        py::dict d;
        py::list kinds;
        for (const auto& v : minima.verdicts) kinds.append(py::make_tuple(v.t, std::string(to_string(v.kind))));
        d["minima"] = kinds;
        d["nonconvergent"] = band.flagged;
        d["solution_kind"] = std::string(to_string(summarize_solution(minima, band, stop)));
        return d;
      },
      py::arg("E"), py::arg("final_time_reached") = true,
      "Classify an E(t) trace sampled at t = 1, 2, ...");

  m.def(
      "run",
      [](const std::vector<std::string>& args) {
        const CliRequest req = parse_cli(args);
        if (req.is_sweep()) throw py::value_error("use sweep() for sweep arguments");
        RunRecord rec;
        {
          py::gil_scoped_release release;
          rec = run_simulation(req.config);
        }
        py::dict d;
        d["config_hash"] = rec.config_hash;
        d["stop_reason"] = std::string(to_string(rec.verdict.stop_reason));
        d["solution_kind"] = std::string(to_string(rec.verdict.solution_kind));
        d["symmetry"] = std::string(to_string(rec.verdict.symmetry));
        d["label"] = symmetry_label(rec.symmetry);
        d["peak_count"] = rec.verdict.peak_count;
        d["aggregation_count"] = rec.verdict.aggregation_count;
        d["series"] = series_dict(rec.series);
        d["final_state"] = rec.final_state;
        d["initial_mass"] = rec.initial_mass;
        d["final_mass"] = rec.final_mass;
        d["steps"] = rec.steps;
        d["verdict_json"] = verdict_json(req.config, rec);
        return d;
      },
      py::arg("args"), "Run one simulation configured by command-line style arguments.");

  m.def(
      "sweep",
      [](const std::vector<std::string>& args) {
        const CliRequest req = parse_cli(args);
        if (!req.is_sweep()) throw py::value_error("no sweep requested");
        std::vector<SweepRow> rows;
        {
          py::gil_scoped_release release;
          rows = sweep(req.config, req.sweep_points, req.workers);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["amplitude"] = r.point.amplitude;
          d["dx"] = r.point.dx;
          d["dt"] = r.point.dt;
          d["ok"] = r.ok;
          d["error"] = r.error;
          d["label"] = r.label;
          d["solution_kind"] = std::string(to_string(r.verdict.solution_kind));
          d["l1"] = r.l1;
          d["stop_time"] = r.stop_time;
          out.append(d);
        }
        return out;
      },
      py::arg("args"));

  m.def("config_hash", [](const std::vector<std::string>& args) { return config_hash(parse_cli(args).config); },
        py::arg("args"));
}
