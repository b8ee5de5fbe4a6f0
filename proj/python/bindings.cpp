#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "morphquad/config.hpp"
#include "morphquad/io.hpp"
#include "morphquad/morphology.hpp"
#include "morphquad/rotor.hpp"
#include "morphquad/simulator.hpp"

namespace py = pybind11;
using namespace morphquad;

namespace {

std::vector<Vec2> to_list(const RotorPoints& p) { return {p.begin(), p.end()}; }

py::dict objectives_dict(const MorphObjectives& o) {
  py::dict d;
  d["efficiency"] = o.efficiency;
  d["controllability"] = o.controllability;
  d["feasible"] = o.feasible;
  d["hover_thrusts"] = o.hover.f;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Morphing quadrotor model, optimizer and closed-loop simulator";

  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", validation.ptr());
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<AllocationSingularError>(m, "AllocationSingularError", PyExc_ArithmeticError);
  py::register_exception<OptimizerFailedError>(m, "OptimizerFailedError", PyExc_RuntimeError);

  py::class_<Morphology>(m, "Morphology")
      .def(py::init<>())
      .def(py::init([](const Vec4& theta) { return Morphology{theta}; }), py::arg("theta"))
      .def_readwrite("theta", &Morphology::theta)
      .def("degrees", &Morphology::degrees)
      .def_static("x_config", &Morphology::x_config)
      .def_static("uniform", &Morphology::uniform)
      .def_static("from_degrees", &Morphology::from_degrees)
      .def("__repr__", [](const Morphology& mo) {
        std::ostringstream s;
        s << "Morphology(deg=[" << mo.degrees().transpose() << "])";
        return s.str();
      });

  py::class_<AirframeParams>(m, "AirframeParams")
      .def(py::init<>())
      .def_readwrite("body_width", &AirframeParams::body_width)
      .def_readwrite("arm_length", &AirframeParams::arm_length)
      .def_readwrite("body_mass", &AirframeParams::body_mass)
      .def_readwrite("arm_mass", &AirframeParams::arm_mass)
      .def_readwrite("lift_coeff", &AirframeParams::lift_coeff)
      .def_readwrite("drag_coeff", &AirframeParams::drag_coeff)
      .def_readwrite("power_coeff", &AirframeParams::power_coeff)
      .def_readwrite("theta_min", &AirframeParams::theta_min)
      .def_readwrite("theta_max", &AirframeParams::theta_max)
      .def_readwrite("prop_diameter", &AirframeParams::prop_diameter)
      .def_readwrite("max_thrust", &AirframeParams::max_thrust)
      .def("dry_mass", &AirframeParams::dry_mass)
      .def("validate", &AirframeParams::validate);

  py::class_<PayloadSpec>(m, "PayloadSpec")
      .def(py::init<>())
      .def_readwrite("mass", &PayloadSpec::mass)
      .def_readwrite("position", &PayloadSpec::position)
      .def_readwrite("inertia_cm", &PayloadSpec::inertia_cm)
      .def_static("cube", &PayloadSpec::cube, py::arg("mass"), py::arg("position"),
                  py::arg("params") = AirframeParams{});

  py::class_<MassProperties>(m, "MassProperties")
      .def(py::init<>())
      .def_readwrite("mass", &MassProperties::mass)
      .def_readwrite("cog", &MassProperties::cog)
      .def_readwrite("inertia", &MassProperties::inertia);

  py::class_<ScenarioSpec>(m, "ScenarioSpec")
      .def_readwrite("name", &ScenarioSpec::name)
      .def_property(
          "mode", [](const ScenarioSpec& s) { return to_string(s.mode); },
          [](ScenarioSpec& s, const std::string& v) { s.mode = parse_flight_mode(v); })
      .def_readwrite("airframe", &ScenarioSpec::airframe)
      .def_readwrite("seed", &ScenarioSpec::seed)
      .def_readwrite("duration", &ScenarioSpec::duration)
      .def_readwrite("settle_time", &ScenarioSpec::settle_time)
      .def_readwrite("initial_payload", &ScenarioSpec::initial_payload)
      .def_readwrite("output_dir", &ScenarioSpec::output_dir)
      .def("validate", &ScenarioSpec::validate)
      .def("to_yaml", &dump_scenario);

  const AirframeParams defaults;

  m.def("rotor_positions",
        [](const Morphology& mo, const AirframeParams& p) { return to_list(rotor_positions(mo, p)); },
        py::arg("morph"), py::arg("params") = defaults);
  m.def("compose_mass_properties", &compose_mass_properties, py::arg("morph"),
        py::arg("params") = defaults, py::arg("payload") = PayloadSpec{});
  m.def("allocation_matrix",
        [](const Morphology& mo, const Vec3& cog, const AirframeParams& p) {
          return allocation_matrix(rotor_positions(mo, p), cog, p);
        },
        py::arg("morph"), py::arg("cog"), py::arg("params") = defaults);
  m.def("thrust_to_power", &thrust_to_power, py::arg("thrust"), py::arg("power_coeff") = 8.9);
  m.def("efficiency_factor", &efficiency_factor, py::arg("morph"), py::arg("props"),
        py::arg("params") = defaults);
  m.def("controllability_factor", &controllability_factor, py::arg("morph"), py::arg("props"),
        py::arg("params") = defaults);
  m.def("evaluate_objectives",
        [](const Morphology& mo, const MassProperties& props, const AirframeParams& p) {
          return objectives_dict(evaluate_objectives(mo, props, p));
        },
        py::arg("morph"), py::arg("props"), py::arg("params") = defaults);
  m.def("payload_for_cog", &payload_for_cog, py::arg("total_mass"), py::arg("cog_xy"),
        py::arg("params") = defaults);

  m.def("optimize_morphology",
        [](const PayloadSpec& payload, const AirframeParams& p, const Morphology& start) {
          const OptimizerResult r = optimize_morphology(start, payload_mass_model(p, payload), p);
          py::dict d = objectives_dict(r.objectives);
          d["morph"] = r.morph;
          d["iterations"] = r.iterations;
          d["converged"] = r.converged;
          d["residual"] = r.residual;
          return d;
        },
        py::arg("payload"), py::arg("params") = defaults, py::arg("start") = Morphology::x_config(),
        "Ascend eta for the airframe carrying `payload`; arms carry mass, so the CoG follows them.");
  m.def("grid_search",
        [](const PayloadSpec& payload, const AirframeParams& p, double step_deg) {
          const GridSearchResult g = grid_search(payload_mass_model(p, payload), p, deg2rad(step_deg));
          py::dict d;
          d["morph"] = g.best;
          d["efficiency"] = g.efficiency;
          d["evaluated"] = g.evaluated;
          d["feasible"] = g.feasible;
          return d;
        },
        py::arg("payload"), py::arg("params") = defaults, py::arg("step_deg") = 15.0);

  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("parse_scenario", &parse_scenario, py::arg("text"), py::arg("source") = "<string>");
  m.def("hover_scenario",
        [](const std::string& mode, const PayloadSpec& payload, double duration) {
          return hover_scenario(parse_flight_mode(mode), payload, duration);
        },
        py::arg("mode"), py::arg("payload") = PayloadSpec{}, py::arg("duration") = 30.0);
  m.def("_run_scenario",
        [](const ScenarioSpec& spec, bool telemetry) {
          TelemetryLog log;
          {
            py::gil_scoped_release release;
            log = run_scenario(spec, telemetry);
          }
          std::ostringstream csv;
          if (telemetry) write_telemetry_csv(csv, log.rows);
          return py::make_tuple(summary_to_json(log.summary).dump(), csv.str());
        },
        py::arg("spec"), py::arg("telemetry") = false);
  m.def("flight_time",
        [](const ScenarioSpec& spec) {
          std::string reason;
          const double t = flight_time(spec, &reason);
          return py::make_tuple(t, reason);
        },
        py::arg("spec"));
}
