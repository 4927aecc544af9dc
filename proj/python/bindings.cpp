#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "opfptas/assumptions.hpp"
#include "opfptas/cases.hpp"
#include "opfptas/flow.hpp"
#include "opfptas/oracle.hpp"
#include "opfptas/ptas.hpp"

namespace py = pybind11;
using namespace opfptas;

namespace {

py::dict residuals(const ResidualReport& r) {
  py::dict d;
  d["balance"] = r.balance;
  d["root"] = r.root;
  d["voltage_drop"] = r.voltage_drop;
  d["voltage_bounds"] = r.voltage_bounds;
  d["capacity"] = r.capacity;
  d["reverse_capacity"] = r.reverse_capacity;
  d["current_limit"] = r.current_limit;
  d["demand"] = r.demand;
  d["soc_gap"] = r.soc_gap;
  d["integrality"] = r.integrality;
  d["max_violation"] = r.max_violation();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Approximation scheme for optimal power flow with on/off demands";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

  py::class_<FlowState>(m, "FlowState")
      .def_readonly("supply", &FlowState::supply)
      .def_readonly("demand", &FlowState::demand)
      .def_readonly("control", &FlowState::control)
      .def_readonly("flow", &FlowState::flow)
      .def_readonly("voltage", &FlowState::voltage)
      .def_readonly("current", &FlowState::current);

  py::class_<Instance>(m, "Instance")
      .def_property_readonly("node_count", [](const Instance& i) { return i.network().node_count(); })
      .def_property_readonly("edge_count", [](const Instance& i) { return i.network().edge_count(); })
      .def_property_readonly("user_count", &Instance::user_count)
      .def_property_readonly("discrete_users", &Instance::discrete_users)
      .def_property_readonly("name", [](const Instance& i) { return i.network().name(); })
      .def("edge", [](const Instance& i, int e) {
        const Edge& x = i.network().edge(e);
        return py::dict(py::arg("parent") = x.parent, py::arg("child") = x.child,
                        py::arg("impedance") = x.impedance, py::arg("capacity") = x.capacity,
                        py::arg("current_limit") = x.current_limit);
      })
      .def("peak", [](const Instance& i, int k) { return i.user(k).peak(); });

  py::class_<Case>(m, "Case")
      .def_readonly("instance", &Case::instance)
      .def_property_readonly("derived_current_limits",
                             [](const Case& c) { return c.metadata.derived_current_limits; });

  m.def("load_case", &load_case, py::arg("path"), "Load a JSON case file, or the builtin \"rbts13\".");
  m.def("parse_case", &parse_case, py::arg("text"));
  m.def("dump_case", &dump_case, py::arg("case"));
  m.def("rbts13", &rbts13);

  m.def(
      "generate_instance",
      [](int users, const std::string& mix, const std::string& cost, std::uint64_t seed,
         const std::string& network) {
        InstanceSpec spec;
        spec.network = network;
        spec.users = users;
        spec.mix = parse_mix(mix);
        spec.cost = parse_cost_mode(cost);
        spec.seed = seed;
        return generate_instance(spec);
      },
      py::arg("users"), py::arg("mix") = "M", py::arg("cost") = "C", py::arg("seed") = 1,
      py::arg("network") = "rbts13");

  m.def("rotation_angle", &rotation_angle, py::arg("instance"));
  m.def(
      "check_assumptions",
      [](const Instance& inst) {
        const AssumptionReport r = check_assumptions(inst);
        py::dict d;
        d["A0"] = r.a0_ok;
        d["A1"] = r.a1_ok;
        d["A2"] = r.a2_ok;
        d["A3"] = r.a3_ok;
        d["A4"] = r.a4_ok;
        d["consumers"] = r.consumers_ok;
        d["rotated"] = r.rotated_ok;
        d["theta"] = r.theta;
        d["phi"] = r.phi;
        d["all_ok"] = r.all_ok();
        return d;
      },
      py::arg("instance"));
  m.def(
      "verify", [](const Instance& inst, const FlowState& s) { return residuals(verify(inst, s)); },
      py::arg("instance"), py::arg("state"));
  m.def(
      "objective", [](const Instance& inst, const FlowState& s) { return objective(inst, s); },
      py::arg("instance"), py::arg("state"));

  py::class_<PtasReport>(m, "PtasReport")
      .def_readonly("feasible", &PtasReport::feasible)
      .def_readonly("termination", &PtasReport::termination)
      .def_readonly("objective", &PtasReport::objective)
      .def_readonly("lower_bound", &PtasReport::lower_bound)
      .def_readonly("phi", &PtasReport::phi)
      .def_readonly("guesses_explored", &PtasReport::guesses_explored)
      .def_readonly("complete", &PtasReport::complete)
      .def_readonly("guarantee", &PtasReport::guarantee)
      .def_readonly("max_fractional", &PtasReport::max_fractional)
      .def_readonly("row_bound", &PtasReport::row_bound)
      .def_readonly("hard_errors", &PtasReport::hard_errors)
      .def_readonly("x_hat", &PtasReport::x_hat)
      .def_readonly("best", &PtasReport::best)
      .def("to_json", &PtasReport::to_json, py::arg("timings") = false)
      .def("trace_csv", &PtasReport::trace_csv);

  m.def(
      "solve",
      [](const Instance& inst, double eps, std::optional<std::int64_t> budget, int workers,
         bool early_stop) {
        PtasConfig cfg;
        cfg.epsilon = eps;
        cfg.guess_budget = budget;
        cfg.workers = workers;
        cfg.early_stop = early_stop;
        py::gil_scoped_release release;
        return run_ptas(inst, cfg);
      },
      py::arg("instance"), py::arg("eps") = 1.0, py::arg("budget") = py::none(),
      py::arg("workers") = 1, py::arg("early_stop") = true);

  py::class_<OracleResult>(m, "OracleResult")
      .def_readonly("feasible", &OracleResult::feasible)
      .def_readonly("objective", &OracleResult::objective)
      .def_readonly("x", &OracleResult::x)
      .def_readonly("mask", &OracleResult::mask)
      .def_readonly("assignments", &OracleResult::assignments)
      .def_readonly("state", &OracleResult::state);

  m.def(
      "brute_force",
      [](const Instance& inst, std::optional<double> phi, int workers) {
        OracleConfig oc;
        oc.workers = workers;
        oc.keep_table = false;
        const double angle = phi ? *phi : rotation_angle(inst);
        py::gil_scoped_release release;
        return brute_force(inst, angle, oc);
      },
      py::arg("instance"), py::arg("phi") = py::none(), py::arg("workers") = 1);

  m.attr("ORACLE_MAX_USERS") = kOracleMaxUsers;
}
