#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "opfptas/ptas.hpp"

namespace opfptas {

namespace {

using Json = nlohmann::ordered_json;

Json complex_json(Complex c) { return Json::array({c.real(), c.imag()}); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string PtasReport::to_json(bool include_timings) const {
  Json j;
  j["feasible"] = feasible;
  j["termination"] = termination;
  j["objective"] = objective;
  j["candidate_objective"] = candidate_objective;
  j["lower_bound"] = lower_bound;
  j["oracle_objective"] = oracle_objective ? Json(*oracle_objective) : Json(nullptr);
  j["ratio"] = ratio ? Json(*ratio) : Json(nullptr);
  j["phi"] = phi;
  j["epsilon"] = epsilon;
  j["max_guess_size"] = max_guess_size;
  j["guesses_explored"] = guesses_explored;
  j["guesses_feasible"] = guesses_feasible;
  j["best_guess"] = best_guess;
  j["complete"] = complete;
  j["guarantee"] = guarantee;
  j["max_fractional"] = max_fractional;
  j["row_bound"] = row_bound;
  j["hard_errors"] = hard_errors;
  j["bound_violations"] = bound_violations;
  j["premise_violations"] = premise_violations;
  j["tighten_gap"] = tighten_gap;

  Json a;
  a["a0"] = assumptions.a0_ok;
  a["a1"] = assumptions.a1_ok;
  a["a2"] = assumptions.a2_ok;
  a["a3"] = assumptions.a3_ok;
  a["a4"] = assumptions.a4_ok;
  a["consumers"] = assumptions.consumers_ok;
  a["rotated"] = assumptions.rotated_ok;
  a["theta"] = assumptions.theta;
  a["phi"] = assumptions.phi;
  Json v = Json::array();
  for (const auto& viol : assumptions.violations) {
    v.push_back({{"assumption", viol.assumption}, {"entity", viol.entity}, {"detail", viol.detail}});
  }
  a["violations"] = v;
  j["assumptions"] = a;

  if (feasible) {
    Json s;
    s["supply"] = complex_json(best.supply);
    s["x_hat"] = x_hat;
    Json d = Json::array();
    for (Complex c : best.demand) d.push_back(complex_json(c));
    s["demand"] = d;
    Json f = Json::array();
    for (Complex c : best.flow) f.push_back(complex_json(c));
    s["flow"] = f;
    s["voltage"] = best.voltage;
    s["current"] = best.current;
    j["solution"] = s;
  }
  if (include_timings) {
    j["timings"] = {{"total", timings.total}, {"p1", timings.p1}, {"p2", timings.p2},
                    {"p3", timings.p3},       {"tighten", timings.tighten}};
  }
  return j.dump(2);
}

std::string PtasReport::trace_csv() const {
  std::ostringstream os;
  os << "id,I0,I1,free,status,p1,p2,candidate,fractional,lp_rows,reused,within_bound,premise\n";
  for (const auto& t : trace) {
    os << t.id << ',' << t.I0 << ',' << t.I1 << ',' << t.free_users << ',' << t.status << ','
       << num(t.p1) << ',' << num(t.p2) << ',' << num(t.candidate) << ',' << t.fractional << ','
       << t.lp_rows << ',' << (t.reused ? 1 : 0) << ',' << (t.within_bound ? 1 : 0) << ','
       << (t.premise ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace opfptas
