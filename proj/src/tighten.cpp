#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "opfptas/bfm.hpp"

namespace opfptas {

namespace {

size_t at(int i) { return static_cast<size_t>(i); }

double max_gap(const Instance& instance, const TreeFlow& tf, std::span<const double> current) {
  const auto& net = instance.network();
  double gap = 0.0;
  for (int e = 0; e < net.edge_count(); ++e) {
    const double v = tf.voltage[at(net.edge(e).parent)];
    gap = std::max(gap, std::abs(current[at(e)] - std::norm(tf.flow[at(e)]) / v));
  }
  return gap;
}

}  // namespace

TightenResult tighten_to_exact(const Instance& instance, const FlowState& relaxed,
                               const TightenConfig& config) {
  const auto& net = instance.network();
  if (auto c2 = check_c2(instance, relaxed.demand, 1e-12); !c2.ok) {
    throw InputError("demands violate the exactness condition at node " +
                     std::to_string(c2.witness->node));
  }

  TightenResult result;
  std::vector<double> current = relaxed.current;
  {
    const BfmProgram prog = build_copf_prime(instance, relaxed, config.feasibility_tol);
    const SolveResult sol = solve(prog.program, config.solver);
    if (sol.optimal()) {
      current = prog.extract(sol.x, instance).current;
      result.used_solver = true;
    }
  }
  for (double& l : current) l = std::max(l, 0.0);

  TreeFlow tf = tree_flow(instance, relaxed.demand, current);
  double gap = max_gap(instance, tf, current);
  int it = 0;
  while (gap >= config.gap_tol && it < config.max_iters) {
    for (int e = 0; e < net.edge_count(); ++e) {
      current[at(e)] = std::norm(tf.flow[at(e)]) / tf.voltage[at(net.edge(e).parent)];
    }
    tf = tree_flow(instance, relaxed.demand, current);
    gap = max_gap(instance, tf, current);
    ++it;
  }
  if (gap >= config.gap_tol) {
    throw std::runtime_error("exactness iteration did not converge (gap " +
                             std::to_string(gap) + ")");
  }

  FlowState& out = result.state;
  out.demand = relaxed.demand;
  out.control = relaxed.control;
  out.current = std::move(current);
  out.flow = std::move(tf.flow);
  out.voltage = std::move(tf.voltage);
  out.supply = -out.flow[at(net.incoming_edge(1))];
  result.iterations = it;
  result.soc_gap = gap;
  return result;
}

}  // namespace opfptas
