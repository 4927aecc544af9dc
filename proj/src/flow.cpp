#include "opfptas/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace opfptas {

namespace {

size_t at(int i) { return static_cast<size_t>(i); }

void check_dims(const Instance& instance, std::span<const Complex> demand,
                std::span<const double> current) {
  if (static_cast<int>(demand.size()) != instance.user_count()) {
    throw InputError("demand vector has " + std::to_string(demand.size()) +
                     " entries, expected " + std::to_string(instance.user_count()));
  }
  if (static_cast<int>(current.size()) != instance.network().edge_count()) {
    throw InputError("current vector has " + std::to_string(current.size()) +
                     " entries, expected " +
                     std::to_string(instance.network().edge_count()));
  }
}

void check_state(const Instance& instance, const FlowState& state) {
  const auto& net = instance.network();
  check_dims(instance, state.demand, state.current);
  if (static_cast<int>(state.control.size()) != instance.user_count() ||
      static_cast<int>(state.flow.size()) != net.edge_count() ||
      static_cast<int>(state.voltage.size()) != net.node_count()) {
    throw InputError("flow state dimensions do not match the instance");
  }
}

double excess(double value) { return value > 0.0 ? value : 0.0; }

}  // namespace

FlowState FlowState::zero(const Instance& instance) {
  const auto& net = instance.network();
  FlowState s;
  s.demand.assign(at(instance.user_count()), Complex{});
  s.control.assign(at(instance.user_count()), 1.0);
  for (int k : instance.discrete_users()) s.control[at(k)] = 0.0;
  s.flow.assign(at(net.edge_count()), Complex{});
  s.voltage.assign(at(net.node_count()), net.root_voltage());
  s.current.assign(at(net.edge_count()), 0.0);
  return s;
}

double ResidualReport::max_violation() const {
  return std::max({balance, root, voltage_drop, voltage_bounds, capacity,
                   reverse_capacity, current_limit, demand, soc, sign});
}

ResidualReport verify(const Instance& instance, const FlowState& state, double tol,
                      double phi) {
  check_state(instance, state);
  const auto& net = instance.network();
  const Complex rot = std::polar(1.0, phi);
  ResidualReport r;

  for (int e = 0; e < net.edge_count(); ++e) {
    const Edge& edge = net.edge(e);
    const Complex zeta = edge.impedance * rot;
    const Complex S = state.flow[at(e)];
    const double l = state.current[at(e)];
    Complex rhs = zeta * l;
    for (int k : instance.users_at(edge.child)) rhs += state.demand[at(k)] * rot;
    for (int c : net.children(edge.child)) rhs += state.flow[at(net.incoming_edge(c))];
    r.balance = std::max(r.balance, std::abs(S - rhs));

    const double vi = state.voltage[at(edge.parent)];
    const double vj = state.voltage[at(edge.child)];
    const double drop = vi + std::norm(edge.impedance) * l - 2.0 * (std::conj(zeta) * S).real();
    r.voltage_drop = std::max(r.voltage_drop, std::abs(vj - drop));

    r.capacity = std::max(r.capacity, excess(std::abs(S) - edge.capacity));
    r.reverse_capacity =
        std::max(r.reverse_capacity, excess(std::abs(S - zeta * l) - edge.capacity));
    r.current_limit = std::max(r.current_limit, excess(l - edge.current_limit));
    r.sign = std::max(r.sign, excess(-l));

    if (vi > 0.0) {
      const double ratio = std::norm(S) / vi;
      r.soc = std::max(r.soc, excess(ratio - l));
      r.soc_gap = std::max(r.soc_gap, std::abs(l - ratio));
    } else {
      const double bad = std::norm(S) > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
      r.soc = std::max(r.soc, bad);
      r.soc_gap = std::max(r.soc_gap, bad);
    }
  }

  const int first = net.incoming_edge(1);
  r.root = std::abs(state.flow[at(first)] + state.supply);

  r.voltage_bounds = std::abs(state.voltage[0] - net.root_voltage());
  for (int j = 1; j < net.node_count(); ++j) {
    const auto& b = net.voltage_bounds(j);
    const double v = state.voltage[at(j)];
    r.voltage_bounds = std::max({r.voltage_bounds, excess(b.lower - v), excess(v - b.upper)});
    r.sign = std::max(r.sign, excess(-v));
  }

  for (int k = 0; k < instance.user_count(); ++k) {
    const User& u = instance.user(k);
    const Complex s = state.demand[at(k)];
    if (const auto* d = std::get_if<DiscreteDemand>(&u.demand)) {
      const double x = state.control[at(k)];
      r.demand = std::max({r.demand, std::abs(s - d->rated * x), excess(-x), excess(x - 1.0)});
      r.integrality = std::max(r.integrality, std::max(0.0, std::min(x, 1.0 - x)));
    } else {
      const auto& box = std::get<ContinuousDemand>(u.demand);
      r.demand = std::max({r.demand, excess(box.lower.real() - s.real()),
                           excess(s.real() - box.upper.real()),
                           excess(box.lower.imag() - s.imag()),
                           excess(s.imag() - box.upper.imag())});
    }
  }
  r.exact = r.soc_gap <= tol;
  return r;
}

TreeFlow tree_flow(const Instance& instance, std::span<const Complex> demand,
                   std::span<const double> current, double phi) {
  check_dims(instance, demand, current);
  const auto& net = instance.network();
  const Complex rot = std::polar(1.0, phi);
  TreeFlow out;
  out.flow.assign(at(net.edge_count()), Complex{});
  out.voltage.assign(at(net.node_count()), net.root_voltage());

  // Loss injected below each node: sum over E_t of z_e l_e.
  std::vector<Complex> below(at(net.node_count()));
  for (int t = 1; t < net.node_count(); ++t) {
    Complex acc;
    for (int e : net.subtree_edges(t)) acc += net.edge(e).impedance * current[at(e)];
    below[at(t)] = acc;
  }

  for (int j = 1; j < net.node_count(); ++j) {
    const int ij = net.incoming_edge(j);
    Complex S;
    for (int k : instance.subtree_users(j)) S += demand[at(k)];
    S += below[at(j)] + net.edge(ij).impedance * current[at(ij)];
    out.flow[at(ij)] = S * rot;

    double lin = 0.0;
    for (int k = 0; k < instance.user_count(); ++k) {
      const Complex Z = net.common_path_impedance(instance.user(k).node, j);
      lin += (std::conj(Z) * demand[at(k)]).real();
    }
    double loss = 0.0;
    for (int e : net.path_edges(j)) {
      const Edge& edge = net.edge(e);
      loss += 2.0 * (std::conj(edge.impedance) * below[at(edge.child)]).real();
      loss += std::norm(edge.impedance) * current[at(e)];
    }
    out.voltage[at(j)] = net.root_voltage() - 2.0 * lin - loss;
  }
  return out;
}

TreeFlow recursive_flow(const Instance& instance, std::span<const Complex> demand,
                        std::span<const double> current, double phi) {
  check_dims(instance, demand, current);
  const auto& net = instance.network();
  const Complex rot = std::polar(1.0, phi);
  TreeFlow out;
  out.flow.assign(at(net.edge_count()), Complex{});
  out.voltage.assign(at(net.node_count()), net.root_voltage());

  const auto& order = net.top_down_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int j = *it;
    const int ij = net.incoming_edge(j);
    Complex S = net.edge(ij).impedance * rot * current[at(ij)];
    for (int k : instance.users_at(j)) S += demand[at(k)] * rot;
    for (int c : net.children(j)) S += out.flow[at(net.incoming_edge(c))];
    out.flow[at(ij)] = S;
  }
  for (int j : order) {
    const int ij = net.incoming_edge(j);
    const Edge& edge = net.edge(ij);
    const Complex zeta = edge.impedance * rot;
    out.voltage[at(j)] = out.voltage[at(edge.parent)] +
                         std::norm(edge.impedance) * current[at(ij)] -
                         2.0 * (std::conj(zeta) * out.flow[at(ij)]).real();
  }
  return out;
}

ExactnessCheck check_c2(const Instance& instance, std::span<const Complex> demand,
                        double tol) {
  if (static_cast<int>(demand.size()) != instance.user_count()) {
    throw InputError("demand vector does not match the user count");
  }
  const auto& net = instance.network();
  ExactnessCheck out;
  for (int j = 1; j < net.node_count(); ++j) {
    Complex total;
    for (int k : instance.subtree_users(j)) total += demand[at(k)];
    std::vector<int> edges{net.incoming_edge(j)};
    const auto& inner = net.subtree_edges(j);
    edges.insert(edges.end(), inner.begin(), inner.end());
    for (int e : edges) {
      const double value = (std::conj(net.edge(e).impedance) * total).real();
      if (value < -tol) {
        out.ok = false;
        out.witness = ExactnessWitness{j, e, value};
        return out;
      }
    }
  }
  return out;
}

LinearizedCheck check_c1(const Instance& instance, const FlowState& state, double tol) {
  check_state(instance, state);
  const auto& net = instance.network();
  LinearizedCheck out;
  const std::vector<double> zero(at(net.edge_count()), 0.0);
  TreeFlow lossless = recursive_flow(instance, state.demand, zero);
  out.flow = lossless.flow;
  out.voltage = lossless.voltage;

  for (int e = 0; e < net.edge_count() && out.feasible; ++e) {
    const int j = net.edge(e).child;
    for (int hl : net.subtree_edges(j)) {
      const double value = (std::conj(net.edge(hl).impedance) * out.flow[at(e)]).real();
      if (value < -tol) {
        std::ostringstream msg;
        msg << "Re(z* S_hat) = " << value << " for edge " << hl << " below edge " << e;
        out.feasible = false;
        out.reason = msg.str();
        break;
      }
    }
  }
  for (int j = 1; j < net.node_count() && out.feasible; ++j) {
    if (out.voltage[at(j)] > net.voltage_bounds(j).upper + tol) {
      std::ostringstream msg;
      msg << "v_hat at node " << j << " is " << out.voltage[at(j)] << " above its bound";
      out.feasible = false;
      out.reason = msg.str();
    }
  }
  return out;
}

double objective(const Instance& instance, const FlowState& state, double phi) {
  const Complex s0 = state.supply * std::polar(1.0, -phi);
  double total = instance.supply_cost().value(-s0.real());
  for (int k = 0; k < instance.user_count(); ++k) {
    const User& u = instance.user(k);
    if (u.is_discrete()) {
      total += cost_at_zero(u.cost) * (1.0 - state.control[at(k)]);
    } else {
      total += cost_value(u.cost, u.fraction(state.demand[at(k)].real()));
    }
  }
  return total;
}

}  // namespace opfptas
