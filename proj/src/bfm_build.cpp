#include "opfptas/bfm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace opfptas {

namespace {

size_t at(int i) { return static_cast<size_t>(i); }

struct Plan {
  double phi = 0.0;
  std::vector<std::optional<double>> control;  // discrete users; nullopt = free in [0,1]
  std::vector<std::optional<Complex>> demand;  // continuous users; nullopt = box
  bool loss_objective = false;
  std::vector<double> current_cap;             // empty = line limits
  bool capacity = true;
  bool exactness_rows = true;
};

LinearExpr var_expr(int var) {
  LinearExpr e;
  e.add(var, 1.0);
  return e;
}

LinearExpr maybe_var(int var, double fixed) {
  return var < 0 ? LinearExpr(fixed) : var_expr(var);
}

struct ComplexExpr {
  LinearExpr re;
  LinearExpr im;
};

std::string tag(const char* name, int index) {
  return std::string(name) + "[" + std::to_string(index) + "]";
}

BfmProgram assemble(const Instance& instance, const Plan& plan) {
  const auto& net = instance.network();
  const int n = instance.user_count();
  const int edges = net.edge_count();
  const int nodes = net.node_count();
  const Complex rot = std::polar(1.0, plan.phi);

  BfmProgram out;
  out.phi = plan.phi;
  ConicProgram& p = out.program;
  FlowLayout& L = out.layout;

  L.supply_re = p.add_variable("s0.re", VarRole::Supply);
  L.supply_im = p.add_variable("s0.im", VarRole::Supply);

  L.control.assign(at(n), -1);
  L.fixed_control.assign(at(n), 1.0);
  L.demand_re.assign(at(n), -1);
  L.demand_im.assign(at(n), -1);
  L.fixed_demand.assign(at(n), Complex{});

  // Rotated demand d_k = s_k e^{i phi} of every user as an affine expression.
  std::vector<ComplexExpr> rotated(at(n));
  for (int k = 0; k < n; ++k) {
    const User& u = instance.user(k);
    ComplexExpr& d = rotated[at(k)];
    if (const auto* dd = std::get_if<DiscreteDemand>(&u.demand)) {
      const Complex peak = dd->rated * rot;
      if (const auto& pin = plan.control[at(k)]) {
        L.fixed_control[at(k)] = *pin;
        L.fixed_demand[at(k)] = dd->rated * *pin;
        d.re = LinearExpr(peak.real() * *pin);
        d.im = LinearExpr(peak.imag() * *pin);
      } else {
        const int x = p.add_variable(tag("x", u.id), VarRole::Control, 0.0, 1.0);
        L.control[at(k)] = x;
        d.re.add(x, peak.real());
        d.im.add(x, peak.imag());
      }
      continue;
    }
    const auto& box = std::get<ContinuousDemand>(u.demand);
    std::optional<Complex> pin = plan.demand[at(k)];
    if (!pin && box.lower == box.upper) pin = box.lower;
    if (pin) {
      L.fixed_demand[at(k)] = *pin;
      const Complex r = *pin * rot;
      d.re = LinearExpr(r.real());
      d.im = LinearExpr(r.imag());
      continue;
    }
    const int sr = p.add_variable(tag("s.re", u.id), VarRole::Demand, box.lower.real(),
                                  box.upper.real());
    const int si = p.add_variable(tag("s.im", u.id), VarRole::Demand, box.lower.imag(),
                                  box.upper.imag());
    L.demand_re[at(k)] = sr;
    L.demand_im[at(k)] = si;
    d.re.add(sr, rot.real()).add(si, -rot.imag());
    d.im.add(sr, rot.imag()).add(si, rot.real());
  }

  L.flow_re.assign(at(edges), -1);
  L.flow_im.assign(at(edges), -1);
  L.current.assign(at(edges), -1);
  for (int e = 0; e < edges; ++e) {
    const Edge& edge = net.edge(e);
    const std::string name = "(" + std::to_string(edge.parent) + "," +
                             std::to_string(edge.child) + ")";
    L.flow_re[at(e)] = p.add_variable("S" + name + ".re", VarRole::Flow);
    L.flow_im[at(e)] = p.add_variable("S" + name + ".im", VarRole::Flow);
    double cap = kInf;
    if (!plan.current_cap.empty()) {
      cap = plan.current_cap[at(e)];
    } else if (plan.capacity) {
      cap = edge.current_limit;
    }
    L.current[at(e)] = p.add_variable("l" + name, VarRole::Current, 0.0, cap);
  }

  L.voltage.assign(at(nodes), -1);
  for (int j = 1; j < nodes; ++j) {
    const auto& b = net.voltage_bounds(j);
    L.voltage[at(j)] = p.add_variable(tag("v", j), VarRole::Voltage, b.lower, b.upper);
  }
  auto voltage = [&](int node) { return maybe_var(L.voltage[at(node)], net.root_voltage()); };

  // Aggregated rotated demand per node.
  std::vector<ComplexExpr> local(at(nodes));
  for (int j = 1; j < nodes; ++j) {
    ComplexExpr sum;
    for (int k : instance.users_at(j)) {
      sum.re.add(rotated[at(k)].re);
      sum.im.add(rotated[at(k)].im);
    }
    sum.re.normalize();
    sum.im.normalize();
    if (sum.re.terms.size() + sum.im.terms.size() > 2) {
      const int dr = p.add_variable(tag("D.re", j), VarRole::Auxiliary);
      const int di = p.add_variable(tag("D.im", j), VarRole::Auxiliary);
      LinearExpr er = sum.re;
      er.add(dr, -1.0);
      LinearExpr ei = sum.im;
      ei.add(di, -1.0);
      p.add_equality(std::move(er), RowFamily::Other, tag("aggregate.re", j));
      p.add_equality(std::move(ei), RowFamily::Other, tag("aggregate.im", j));
      sum.re = var_expr(dr);
      sum.im = var_expr(di);
    }
    local[at(j)] = std::move(sum);
  }

  for (int e = 0; e < edges; ++e) {
    const Edge& edge = net.edge(e);
    const int j = edge.child;
    const Complex zeta = edge.impedance * rot;
    const int sr = L.flow_re[at(e)];
    const int si = L.flow_im[at(e)];
    const int l = L.current[at(e)];

    LinearExpr br = var_expr(sr);
    LinearExpr bi = var_expr(si);
    br.add(local[at(j)].re, -1.0);
    bi.add(local[at(j)].im, -1.0);
    for (int c : net.children(j)) {
      br.add(L.flow_re[at(net.incoming_edge(c))], -1.0);
      bi.add(L.flow_im[at(net.incoming_edge(c))], -1.0);
    }
    br.add(l, -zeta.real());
    bi.add(l, -zeta.imag());
    p.add_equality(std::move(br), RowFamily::Balance, tag("balance.re", e));
    p.add_equality(std::move(bi), RowFamily::Balance, tag("balance.im", e));

    LinearExpr drop = var_expr(L.voltage[at(j)]);
    drop.add(voltage(edge.parent), -1.0);
    drop.add(l, -std::norm(edge.impedance));
    drop.add(sr, 2.0 * zeta.real()).add(si, 2.0 * zeta.imag());
    p.add_equality(std::move(drop), RowFamily::VoltageDrop, tag("voltage", e));

    p.add_rotated_cone({var_expr(sr), var_expr(si), var_expr(l), voltage(edge.parent),
                        tag("soc", e)});

    if (plan.capacity) {
      p.add_disk_bound({var_expr(sr), var_expr(si), edge.capacity, tag("capacity", e)});
      LinearExpr rr = var_expr(sr);
      rr.add(l, -zeta.real());
      LinearExpr ri = var_expr(si);
      ri.add(l, -zeta.imag());
      p.add_disk_bound({std::move(rr), std::move(ri), edge.capacity, tag("reverse", e)});
    }
  }

  const int first = net.incoming_edge(1);
  LinearExpr rr = var_expr(L.flow_re[at(first)]);
  rr.add(L.supply_re, 1.0);
  LinearExpr ri = var_expr(L.flow_im[at(first)]);
  ri.add(L.supply_im, 1.0);
  p.add_equality(std::move(rr), RowFamily::Root, "root.re");
  p.add_equality(std::move(ri), RowFamily::Root, "root.im");

  if (plan.exactness_rows) {
    // sum_{k in N_j} Re(z_hl^* s_k) = Re(zeta_hl^* sum_{k in N_j} d_k) >= 0.
    for (int j = 1; j < nodes; ++j) {
      ComplexExpr total;
      for (int t : net.subtree_nodes(j)) {
        total.re.add(local[at(t)].re);
        total.im.add(local[at(t)].im);
      }
      total.re.normalize();
      total.im.normalize();
      std::vector<int> rows{net.incoming_edge(j)};
      const auto& inner = net.subtree_edges(j);
      rows.insert(rows.end(), inner.begin(), inner.end());
      for (int e : rows) {
        const Complex zeta = net.edge(e).impedance * rot;
        LinearExpr row;
        row.add(total.re, -zeta.real());
        row.add(total.im, -zeta.imag());
        p.add_inequality(std::move(row), RowFamily::Exactness,
                         "exact[" + std::to_string(j) + "," + std::to_string(e) + "]");
      }
    }
  }

  ConicObjective& obj = p.objective();
  if (plan.loss_objective) {
    for (int e = 0; e < edges; ++e) obj.linear.add(L.current[at(e)], 1.0);
    return out;
  }

  // Supplied active power -Re(s0 e^{-i phi}).
  LinearExpr supplied;
  supplied.add(L.supply_re, -std::cos(plan.phi)).add(L.supply_im, -std::sin(plan.phi));
  const SupplyCost& f0 = instance.supply_cost();
  if (f0.quadratic > 0.0) obj.quadratic.push_back({f0.quadratic, supplied});
  obj.linear.add(supplied, f0.linear);

  for (int k = 0; k < n; ++k) {
    const User& u = instance.user(k);
    if (u.is_discrete()) {
      const double drop = cost_at_zero(u.cost);
      if (L.control[at(k)] < 0) {
        obj.linear.constant += drop * (1.0 - L.fixed_control[at(k)]);
      } else {
        obj.linear.constant += drop;
        obj.linear.add(L.control[at(k)], -drop);
      }
      continue;
    }
    const int sr = L.demand_re[at(k)];
    if (sr < 0) {
      obj.linear.constant += cost_value(u.cost, u.fraction(L.fixed_demand[at(k)].real()));
      continue;
    }
    const double top = u.peak().real();
    if (top <= 0.0) {
      obj.linear.constant += cost_value(u.cost, 1.0);
      continue;
    }
    // t = Re(s) / top.
    LinearExpr t;
    t.add(sr, 1.0 / top);
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, QuadraticCost>) {
            LinearExpr arg(c.base);
            arg.add(t, -c.base);
            obj.quadratic.push_back({1.0, std::move(arg)});
          } else if constexpr (std::is_same_v<T, LinearCost>) {
            obj.linear.constant += c.rate;
            obj.linear.add(t, -c.rate);
          } else {
            PiecewiseTerm term;
            const auto& bp = c.breakpoints;
            for (size_t i = 0; i + 1 < bp.size(); ++i) {
              const double slope =
                  (bp[i + 1].second - bp[i].second) / (bp[i + 1].first - bp[i].first);
              LinearExpr piece(bp[i].second - slope * bp[i].first);
              piece.add(t, slope);
              term.pieces.push_back(std::move(piece));
            }
            if (!term.pieces.empty()) obj.piecewise.push_back(std::move(term));
          }
        },
        u.cost);
  }
  return out;
}

}  // namespace

FlowState BfmProgram::extract(std::span<const double> x, const Instance& instance) const {
  const auto& net = instance.network();
  const FlowLayout& L = layout;
  auto read = [&x](int var, double fixed) { return var < 0 ? fixed : x[at(var)]; };

  FlowState s;
  s.supply = {x[at(L.supply_re)], x[at(L.supply_im)]};
  const int n = instance.user_count();
  s.demand.resize(at(n));
  s.control.resize(at(n));
  for (int k = 0; k < n; ++k) {
    const User& u = instance.user(k);
    if (const auto* d = std::get_if<DiscreteDemand>(&u.demand)) {
      const double xk = read(L.control[at(k)], L.fixed_control[at(k)]);
      s.control[at(k)] = xk;
      s.demand[at(k)] = d->rated * xk;
    } else {
      s.control[at(k)] = 1.0;
      const Complex fixed = L.fixed_demand[at(k)];
      s.demand[at(k)] = {read(L.demand_re[at(k)], fixed.real()),
                         read(L.demand_im[at(k)], fixed.imag())};
    }
  }
  s.flow.resize(at(net.edge_count()));
  s.current.resize(at(net.edge_count()));
  for (int e = 0; e < net.edge_count(); ++e) {
    s.flow[at(e)] = {x[at(L.flow_re[at(e)])], x[at(L.flow_im[at(e)])]};
    s.current[at(e)] = x[at(L.current[at(e)])];
  }
  s.voltage.resize(at(net.node_count()));
  for (int j = 0; j < net.node_count(); ++j) {
    s.voltage[at(j)] = read(L.voltage[at(j)], net.root_voltage());
  }
  return s;
}

BfmProgram build_p1(const Instance& instance, std::span<const int> I0,
                    std::span<const int> I1, double phi) {
  const int n = instance.user_count();
  Plan plan;
  plan.phi = phi;
  plan.control.assign(at(n), std::nullopt);
  plan.demand.assign(at(n), std::nullopt);
  auto pin = [&](std::span<const int> set, double value, const char* name) {
    for (int k : set) {
      if (k < 0 || k >= n || !instance.user(k).is_discrete()) {
        throw InputError(std::string(name) + " contains " + std::to_string(k) +
                         ", which is not a discrete user");
      }
      if (plan.control[at(k)]) {
        throw InputError("user " + std::to_string(k) + " appears twice in the guess");
      }
      plan.control[at(k)] = value;
    }
  };
  pin(I0, 0.0, "I0");
  pin(I1, 1.0, "I1");
  return assemble(instance, plan);
}

BfmProgram build_p3(const Instance& instance, std::span<const double> x_hat,
                    std::span<const Complex> s_prime, double phi) {
  const int n = instance.user_count();
  if (static_cast<int>(x_hat.size()) != n || static_cast<int>(s_prime.size()) != n) {
    throw InputError("P3 inputs must have one entry per user");
  }
  Plan plan;
  plan.phi = phi;
  plan.control.assign(at(n), std::nullopt);
  plan.demand.assign(at(n), std::nullopt);
  for (int k = 0; k < n; ++k) {
    if (instance.user(k).is_discrete()) {
      const double v = x_hat[at(k)];
      if (v != 0.0 && v != 1.0) {
        throw InputError("x_hat of user " + std::to_string(k) + " is fractional");
      }
      plan.control[at(k)] = v;
    } else {
      plan.demand[at(k)] = s_prime[at(k)];
    }
  }
  return assemble(instance, plan);
}

BfmProgram build_copf_prime(const Instance& instance, const FlowState& relaxed,
                            double tol) {
  const ResidualReport r = verify(instance, relaxed, tol);
  if (!r.feasible(tol)) {
    throw InputError("state is not feasible for the relaxation (violation " +
                     std::to_string(r.max_violation()) + ")");
  }
  const int n = instance.user_count();
  Plan plan;
  plan.control.assign(at(n), std::nullopt);
  plan.demand.assign(at(n), std::nullopt);
  for (int k = 0; k < n; ++k) {
    if (instance.user(k).is_discrete()) {
      plan.control[at(k)] = relaxed.control[at(k)];
    } else {
      plan.demand[at(k)] = relaxed.demand[at(k)];
    }
  }
  plan.loss_objective = true;
  plan.capacity = false;
  plan.exactness_rows = false;
  plan.current_cap = relaxed.current;
  for (double& c : plan.current_cap) c = std::max(c, 0.0);
  return assemble(instance, plan);
}

}  // namespace opfptas
