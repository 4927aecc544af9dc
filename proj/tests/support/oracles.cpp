#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace oracles {

namespace {

size_t at(int i) { return static_cast<size_t>(i); }

struct Adjacency {
  std::vector<std::vector<std::pair<int, int>>> out;  // node -> (child, edge)
  std::vector<std::vector<int>> users;                // node -> users
};

Adjacency adjacency(const Instance& inst) {
  const auto& net = inst.network();
  Adjacency a;
  a.out.resize(at(net.node_count()));
  a.users.resize(at(net.node_count()));
  for (int e = 0; e < net.edge_count(); ++e) {
    a.out[at(net.edge(e).parent)].emplace_back(net.edge(e).child, e);
  }
  for (const auto& u : inst.users()) a.users[at(u.node)].push_back(u.id);
  return a;
}

}  // namespace

std::vector<std::pair<int, int>> bfs_path(const RadialNetwork& net, int node) {
  const int n = net.node_count();
  std::vector<std::vector<int>> nbr(at(n));
  for (const auto& e : net.edges()) {
    nbr[at(e.parent)].push_back(e.child);
    nbr[at(e.child)].push_back(e.parent);
  }
  std::vector<int> prev(at(n), -1);
  std::vector<char> seen(at(n), 0);
  std::deque<int> q{0};
  seen[0] = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop_front();
    for (int w : nbr[at(u)]) {
      if (!seen[at(w)]) {
        seen[at(w)] = 1;
        prev[at(w)] = u;
        q.push_back(w);
      }
    }
  }
  std::vector<std::pair<int, int>> path;
  for (int v = node; v != 0; v = prev[at(v)]) path.emplace_back(prev[at(v)], v);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<int> bfs_subtree(const RadialNetwork& net, int node) {
  std::vector<int> out{node};
  for (size_t i = 0; i < out.size(); ++i) {
    for (const auto& e : net.edges()) {
      if (e.parent == out[i]) out.push_back(e.child);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Evaluation distflow(const Instance& inst, std::span<const Complex> demand,
                    std::span<const double> current, double phi) {
  const auto& net = inst.network();
  const Adjacency a = adjacency(inst);
  const Complex rot = std::polar(1.0, phi);
  Evaluation ev;
  ev.flow.assign(at(net.edge_count()), {});
  ev.voltage.assign(at(net.node_count()), 0.0);

  std::function<Complex(int)> up = [&](int node) {
    Complex s;
    for (int k : a.users[at(node)]) s += demand[at(k)] * rot;
    for (auto [child, e] : a.out[at(node)]) {
      const Complex z = net.edge(e).impedance * rot;
      ev.flow[at(e)] = up(child) + z * current[at(e)];
      s += ev.flow[at(e)];
    }
    return s;
  };
  up(0);
  std::function<void(int)> down = [&](int node) {
    for (auto [child, e] : a.out[at(node)]) {
      const Complex z = net.edge(e).impedance;
      ev.voltage[at(child)] = ev.voltage[at(node)] -
                              2.0 * (std::conj(z * rot) * ev.flow[at(e)]).real() +
                              std::norm(z) * current[at(e)];
      down(child);
    }
  };
  ev.voltage[0] = net.root_voltage();
  down(0);
  return ev;
}

Sweep sweep(const Instance& inst, std::span<const Complex> demand) {
  const auto& net = inst.network();
  Sweep s;
  s.current.assign(at(net.edge_count()), 0.0);
  for (int it = 0; it < 500; ++it) {
    s.eval = distflow(inst, demand, s.current);
    double change = 0.0;
    for (int e = 0; e < net.edge_count(); ++e) {
      const double v = s.eval.voltage[at(net.edge(e).parent)];
      if (!(v > 0.0)) return s;
      const double l = std::norm(s.eval.flow[at(e)]) / v;
      if (!std::isfinite(l) || l > 1e6) return s;
      change = std::max(change, std::abs(l - s.current[at(e)]));
      s.current[at(e)] = l;
    }
    if (change < 1e-15) {
      s.eval = distflow(inst, demand, s.current);
      for (double v : s.eval.voltage) {
        if (!(v > 0.0)) return s;
      }
      s.converged = true;
      for (int e = 0; e < net.edge_count(); ++e) {
        if (net.edge(e).parent == 0) s.supply = -s.eval.flow[at(e)];
      }
      return s;
    }
  }
  return s;
}

bool within_limits(const Instance& inst, const Sweep& s, double tol) {
  if (!s.converged) return false;
  const auto& net = inst.network();
  for (int j = 1; j < net.node_count(); ++j) {
    const auto& b = net.voltage_bounds(j);
    if (s.eval.voltage[at(j)] < b.lower - tol || s.eval.voltage[at(j)] > b.upper + tol) return false;
  }
  for (int e = 0; e < net.edge_count(); ++e) {
    const auto& edge = net.edge(e);
    const Complex S = s.eval.flow[at(e)];
    const double l = s.current[at(e)];
    if (std::abs(S) > edge.capacity + tol) return false;
    if (std::abs(S - edge.impedance * l) > edge.capacity + tol) return false;
    if (l > edge.current_limit + tol) return false;
  }
  return true;
}

double exact_cost(const Instance& inst, const Sweep& s, std::uint32_t mask) {
  const double P = -s.supply.real();
  double f = inst.supply_cost().value(P);
  const auto& d = inst.discrete_users();
  for (size_t b = 0; b < d.size(); ++b) {
    if (!((mask >> b) & 1u)) f += opfptas::cost_at_zero(inst.user(d[b]).cost);
  }
  return f;
}

Exhaustive exhaustive(const Instance& inst) {
  const auto& d = inst.discrete_users();
  Exhaustive out;
  std::vector<Complex> demand(at(inst.user_count()));
  for (std::uint32_t mask = 0; mask < (1u << d.size()); ++mask) {
    for (size_t b = 0; b < d.size(); ++b) {
      demand[at(d[b])] = (mask >> b) & 1u ? inst.user(d[b]).peak() : Complex{};
    }
    const Sweep s = sweep(inst, demand);
    if (!within_limits(inst, s)) continue;
    ++out.feasible_count;
    const double f = exact_cost(inst, s, mask);
    if (f < out.objective) {
      out.objective = f;
      out.mask = mask;
      out.feasible = true;
    }
  }
  return out;
}

double lp_by_vertices(const opfptas::LpProgram& lp) {
  const int n = lp.variable_count();
  std::vector<std::pair<Eigen::VectorXd, double>> cons;
  for (const auto& r : lp.rows) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (auto [v, c] : r.terms) a[v] += c;
    cons.emplace_back(a, r.rhs);
  }
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    a[j] = -1.0;
    cons.emplace_back(a, 0.0);
    a[j] = 1.0;
    cons.emplace_back(a, 1.0);
  }
  if (n == 0) {
    for (const auto& [a, b] : cons) {
      if (b < -1e-12) return kNone;
    }
    return lp.constant;
  }
  const int C = static_cast<int>(cons.size());
  double best = kNone;
  std::vector<int> pick(at(n));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Eigen::MatrixXd M(n, n);
      Eigen::VectorXd rhs(n);
      for (int i = 0; i < n; ++i) {
        M.row(i) = cons[at(pick[at(i)])].first.transpose();
        rhs[i] = cons[at(pick[at(i)])].second;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      if (lu.rank() < n) return;
      const Eigen::VectorXd x = lu.solve(rhs);
      for (const auto& [a, b] : cons) {
        if (a.dot(x) > b + 1e-9) return;
      }
      std::vector<double> xs(x.data(), x.data() + n);
      best = std::min(best, lp.evaluate(xs));
      return;
    }
    for (int i = start; i < C; ++i) {
      pick[at(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

RadialNetwork random_network(std::uint64_t seed, int m, const NetOptions& opt) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  std::vector<opfptas::Edge> edges;
  for (int j = 1; j <= m; ++j) {
    const int parent = j == 1 ? 0 : 1 + static_cast<int>(u(rng) * (j - 1));
    const double cap = in(opt.cap_lo, opt.cap_hi);
    edges.push_back({parent, j, std::polar(in(opt.z_mag_lo, opt.z_mag_hi),
                                           in(opt.z_angle_lo, opt.z_angle_hi)),
                     cap, cap * cap / opt.v_lo});
  }
  std::vector<opfptas::VoltageBounds> vb(at(m + 1), {opt.v_lo, opt.v_hi});
  return RadialNetwork(1.0, std::move(edges), std::move(vb));
}

Instance random_instance(std::uint64_t seed, int m, const UserOptions& uo, const NetOptions& no) {
  RadialNetwork net = random_network(seed * 7919 + 17, m, no);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  std::vector<opfptas::User> users;
  for (int k = 0; k < uo.discrete + uo.continuous; ++k) {
    opfptas::User user;
    user.id = k;
    user.node = 1 + std::min(m - 1, static_cast<int>(u(rng) * m));
    const Complex s = std::polar(in(uo.mag_lo, uo.mag_hi), in(uo.angle_lo, uo.angle_hi));
    if (k < uo.discrete) {
      user.demand = opfptas::DiscreteDemand{s};
      if (u(rng) < 0.5) {
        user.cost = opfptas::QuadraticCost{std::abs(s) * in(0.5, 2.0)};
      } else {
        user.cost = opfptas::LinearCost{in(0.05, 0.6)};
      }
    } else {
      const Complex hi{std::abs(s.real()), std::abs(s.imag())};
      user.demand = opfptas::ContinuousDemand{hi * in(0.1, 0.6), hi};
      user.cost = opfptas::QuadraticCost{std::abs(hi)};
    }
    users.push_back(std::move(user));
  }
  return Instance(std::move(net), std::move(users),
                  opfptas::SupplyCost{uo.supply_quadratic, uo.supply_linear});
}

}  // namespace oracles
