#include "opfptas/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace opfptas {
namespace {

std::string edge_label(const Edge& e) {
  std::ostringstream os;
  os << "(" << e.parent << "," << e.child << ")";
  return os.str();
}

}  // namespace

RadialNetwork::RadialNetwork(double root_voltage, std::vector<Edge> edges,
                             std::vector<VoltageBounds> bounds,
                             PerUnitBase base, std::string name)
    : root_voltage_(root_voltage),
      edges_(std::move(edges)),
      bounds_(std::move(bounds)),
      base_(base),
      name_(std::move(name)) {
  const int nodes = static_cast<int>(bounds_.size());
  if (nodes < 2) throw InputError("network needs at least two nodes");
  if (edge_count() != nodes - 1) {
    throw InputError("a tree on " + std::to_string(nodes) + " nodes needs " +
                     std::to_string(nodes - 1) + " edges, got " +
                     std::to_string(edge_count()));
  }
  if (!(root_voltage_ > 0.0) || !std::isfinite(root_voltage_)) {
    throw InputError("root voltage must be positive");
  }

  incoming_.assign(static_cast<size_t>(nodes), -1);
  children_.assign(static_cast<size_t>(nodes), {});
  for (int e = 0; e < edge_count(); ++e) {
    const Edge& edge = edges_[static_cast<size_t>(e)];
    if (edge.parent < 0 || edge.parent >= nodes || edge.child <= 0 ||
        edge.child >= nodes) {
      throw InputError("edge " + edge_label(edge) + " references an unknown node");
    }
    if (edge.parent == edge.child) {
      throw InputError("self loop at node " + std::to_string(edge.child));
    }
    if (incoming_[static_cast<size_t>(edge.child)] != -1) {
      throw InputError("node " + std::to_string(edge.child) +
                       " has more than one parent");
    }
    if (!std::isfinite(edge.impedance.real()) ||
        !std::isfinite(edge.impedance.imag())) {
      throw InputError("edge " + edge_label(edge) + " has a non-finite impedance");
    }
    if (!(edge.capacity > 0.0) || !(edge.current_limit > 0.0)) {
      throw InputError("edge " + edge_label(edge) + " needs positive limits");
    }
    incoming_[static_cast<size_t>(edge.child)] = e;
    children_[static_cast<size_t>(edge.parent)].push_back(edge.child);
  }
  if (children_[0].size() != 1) {
    throw InputError("the root must have exactly one child");
  }
  if (edges_[static_cast<size_t>(incoming_[1])].parent != 0) {
    throw InputError("node 1 must be the child of the root");
  }
  for (int j = 1; j < nodes; ++j) {
    const VoltageBounds& b = bounds_[static_cast<size_t>(j)];
    if (!(b.lower > 0.0) || !(b.upper >= b.lower)) {
      throw InputError("invalid voltage bounds at node " + std::to_string(j));
    }
  }

  // Breadth-first walk from the root; also detects cycles and disconnection.
  std::vector<char> seen(static_cast<size_t>(nodes), 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  paths_.assign(static_cast<size_t>(nodes), {});
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    if (i != 0) order_.push_back(i);
    for (int j : children_[static_cast<size_t>(i)]) {
      if (seen[static_cast<size_t>(j)]) throw InputError("network contains a cycle");
      seen[static_cast<size_t>(j)] = 1;
      paths_[static_cast<size_t>(j)] = paths_[static_cast<size_t>(i)];
      paths_[static_cast<size_t>(j)].push_back(incoming_[static_cast<size_t>(j)]);
      queue.push_back(j);
    }
  }
  if (static_cast<int>(order_.size()) != nodes - 1) {
    throw InputError("network is not connected to the root");
  }

  subtree_nodes_.assign(static_cast<size_t>(nodes), {});
  subtree_edges_.assign(static_cast<size_t>(nodes), {});
  in_subtree_.assign(static_cast<size_t>(nodes),
                     std::vector<char>(static_cast<size_t>(nodes), 0));
  for (int j = 0; j < nodes; ++j) {
    // Ancestors of j (including j) all contain j in their subtree.
    int a = j;
    while (true) {
      in_subtree_[static_cast<size_t>(a)][static_cast<size_t>(j)] = 1;
      if (a == 0) break;
      a = parent(a);
    }
  }
  for (int r = 0; r < nodes; ++r) {
    for (int j = 0; j < nodes; ++j) {
      if (!in_subtree_[static_cast<size_t>(r)][static_cast<size_t>(j)]) continue;
      subtree_nodes_[static_cast<size_t>(r)].push_back(j);
      if (j != r) {
        subtree_edges_[static_cast<size_t>(r)].push_back(
            incoming_[static_cast<size_t>(j)]);
      }
    }
    std::sort(subtree_edges_[static_cast<size_t>(r)].begin(),
              subtree_edges_[static_cast<size_t>(r)].end());
  }
}

void RadialNetwork::check_node(int node) const {
  if (node < 0 || node >= node_count()) {
    throw InputError("unknown node id " + std::to_string(node));
  }
}

const VoltageBounds& RadialNetwork::voltage_bounds(int node) const {
  check_node(node);
  return bounds_[static_cast<size_t>(node)];
}

int RadialNetwork::incoming_edge(int node) const {
  check_node(node);
  if (node == 0) throw InputError("the root has no incoming edge");
  return incoming_[static_cast<size_t>(node)];
}

int RadialNetwork::parent(int node) const {
  return edges_[static_cast<size_t>(incoming_edge(node))].parent;
}

const std::vector<int>& RadialNetwork::children(int node) const {
  check_node(node);
  return children_[static_cast<size_t>(node)];
}

const std::vector<int>& RadialNetwork::path_edges(int node) const {
  check_node(node);
  return paths_[static_cast<size_t>(node)];
}

const std::vector<int>& RadialNetwork::subtree_nodes(int node) const {
  check_node(node);
  return subtree_nodes_[static_cast<size_t>(node)];
}

const std::vector<int>& RadialNetwork::subtree_edges(int node) const {
  check_node(node);
  return subtree_edges_[static_cast<size_t>(node)];
}

bool RadialNetwork::in_subtree(int root, int node) const {
  check_node(root);
  check_node(node);
  return in_subtree_[static_cast<size_t>(root)][static_cast<size_t>(node)] != 0;
}

Complex RadialNetwork::common_path_impedance(int a, int b) const {
  const auto& pa = path_edges(a);
  const auto& pb = path_edges(b);
  Complex z = 0.0;
  // Root paths share a common prefix.
  for (size_t i = 0; i < pa.size() && i < pb.size() && pa[i] == pb[i]; ++i) {
    z += edges_[static_cast<size_t>(pa[i])].impedance;
  }
  return z;
}

double cost_value(const CostSpec& cost, double t) {
  return std::visit(
      [t](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, QuadraticCost>) {
          const double r = c.base * (1.0 - t);
          return r * r;
        } else if constexpr (std::is_same_v<T, LinearCost>) {
          return c.rate * (1.0 - t);
        } else {
          const auto& bp = c.breakpoints;
          if (bp.empty()) return 0.0;
          if (t <= bp.front().first) return bp.front().second;
          for (size_t i = 1; i < bp.size(); ++i) {
            if (t <= bp[i].first) {
              const double w = (t - bp[i - 1].first) / (bp[i].first - bp[i - 1].first);
              return (1.0 - w) * bp[i - 1].second + w * bp[i].second;
            }
          }
          return bp.back().second;
        }
      },
      cost);
}

double cost_at_zero(const CostSpec& cost) { return cost_value(cost, 0.0); }

std::string validate_cost(const CostSpec& cost) {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, QuadraticCost>) {
          if (!std::isfinite(c.base)) return "quadratic cost base is not finite";
          return {};
        } else if constexpr (std::is_same_v<T, LinearCost>) {
          if (!(c.rate >= 0.0) || !std::isfinite(c.rate)) {
            return "linear cost rate must be non-negative";
          }
          return {};
        } else {
          const auto& bp = c.breakpoints;
          if (bp.size() < 2) return "tabulated cost needs at least two breakpoints";
          if (bp.front().first != 0.0 || bp.back().first != 1.0) {
            return "tabulated cost must span t in [0, 1]";
          }
          if (bp.back().second != 0.0) return "tabulated cost must vanish at t = 1";
          double prev_slope = -std::numeric_limits<double>::infinity();
          for (size_t i = 1; i < bp.size(); ++i) {
            const double dt = bp[i].first - bp[i - 1].first;
            if (!(dt > 0.0)) return "tabulated breakpoints must increase in t";
            const double slope = (bp[i].second - bp[i - 1].second) / dt;
            if (slope > 0.0) return "tabulated cost must be non-increasing";
            if (slope < prev_slope - 1e-12) return "tabulated cost must be convex";
            prev_slope = slope;
          }
          return {};
        }
      },
      cost);
}

Complex User::peak() const {
  if (const auto* d = std::get_if<DiscreteDemand>(&demand)) return d->rated;
  return std::get<ContinuousDemand>(demand).upper;
}

double User::fraction(double active) const {
  const double top = peak().real();
  if (top <= 0.0) return 1.0;
  return active / top;
}

Instance::Instance(RadialNetwork network, std::vector<User> users,
                   SupplyCost supply_cost)
    : network_(std::move(network)),
      users_(std::move(users)),
      supply_cost_(supply_cost) {
  const int nodes = network_.node_count();
  at_node_.assign(static_cast<size_t>(nodes), {});
  in_subtree_.assign(static_cast<size_t>(nodes), {});
  for (int k = 0; k < user_count(); ++k) {
    const User& u = users_[static_cast<size_t>(k)];
    if (u.node <= 0 || u.node >= nodes) {
      throw InputError("user " + std::to_string(u.id) +
                       " is attached to an invalid node " + std::to_string(u.node));
    }
    if (const auto* box = std::get_if<ContinuousDemand>(&u.demand)) {
      if (box->lower.real() > box->upper.real() ||
          box->lower.imag() > box->upper.imag()) {
        throw InputError("user " + std::to_string(u.id) +
                         " has an empty demand box");
      }
      continuous_.push_back(k);
    } else {
      discrete_.push_back(k);
    }
    if (!std::isfinite(u.peak().real()) || !std::isfinite(u.peak().imag())) {
      throw InputError("user " + std::to_string(u.id) + " has a non-finite demand");
    }
    at_node_[static_cast<size_t>(u.node)].push_back(k);
  }
  for (int j = 0; j < nodes; ++j) {
    for (int t : network_.subtree_nodes(j)) {
      const auto& here = at_node_[static_cast<size_t>(t)];
      in_subtree_[static_cast<size_t>(j)].insert(
          in_subtree_[static_cast<size_t>(j)].end(), here.begin(), here.end());
    }
    std::sort(in_subtree_[static_cast<size_t>(j)].begin(),
              in_subtree_[static_cast<size_t>(j)].end());
  }
}

const std::vector<int>& Instance::users_at(int node) const {
  network_.check_node(node);
  return at_node_[static_cast<size_t>(node)];
}

const std::vector<int>& Instance::subtree_users(int node) const {
  network_.check_node(node);
  return in_subtree_[static_cast<size_t>(node)];
}

std::vector<double> Instance::drop_costs() const {
  std::vector<double> out;
  out.reserve(users_.size());
  for (const User& u : users_) out.push_back(cost_at_zero(u.cost));
  return out;
}

std::vector<std::pair<int, int>> path_to_root(const RadialNetwork& net,
                                              int node) {
  if (node <= 0 || node >= net.node_count()) {
    throw InputError("unknown node id " + std::to_string(node));
  }
  std::vector<std::pair<int, int>> out;
  for (int e : net.path_edges(node)) {
    out.emplace_back(net.edge(e).parent, net.edge(e).child);
  }
  return out;
}

std::vector<int> subtree_users(const Instance& instance, int node) {
  if (node <= 0 || node >= instance.network().node_count()) {
    throw InputError("unknown node id " + std::to_string(node));
  }
  return instance.subtree_users(node);
}

double demand_angle(Complex s) {
  if (s == Complex(0.0, 0.0)) return 0.0;
  return std::arg(s);
}

}  // namespace opfptas
