// Radial network and user data model.
//
// All electrical quantities are per-unit on the case base. Voltages and
// currents are stored as squared magnitudes (v = |V|^2, l = |I|^2), which is
// the convention of the angle-relaxed branch flow model.
#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace opfptas {

using Complex = std::complex<double>;

/// Raised for malformed networks, users or case files.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  int parent = 0;
  int child = 0;
  Complex impedance;          // z = r + jx
  double capacity = 0.0;      // apparent power limit
  double current_limit = 0.0; // squared current limit
};

struct VoltageBounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct PerUnitBase {
  double mva = 1.0;
  double kv = 1.0;
};

/// Rooted tree of buses and lines. Node 0 is the substation and has a single
/// child. Node ids are 0..m and every non-root node has exactly one incoming
/// edge; edge indices follow input order.
class RadialNetwork {
 public:
  /// `bounds` is indexed by node id; entry 0 is ignored.
  RadialNetwork(double root_voltage, std::vector<Edge> edges,
                std::vector<VoltageBounds> bounds, PerUnitBase base = {},
                std::string name = {});

  int node_count() const { return static_cast<int>(bounds_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_.at(static_cast<size_t>(e)); }
  double root_voltage() const { return root_voltage_; }
  const VoltageBounds& voltage_bounds(int node) const;
  const PerUnitBase& base() const { return base_; }
  const std::string& name() const { return name_; }

  /// Index of the edge (parent(node), node).
  int incoming_edge(int node) const;
  int parent(int node) const;
  const std::vector<int>& children(int node) const;

  /// Edge indices on the path from the root to `node`, root first.
  const std::vector<int>& path_edges(int node) const;
  /// Nodes of the subtree rooted at `node`, including `node`.
  const std::vector<int>& subtree_nodes(int node) const;
  /// Edges strictly inside the subtree rooted at `node`.
  const std::vector<int>& subtree_edges(int node) const;
  /// True if `node` lies in the subtree rooted at `root`.
  bool in_subtree(int root, int node) const;

  /// Non-root nodes ordered so that parents precede children.
  const std::vector<int>& top_down_order() const { return order_; }

  /// Sum of impedances over the edges common to the root paths of `a` and `b`.
  Complex common_path_impedance(int a, int b) const;

  void check_node(int node) const;

 private:
  double root_voltage_;
  std::vector<Edge> edges_;
  std::vector<VoltageBounds> bounds_;
  PerUnitBase base_;
  std::string name_;

  std::vector<int> incoming_;
  std::vector<std::vector<int>> children_;
  std::vector<std::vector<int>> paths_;
  std::vector<std::vector<int>> subtree_nodes_;
  std::vector<std::vector<int>> subtree_edges_;
  std::vector<std::vector<char>> in_subtree_;
  std::vector<int> order_;
};

/// Cost of a user as a function of its satisfaction fraction
/// t = Re(s_k) / Re(s_max_k) in [0, 1]. Every variant is non-negative,
/// non-increasing and convex in t, and vanishes at t = 1.
struct QuadraticCost {
  double base = 0.0;  // f(t) = (base * (1 - t))^2
};
struct LinearCost {
  double rate = 0.0;  // f(t) = rate * (1 - t)
};
struct TabulatedCost {
  /// (t, value) pairs with t strictly increasing from 0 to 1. Interpolated
  /// linearly; must be convex, non-increasing and end at value 0.
  std::vector<std::pair<double, double>> breakpoints;
};
using CostSpec = std::variant<QuadraticCost, LinearCost, TabulatedCost>;

double cost_value(const CostSpec& cost, double t);
/// f_k(0): the cost of dropping the user entirely.
double cost_at_zero(const CostSpec& cost);
/// Empty string when the cost is well formed, otherwise a reason.
std::string validate_cost(const CostSpec& cost);

/// Cost of active power supplied at the root, P = -Re(s0):
/// f0(P) = quadratic * P^2 + linear * P.
struct SupplyCost {
  double quadratic = 0.0;
  double linear = 0.0;

  double value(double supplied) const {
    return quadratic * supplied * supplied + linear * supplied;
  }
};

struct DiscreteDemand {
  Complex rated;  // s_max: the demand is either 0 or this value
};
struct ContinuousDemand {
  Complex lower;  // componentwise box
  Complex upper;
};

struct User {
  int id = 0;
  int node = 1;
  std::variant<DiscreteDemand, ContinuousDemand> demand;
  CostSpec cost;

  bool is_discrete() const {
    return std::holds_alternative<DiscreteDemand>(demand);
  }
  /// s_max: the rated demand of a discrete user or the upper corner of a box.
  Complex peak() const;
  /// Satisfaction fraction used by the cost for a given active demand.
  double fraction(double active) const;
};

/// A network together with its users and supply cost. Immutable once built.
class Instance {
 public:
  Instance(RadialNetwork network, std::vector<User> users,
           SupplyCost supply_cost = {});

  const RadialNetwork& network() const { return network_; }
  const std::vector<User>& users() const { return users_; }
  const User& user(int k) const { return users_.at(static_cast<size_t>(k)); }
  int user_count() const { return static_cast<int>(users_.size()); }
  const SupplyCost& supply_cost() const { return supply_cost_; }

  /// Indices of users with discrete demands, in user order.
  const std::vector<int>& discrete_users() const { return discrete_; }
  const std::vector<int>& continuous_users() const { return continuous_; }
  /// Users attached at `node` (U_j).
  const std::vector<int>& users_at(int node) const;
  /// Users attached anywhere in the subtree of `node` (N_j).
  const std::vector<int>& subtree_users(int node) const;

  /// f_k(0) for every user, indexed by user.
  std::vector<double> drop_costs() const;

 private:
  RadialNetwork network_;
  std::vector<User> users_;
  SupplyCost supply_cost_;
  std::vector<int> discrete_;
  std::vector<int> continuous_;
  std::vector<std::vector<int>> at_node_;
  std::vector<std::vector<int>> in_subtree_;
};

/// Directed edges (parent, child) on the path from the root to `node`.
std::vector<std::pair<int, int>> path_to_root(const RadialNetwork& net,
                                              int node);
/// User set of the subtree of `node`.
std::vector<int> subtree_users(const Instance& instance, int node);

/// Phase angle with the convention angle(0) = 0.
double demand_angle(Complex s);

}  // namespace opfptas
