// Box-constrained linear programs solved to a vertex, and the rounding
// subproblem built from a relaxed solution.
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "opfptas/flow.hpp"
#include "opfptas/network.hpp"

namespace opfptas {

struct LpRow {
  std::vector<std::pair<int, double>> terms;
  double rhs = 0.0;  // terms . x <= rhs
  std::string label;
};

/// minimize constant + cost . x  subject to  rows,  0 <= x <= 1.
struct LpProgram {
  std::vector<int> users;      // user index of each variable
  std::vector<double> cost;
  double constant = 0.0;
  std::vector<LpRow> rows;
  std::vector<double> reference;  // a known feasible point, when available

  int variable_count() const { return static_cast<int>(cost.size()); }
  int row_count() const { return static_cast<int>(rows.size()); }
  double evaluate(std::span<const double> x) const;
  double max_violation(std::span<const double> x) const;
  /// One line per row: label, then "coef*x<var>" terms, "<=", rhs.
  void dump(std::ostream& os) const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalError };

const char* to_string(LpStatus status);

struct VertexSolution {
  LpStatus status = LpStatus::NumericalError;
  std::vector<double> x;
  double objective = 0.0;
  std::vector<int> basis;       // basic columns: variables, then slacks n.., then artificials
  std::vector<int> fractional;  // variables with delta < x < 1 - delta
  int iterations = 0;
  bool bland = false;           // anti-cycling rule was engaged
};

struct SimplexConfig {
  double delta = 1e-7;
  double pivot_tol = 1e-9;
  double cost_tol = 1e-10;
  int max_iters = 100000;
};

/// Bounded-variable primal simplex. The returned point is a basic feasible
/// solution, so at most row_count() components are fractional.
VertexSolution solve_vertex(const LpProgram& lp, const SimplexConfig& config = {});

/// Rounding LP over the free discrete users `free_users` at the relaxed
/// solution `relaxed` (controls x', demands s'). Per node: lower and upper
/// voltage-drop rows, then active and reactive subtree-demand rows, in the
/// frame rotated by phi. All-zero rows are dropped.
LpProgram build_p2(const Instance& instance, const FlowState& relaxed,
                   std::span<const int> free_users, double phi, double delta = 1e-7);

/// x_hat per user: floor of the vertex on free users (after snapping values
/// within delta of an integer), 0 on I0, 1 on I1. Continuous users get 1.
std::vector<double> round_down(const Instance& instance, const LpProgram& lp,
                               const VertexSolution& vertex, std::span<const int> I0,
                               std::span<const int> I1, double delta = 1e-7);

}  // namespace opfptas
