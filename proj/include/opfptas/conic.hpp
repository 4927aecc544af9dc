// Convex program container and an embedded second-order-cone solver.
//
// A ConicProgram is built from named scalar variables, affine rows, rotated
// cones of the branch flow relaxation, disk bounds and a separable convex
// objective. `solve` lowers it to the standard form
//
//   minimize c'x  subject to  Ax = b,  Gx + s = h,  s in K,
//
// with K a product of a nonnegative orthant and second-order cones, and runs
// a homogeneous self-dual interior-point method with Nesterov-Todd scaling.
#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace opfptas {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarRole { Supply, Demand, Control, Flow, Voltage, Current, Auxiliary };

const char* to_string(VarRole role);

struct VariableInfo {
  std::string name;
  VarRole role = VarRole::Auxiliary;
  double lower = -kInf;
  double upper = kInf;
};

/// constant + sum(coef * x[var]).
struct LinearExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinearExpr() = default;
  explicit LinearExpr(double c) : constant(c) {}

  LinearExpr& add(int var, double coef) {
    if (coef != 0.0) terms.emplace_back(var, coef);
    return *this;
  }
  LinearExpr& add(const LinearExpr& other, double scale = 1.0);
  double evaluate(std::span<const double> x) const;
  /// Merges duplicate variables and drops zero coefficients.
  void normalize();
};

enum class RowFamily {
  Balance,
  Root,
  VoltageDrop,
  Exactness,  // sum_{k in N_j} Re(z_hl^* s_k) >= 0
  Objective,
  Other,
};

const char* to_string(RowFamily family);

/// Affine row. Equalities read expr == 0, inequalities expr <= 0.
struct LinearRow {
  LinearExpr expr;
  RowFamily family = RowFamily::Other;
  std::string label;
};

/// ||(2 p, 2 q, l - v)|| <= l + v, i.e. l * v >= p^2 + q^2 with l, v >= 0.
struct RotatedCone {
  LinearExpr p;
  LinearExpr q;
  LinearExpr l;
  LinearExpr v;
  std::string label;
};

/// ||(a, b)|| <= radius.
struct DiskBound {
  LinearExpr a;
  LinearExpr b;
  double radius = 0.0;
  std::string label;
};

/// weight * arg^2 with weight >= 0.
struct QuadraticTerm {
  double weight = 0.0;
  LinearExpr arg;
};

/// max over pieces of affine functions.
struct PiecewiseTerm {
  std::vector<LinearExpr> pieces;
};

struct ConicObjective {
  LinearExpr linear;
  std::vector<QuadraticTerm> quadratic;
  std::vector<PiecewiseTerm> piecewise;

  double evaluate(std::span<const double> x) const;
};

class ConicProgram {
 public:
  int add_variable(std::string name, VarRole role, double lower = -kInf,
                   double upper = kInf);
  void add_equality(LinearExpr expr, RowFamily family, std::string label = {});
  void add_inequality(LinearExpr expr, RowFamily family, std::string label = {});
  void add_rotated_cone(RotatedCone cone);
  void add_disk_bound(DiskBound bound);

  ConicObjective& objective() { return objective_; }
  const ConicObjective& objective() const { return objective_; }

  int variable_count() const { return static_cast<int>(variables_.size()); }
  const std::vector<VariableInfo>& variables() const { return variables_; }
  const std::vector<LinearRow>& equalities() const { return equalities_; }
  const std::vector<LinearRow>& inequalities() const { return inequalities_; }
  const std::vector<RotatedCone>& rotated_cones() const { return cones_; }
  const std::vector<DiskBound>& disk_bounds() const { return disks_; }

  /// Largest violation of any bound, row or cone at x.
  double max_violation(std::span<const double> x) const;

  /// Human-readable listing of variables, rows, cones and objective.
  void dump(std::ostream& os) const;

 private:
  void check_expr(const LinearExpr& expr) const;

  std::vector<VariableInfo> variables_;
  std::vector<LinearRow> equalities_;
  std::vector<LinearRow> inequalities_;
  std::vector<RotatedCone> cones_;
  std::vector<DiskBound> disks_;
  ConicObjective objective_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalError };

const char* to_string(SolveStatus status);

struct SolverConfig {
  int max_iters = 100;
  double tol_feas = 1e-8;
  double tol_gap = 1e-8;   // relative duality gap
  double tol_abs = 1e-11;  // absolute duality gap on the scaled problem
  double tol_infeas = 1e-7;  // infeasibility certificate
  /// When positive, the unscaled absolute gap must also reach this. Best
  /// effort: if the iteration breaks down afterwards, the last iterate that
  /// met the other tests is returned as optimal.
  double gap_floor = 0.0;
  double step_fraction = 0.99;
  double regularization = 1e-11;
  std::ostream* log = nullptr;
};

/// Standard-form cone program. Rows of G are ordered orthant first, then one
/// block per second-order cone (head entry first).
struct ConeProblem {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> G;
  Eigen::VectorXd h;
  int orthant = 0;
  std::vector<int> soc;
  double objective_offset = 0.0;
  /// Set by `lower` when a row without variables cannot hold.
  bool inconsistent = false;
};

struct ConeSolution {
  SolveStatus status = SolveStatus::NumericalError;
  Eigen::VectorXd x, y, z, s;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
};

ConeSolution solve_cone(const ConeProblem& problem, const SolverConfig& config = {});

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalError;
  std::vector<double> x;  // indexed like ConicProgram variables
  double objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

/// Lowers `program` to standard form. Variables beyond the program's own are
/// epigraph auxiliaries appended at the end.
ConeProblem lower(const ConicProgram& program);

SolveResult solve(const ConicProgram& program, const SolverConfig& config = {});

}  // namespace opfptas
