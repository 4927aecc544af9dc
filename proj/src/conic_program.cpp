#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "opfptas/conic.hpp"

namespace opfptas {

const char* to_string(VarRole role) {
  switch (role) {
    case VarRole::Supply: return "supply";
    case VarRole::Demand: return "demand";
    case VarRole::Control: return "control";
    case VarRole::Flow: return "flow";
    case VarRole::Voltage: return "voltage";
    case VarRole::Current: return "current";
    case VarRole::Auxiliary: return "aux";
  }
  return "?";
}

const char* to_string(RowFamily family) {
  switch (family) {
    case RowFamily::Balance: return "balance";
    case RowFamily::Root: return "root";
    case RowFamily::VoltageDrop: return "voltage_drop";
    case RowFamily::Exactness: return "exactness";
    case RowFamily::Objective: return "objective";
    case RowFamily::Other: return "other";
  }
  return "?";
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterationLimit: return "iteration_limit";
    case SolveStatus::NumericalError: return "numerical_error";
  }
  return "?";
}

LinearExpr& LinearExpr::add(const LinearExpr& other, double scale) {
  for (const auto& [var, coef] : other.terms) add(var, coef * scale);
  constant += other.constant * scale;
  return *this;
}

double LinearExpr::evaluate(std::span<const double> x) const {
  double value = constant;
  for (const auto& [var, coef] : terms) value += coef * x[static_cast<size_t>(var)];
  return value;
}

void LinearExpr::normalize() {
  std::map<int, double> merged;
  for (const auto& [var, coef] : terms) merged[var] += coef;
  terms.clear();
  for (const auto& [var, coef] : merged) {
    if (coef != 0.0) terms.emplace_back(var, coef);
  }
}

double ConicObjective::evaluate(std::span<const double> x) const {
  double value = linear.evaluate(x);
  for (const auto& q : quadratic) {
    const double a = q.arg.evaluate(x);
    value += q.weight * a * a;
  }
  for (const auto& pw : piecewise) {
    double best = -kInf;
    for (const auto& piece : pw.pieces) best = std::max(best, piece.evaluate(x));
    if (!pw.pieces.empty()) value += best;
  }
  return value;
}

int ConicProgram::add_variable(std::string name, VarRole role, double lower,
                               double upper) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw std::invalid_argument("invalid bounds for variable " + name);
  }
  variables_.push_back({std::move(name), role, lower, upper});
  return variable_count() - 1;
}

void ConicProgram::check_expr(const LinearExpr& expr) const {
  for (const auto& [var, coef] : expr.terms) {
    if (var < 0 || var >= variable_count()) {
      throw std::out_of_range("expression references unknown variable " +
                              std::to_string(var));
    }
    if (!std::isfinite(coef)) throw std::invalid_argument("non-finite coefficient");
  }
  if (!std::isfinite(expr.constant)) throw std::invalid_argument("non-finite constant");
}

void ConicProgram::add_equality(LinearExpr expr, RowFamily family, std::string label) {
  check_expr(expr);
  expr.normalize();
  equalities_.push_back({std::move(expr), family, std::move(label)});
}

void ConicProgram::add_inequality(LinearExpr expr, RowFamily family,
                                  std::string label) {
  check_expr(expr);
  expr.normalize();
  inequalities_.push_back({std::move(expr), family, std::move(label)});
}

void ConicProgram::add_rotated_cone(RotatedCone cone) {
  for (LinearExpr* e : {&cone.p, &cone.q, &cone.l, &cone.v}) {
    check_expr(*e);
    e->normalize();
  }
  cones_.push_back(std::move(cone));
}

void ConicProgram::add_disk_bound(DiskBound bound) {
  check_expr(bound.a);
  check_expr(bound.b);
  if (!(bound.radius >= 0.0)) throw std::invalid_argument("negative disk radius");
  bound.a.normalize();
  bound.b.normalize();
  disks_.push_back(std::move(bound));
}

double ConicProgram::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (int i = 0; i < variable_count(); ++i) {
    const auto& v = variables_[static_cast<size_t>(i)];
    const double xi = x[static_cast<size_t>(i)];
    worst = std::max({worst, v.lower - xi, xi - v.upper});
  }
  for (const auto& row : equalities_) worst = std::max(worst, std::abs(row.expr.evaluate(x)));
  for (const auto& row : inequalities_) worst = std::max(worst, row.expr.evaluate(x));
  for (const auto& c : cones_) {
    const double p = c.p.evaluate(x), q = c.q.evaluate(x);
    const double l = c.l.evaluate(x), v = c.v.evaluate(x);
    const double norm = std::sqrt(4 * p * p + 4 * q * q + (l - v) * (l - v));
    worst = std::max(worst, norm - (l + v));
  }
  for (const auto& d : disks_) {
    worst = std::max(worst, std::hypot(d.a.evaluate(x), d.b.evaluate(x)) - d.radius);
  }
  return worst;
}

namespace {

void print_expr(std::ostream& os, const LinearExpr& e,
                const std::vector<VariableInfo>& vars) {
  bool first = true;
  for (const auto& [var, coef] : e.terms) {
    if (!first) os << (coef < 0 ? " - " : " + ");
    else if (coef < 0) os << "-";
    os << std::abs(coef) << "*" << vars[static_cast<size_t>(var)].name;
    first = false;
  }
  if (e.constant != 0.0 || first) {
    if (!first) os << (e.constant < 0 ? " - " : " + ") << std::abs(e.constant);
    else os << e.constant;
  }
}

}  // namespace

void ConicProgram::dump(std::ostream& os) const {
  os << "variables " << variable_count() << "\n";
  for (const auto& v : variables_) {
    os << "  " << v.name << " " << to_string(v.role) << " [" << v.lower << ", "
       << v.upper << "]\n";
  }
  os << "equalities " << equalities_.size() << "\n";
  for (const auto& r : equalities_) {
    os << "  " << to_string(r.family) << " " << r.label << ": ";
    print_expr(os, r.expr, variables_);
    os << " == 0\n";
  }
  os << "inequalities " << inequalities_.size() << "\n";
  for (const auto& r : inequalities_) {
    os << "  " << to_string(r.family) << " " << r.label << ": ";
    print_expr(os, r.expr, variables_);
    os << " <= 0\n";
  }
  os << "rotated_cones " << cones_.size() << "\n";
  for (const auto& c : cones_) {
    os << "  " << c.label << ": (";
    print_expr(os, c.p, variables_);
    os << ")^2 + (";
    print_expr(os, c.q, variables_);
    os << ")^2 <= (";
    print_expr(os, c.l, variables_);
    os << ") * (";
    print_expr(os, c.v, variables_);
    os << ")\n";
  }
  os << "disk_bounds " << disks_.size() << "\n";
  for (const auto& d : disks_) {
    os << "  " << d.label << ": |(";
    print_expr(os, d.a, variables_);
    os << ", ";
    print_expr(os, d.b, variables_);
    os << ")| <= " << d.radius << "\n";
  }
  os << "objective\n  linear: ";
  print_expr(os, objective_.linear, variables_);
  os << "\n";
  for (const auto& q : objective_.quadratic) {
    os << "  quadratic " << q.weight << " * (";
    print_expr(os, q.arg, variables_);
    os << ")^2\n";
  }
  for (const auto& pw : objective_.piecewise) {
    os << "  max of " << pw.pieces.size() << " pieces\n";
    for (const auto& piece : pw.pieces) {
      os << "    ";
      print_expr(os, piece, variables_);
      os << "\n";
    }
  }
}

namespace {

using Triplet = Eigen::Triplet<double>;

// Accumulates rows of G in two groups so that orthant rows come first.
struct RowSink {
  std::vector<Triplet> triplets;
  std::vector<double> rhs;

  // Adds the row  s = expr(x)  i.e.  G row = -coef, h = constant.
  void slack_of(const LinearExpr& e, double scale = 1.0) {
    const int r = static_cast<int>(rhs.size());
    for (const auto& [var, coef] : e.terms) triplets.emplace_back(r, var, -coef * scale);
    rhs.push_back(e.constant * scale);
  }
  // Adds the row  expr(x) <= 0  i.e.  s = -expr(x).
  void at_most_zero(const LinearExpr& e) { slack_of(e, -1.0); }
};

}  // namespace

ConeProblem lower(const ConicProgram& program) {
  const int n0 = program.variable_count();
  const auto& obj = program.objective();
  int n = n0;
  std::vector<int> quad_aux, pw_aux;
  for (const auto& q : obj.quadratic) quad_aux.push_back(q.weight > 0.0 ? n++ : -1);
  for (const auto& pw : obj.piecewise) pw_aux.push_back(pw.pieces.empty() ? -1 : n++);

  ConeProblem out;
  out.c = Eigen::VectorXd::Zero(n);
  for (const auto& [var, coef] : obj.linear.terms) out.c[var] += coef;
  out.objective_offset = obj.linear.constant;
  for (size_t i = 0; i < obj.quadratic.size(); ++i) {
    if (quad_aux[i] >= 0) out.c[quad_aux[i]] += obj.quadratic[i].weight;
  }
  for (size_t i = 0; i < obj.piecewise.size(); ++i) {
    if (pw_aux[i] >= 0) out.c[pw_aux[i]] += 1.0;
  }

  std::vector<Triplet> eq;
  std::vector<double> eq_rhs;
  auto add_eq = [&](const LinearExpr& e) {
    if (e.terms.empty()) {
      if (std::abs(e.constant) > 1e-12) out.inconsistent = true;
      return;
    }
    const int r = static_cast<int>(eq_rhs.size());
    for (const auto& [var, coef] : e.terms) eq.emplace_back(r, var, coef);
    eq_rhs.push_back(-e.constant);
  };

  RowSink orthant;
  const auto& vars = program.variables();
  for (int i = 0; i < n0; ++i) {
    const auto& v = vars[static_cast<size_t>(i)];
    if (v.lower == v.upper) {
      add_eq(LinearExpr(-v.lower).add(i, 1.0));
      continue;
    }
    if (std::isfinite(v.lower)) orthant.at_most_zero(LinearExpr(v.lower).add(i, -1.0));
    if (std::isfinite(v.upper)) orthant.at_most_zero(LinearExpr(-v.upper).add(i, 1.0));
  }
  for (const auto& row : program.equalities()) add_eq(row.expr);
  for (const auto& row : program.inequalities()) {
    const auto& e = row.expr;
    if (e.terms.empty()) {
      if (e.constant > 1e-12) out.inconsistent = true;
      continue;
    }
    // Drop rows that the variable bounds already imply.
    double worst = e.constant;
    for (const auto& [var, coef] : e.terms) {
      const auto& v = vars[static_cast<size_t>(var)];
      worst += coef > 0 ? coef * v.upper : coef * v.lower;
    }
    if (worst <= 0.0) continue;
    orthant.at_most_zero(e);
  }
  for (size_t i = 0; i < obj.piecewise.size(); ++i) {
    if (pw_aux[i] < 0) continue;
    for (const auto& piece : obj.piecewise[i].pieces) {
      orthant.at_most_zero(LinearExpr(piece).add(pw_aux[i], -1.0));
    }
  }

  RowSink cones;
  for (const auto& c : program.rotated_cones()) {
    cones.slack_of(LinearExpr(c.l).add(c.v));
    cones.slack_of(LinearExpr().add(c.p, 2.0));
    cones.slack_of(LinearExpr().add(c.q, 2.0));
    cones.slack_of(LinearExpr(c.l).add(c.v, -1.0));
    out.soc.push_back(4);
  }
  for (const auto& d : program.disk_bounds()) {
    cones.slack_of(LinearExpr(d.radius));
    cones.slack_of(d.a);
    cones.slack_of(d.b);
    out.soc.push_back(3);
  }
  for (size_t i = 0; i < obj.quadratic.size(); ++i) {
    const int t = quad_aux[i];
    if (t < 0) continue;
    cones.slack_of(LinearExpr(1.0).add(t, 1.0));
    cones.slack_of(LinearExpr().add(obj.quadratic[i].arg, 2.0));
    cones.slack_of(LinearExpr(-1.0).add(t, 1.0));
    out.soc.push_back(3);
  }

  out.orthant = static_cast<int>(orthant.rhs.size());
  const int rows = out.orthant + static_cast<int>(cones.rhs.size());
  std::vector<Triplet> g = std::move(orthant.triplets);
  for (const auto& t : cones.triplets) g.emplace_back(t.row() + out.orthant, t.col(), t.value());
  out.G.resize(rows, n);
  out.G.setFromTriplets(g.begin(), g.end());
  out.h.resize(rows);
  for (int i = 0; i < out.orthant; ++i) out.h[i] = orthant.rhs[static_cast<size_t>(i)];
  for (size_t i = 0; i < cones.rhs.size(); ++i) out.h[out.orthant + static_cast<int>(i)] = cones.rhs[i];

  out.A.resize(static_cast<int>(eq_rhs.size()), n);
  out.A.setFromTriplets(eq.begin(), eq.end());
  out.b = Eigen::Map<const Eigen::VectorXd>(eq_rhs.data(), static_cast<int>(eq_rhs.size()));
  return out;
}

SolveResult solve(const ConicProgram& program, const SolverConfig& config) {
  SolveResult result;
  const ConeProblem problem = lower(program);
  if (problem.inconsistent) {
    result.status = SolveStatus::Infeasible;
    return result;
  }
  const ConeSolution sol = solve_cone(problem, config);
  result.status = sol.status;
  result.iterations = sol.iterations;
  result.gap = sol.gap;
  result.primal_residual = sol.primal_residual;
  result.dual_residual = sol.dual_residual;
  if (sol.status == SolveStatus::Optimal) {
    result.x.assign(sol.x.data(), sol.x.data() + program.variable_count());
    result.objective = program.objective().evaluate(result.x);
  }
  return result;
}

}  // namespace opfptas
