#include "opfptas/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace opfptas {

namespace {

size_t at(int i) { return static_cast<size_t>(i); }

constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// Dense tableau T = B^-1 [A | I | art] over the columns of the standard form
// A x + s = b (rows with b < 0 negated and given an artificial).
class Tableau {
 public:
  Tableau(const LpProgram& lp, const SimplexConfig& config) : config_(config) {
    n_ = lp.variable_count();
    m_ = lp.row_count();
    std::vector<int> negated;
    for (int r = 0; r < m_; ++r) {
      if (lp.rows[at(r)].rhs < 0.0) negated.push_back(r);
    }
    cols_ = n_ + m_ + static_cast<int>(negated.size());
    T_.assign(at(m_) * at(cols_), 0.0);
    rhs_.assign(at(m_), 0.0);
    upper_.assign(at(cols_), kUnbounded);
    for (int j = 0; j < n_; ++j) upper_[at(j)] = 1.0;
    value_.assign(at(cols_), 0.0);
    basis_.assign(at(m_), -1);
    row_of_.assign(at(cols_), -1);

    int next_art = n_ + m_;
    for (int r = 0; r < m_; ++r) {
      const LpRow& row = lp.rows[at(r)];
      double scale = std::abs(row.rhs);
      for (const auto& [var, coef] : row.terms) scale = std::max(scale, std::abs(coef));
      scale = scale > 0.0 ? 1.0 / scale : 1.0;
      const double sign = row.rhs < 0.0 ? -1.0 : 1.0;
      for (const auto& [var, coef] : row.terms) cell(r, var) += sign * scale * coef;
      cell(r, n_ + r) = sign;
      rhs_[at(r)] = sign * scale * row.rhs;
      if (sign < 0.0) {
        cell(r, next_art) = 1.0;
        set_basic(r, next_art);
        ++next_art;
      } else {
        set_basic(r, n_ + r);
      }
    }
    art_begin_ = n_ + m_;
  }

  int artificial_count() const { return cols_ - art_begin_; }

  LpStatus optimize(const std::vector<double>& cost, int& iterations, bool& bland) {
    int degenerate = 0;
    const int bland_after = 10 * (cols_ + m_);
    while (iterations < config_.max_iters) {
      std::vector<double> dual(at(m_), 0.0);
      for (int r = 0; r < m_; ++r) dual[at(r)] = cost[at(basis_[at(r)])];

      int enter = -1;
      double best = 0.0;
      double dir = 0.0;
      for (int j = 0; j < cols_; ++j) {
        if (row_of_[at(j)] >= 0 || upper_[at(j)] == 0.0) continue;
        double d = cost[at(j)];
        for (int r = 0; r < m_; ++r) d -= dual[at(r)] * cell(r, j);
        const bool at_upper = value_[at(j)] > 0.0;
        double gain = 0.0;
        double sgn = 0.0;
        if (!at_upper && d < -config_.cost_tol) {
          gain = -d;
          sgn = 1.0;
        } else if (at_upper && d > config_.cost_tol) {
          gain = d;
          sgn = -1.0;
        }
        if (sgn == 0.0) continue;
        if (bland) {
          enter = j;
          dir = sgn;
          break;
        }
        if (gain > best) {
          best = gain;
          enter = j;
          dir = sgn;
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      // Ratio test.
      double step = upper_[at(enter)];
      int leave = -1;
      bool leave_to_upper = false;
      double leave_pivot = 0.0;
      for (int r = 0; r < m_; ++r) {
        const double alpha = dir * cell(r, enter);
        const int b = basis_[at(r)];
        double limit = kUnbounded;
        bool to_upper = false;
        if (alpha > config_.pivot_tol) {
          limit = std::max(0.0, value_[at(b)]) / alpha;
        } else if (alpha < -config_.pivot_tol && upper_[at(b)] < kUnbounded) {
          limit = std::max(0.0, upper_[at(b)] - value_[at(b)]) / -alpha;
          to_upper = true;
        } else {
          continue;
        }
        bool take = false;
        if (limit < step - 1e-12) {
          take = true;
        } else if (limit <= step + 1e-12 && leave >= 0) {
          take = bland ? b < basis_[at(leave)] : std::abs(alpha) > leave_pivot;
        }
        if (take) {
          step = limit;
          leave = r;
          leave_to_upper = to_upper;
          leave_pivot = std::abs(alpha);
        }
      }
      if (step == kUnbounded) return LpStatus::Unbounded;
      ++iterations;
      if (step < 1e-12) {
        if (++degenerate > bland_after) bland = true;
      }

      for (int r = 0; r < m_; ++r) {
        const int b = basis_[at(r)];
        value_[at(b)] -= dir * step * cell(r, enter);
      }
      value_[at(enter)] += dir * step;
      if (leave < 0) {
        // Bound flip of the entering variable.
        value_[at(enter)] = dir > 0.0 ? upper_[at(enter)] : 0.0;
        continue;
      }
      const int out = basis_[at(leave)];
      value_[at(out)] = leave_to_upper ? upper_[at(out)] : 0.0;
      pivot(leave, enter);
    }
    return LpStatus::NumericalError;
  }

  void forbid_artificials() {
    for (int j = art_begin_; j < cols_; ++j) upper_[at(j)] = 0.0;
  }

  double artificial_sum() const {
    double s = 0.0;
    for (int j = art_begin_; j < cols_; ++j) s += value_[at(j)];
    return s;
  }

  /// Recomputes basic values from the transformed right-hand side.
  void refresh() {
    for (int r = 0; r < m_; ++r) {
      double v = rhs_[at(r)];
      for (int j = 0; j < cols_; ++j) {
        if (row_of_[at(j)] < 0 && value_[at(j)] != 0.0) v -= cell(r, j) * value_[at(j)];
      }
      value_[at(basis_[at(r)])] = v;
    }
  }

  int cols() const { return cols_; }
  double value(int j) const { return value_[at(j)]; }
  const std::vector<int>& basis() const { return basis_; }

 private:
  double& cell(int r, int c) { return T_[at(r) * at(cols_) + at(c)]; }
  double cell(int r, int c) const { return T_[at(r) * at(cols_) + at(c)]; }

  void set_basic(int r, int j) {
    basis_[at(r)] = j;
    row_of_[at(j)] = r;
  }

  void pivot(int r, int j) {
    const double p = cell(r, j);
    for (int c = 0; c < cols_; ++c) cell(r, c) /= p;
    rhs_[at(r)] /= p;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = cell(i, j);
      if (f == 0.0) continue;
      for (int c = 0; c < cols_; ++c) cell(i, c) -= f * cell(r, c);
      rhs_[at(i)] -= f * rhs_[at(r)];
    }
    row_of_[at(basis_[at(r)])] = -1;
    set_basic(r, j);
  }

  const SimplexConfig& config_;
  int n_ = 0, m_ = 0, cols_ = 0, art_begin_ = 0;
  std::vector<double> T_;
  std::vector<double> rhs_;
  std::vector<double> upper_;
  std::vector<double> value_;
  std::vector<int> basis_;
  std::vector<int> row_of_;
};

}  // namespace

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::NumericalError: return "numerical_error";
  }
  return "unknown";
}

double LpProgram::evaluate(std::span<const double> x) const {
  double v = constant;
  for (size_t j = 0; j < cost.size(); ++j) v += cost[j] * x[j];
  return v;
}

double LpProgram::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (double xj : x) worst = std::max({worst, -xj, xj - 1.0});
  for (const LpRow& row : rows) {
    double lhs = 0.0;
    for (const auto& [var, coef] : row.terms) lhs += coef * x[at(var)];
    worst = std::max(worst, lhs - row.rhs);
  }
  return worst;
}

void LpProgram::dump(std::ostream& os) const {
  os << "vars " << variable_count() << " rows " << row_count() << "\n";
  os << "min " << constant;
  for (int j = 0; j < variable_count(); ++j) os << " + " << cost[at(j)] << "*x" << j;
  os << "\n";
  for (const LpRow& row : rows) {
    os << (row.label.empty() ? "row" : row.label) << ":";
    for (const auto& [var, coef] : row.terms) os << " " << coef << "*x" << var;
    os << " <= " << row.rhs << "\n";
  }
}

VertexSolution solve_vertex(const LpProgram& lp, const SimplexConfig& config) {
  const int n = lp.variable_count();
  for (const LpRow& row : lp.rows) {
    for (const auto& [var, coef] : row.terms) {
      if (var < 0 || var >= n || !std::isfinite(coef)) {
        throw InputError("LP row '" + row.label + "' references an invalid variable");
      }
    }
    if (!std::isfinite(row.rhs)) throw InputError("LP row '" + row.label + "' has a non-finite bound");
  }

  VertexSolution out;
  Tableau tab(lp, config);
  tab.refresh();

  if (tab.artificial_count() > 0) {
    std::vector<double> phase1(at(tab.cols()), 0.0);
    for (int j = tab.cols() - tab.artificial_count(); j < tab.cols(); ++j) phase1[at(j)] = 1.0;
    const LpStatus s = tab.optimize(phase1, out.iterations, out.bland);
    if (s != LpStatus::Optimal) {
      out.status = LpStatus::NumericalError;
      return out;
    }
    tab.refresh();
    if (tab.artificial_sum() > 1e-9) {
      out.status = LpStatus::Infeasible;
      return out;
    }
  }
  tab.forbid_artificials();

  double cscale = 0.0;
  for (double c : lp.cost) cscale = std::max(cscale, std::abs(c));
  if (cscale == 0.0) cscale = 1.0;
  std::vector<double> cost(at(tab.cols()), 0.0);
  for (int j = 0; j < n; ++j) cost[at(j)] = lp.cost[at(j)] / cscale;
  out.status = tab.optimize(cost, out.iterations, out.bland);
  if (out.status != LpStatus::Optimal) return out;
  tab.refresh();

  out.x.resize(at(n));
  for (int j = 0; j < n; ++j) out.x[at(j)] = std::clamp(tab.value(j), 0.0, 1.0);
  out.basis = tab.basis();
  std::sort(out.basis.begin(), out.basis.end());
  for (int j = 0; j < n; ++j) {
    const double v = out.x[at(j)];
    if (v > config.delta && v < 1.0 - config.delta) out.fractional.push_back(j);
  }
  out.objective = lp.evaluate(out.x);
  return out;
}

LpProgram build_p2(const Instance& instance, const FlowState& relaxed,
                   std::span<const int> free_users, double phi, double delta) {
  const auto& net = instance.network();
  const int n = instance.user_count();
  if (static_cast<int>(relaxed.control.size()) != n ||
      static_cast<int>(relaxed.demand.size()) != n) {
    throw InputError("relaxed state does not match the instance");
  }
  const Complex rot = std::polar(1.0, phi);

  LpProgram lp;
  std::vector<int> var_of(at(n), -1);
  for (int k : free_users) {
    if (k < 0 || k >= n || !instance.user(k).is_discrete()) {
      throw InputError("free user " + std::to_string(k) + " is not a discrete user");
    }
    if (var_of[at(k)] >= 0) throw InputError("free user listed twice");
    var_of[at(k)] = lp.variable_count();
    lp.users.push_back(k);
    lp.cost.push_back(0.0);
    double x = relaxed.control[at(k)];
    if (std::abs(x) <= delta) x = 0.0;
    if (std::abs(x - 1.0) <= delta) x = 1.0;
    lp.reference.push_back(std::clamp(x, 0.0, 1.0));
  }

  for (int k : instance.discrete_users()) {
    const double drop = cost_at_zero(instance.user(k).cost);
    lp.constant += drop;
    if (var_of[at(k)] >= 0) {
      lp.cost[at(var_of[at(k)])] = -drop;
    } else {
      lp.constant -= drop * relaxed.control[at(k)];
    }
  }

  for (int j = 1; j < net.node_count(); ++j) {
    LpRow lower, upper, active, reactive;
    lower.label = "voltage_lower[" + std::to_string(j) + "]";
    upper.label = "voltage_upper[" + std::to_string(j) + "]";
    active.label = "active[" + std::to_string(j) + "]";
    reactive.label = "reactive[" + std::to_string(j) + "]";
    double fixed = 0.0;
    for (int k = 0; k < n; ++k) {
      const Complex Z = net.common_path_impedance(instance.user(k).node, j);
      const int var = var_of[at(k)];
      if (var < 0) {
        fixed += (std::conj(Z) * relaxed.demand[at(k)]).real();
        continue;
      }
      const double a = (std::conj(Z) * instance.user(k).peak()).real();
      if (a != 0.0) {
        lower.terms.emplace_back(var, -a);
        upper.terms.emplace_back(var, a);
        upper.rhs += a * lp.reference[at(var)];
      }
    }
    lower.rhs = fixed;
    for (int k : instance.subtree_users(j)) {
      const int var = var_of[at(k)];
      if (var < 0) continue;
      const Complex d = instance.user(k).peak() * rot;
      if (d.real() != 0.0) {
        active.terms.emplace_back(var, d.real());
        active.rhs += d.real() * lp.reference[at(var)];
      }
      if (d.imag() != 0.0) {
        reactive.terms.emplace_back(var, d.imag());
        reactive.rhs += d.imag() * lp.reference[at(var)];
      }
    }
    for (LpRow* row : {&lower, &upper, &active, &reactive}) {
      if (!row->terms.empty()) lp.rows.push_back(std::move(*row));
    }
  }
  return lp;
}

std::vector<double> round_down(const Instance& instance, const LpProgram& lp,
                               const VertexSolution& vertex, std::span<const int> I0,
                               std::span<const int> I1, double delta) {
  const int n = instance.user_count();
  std::vector<double> x(at(n), 1.0);
  for (int k : I0) x[at(k)] = 0.0;
  for (int k : I1) x[at(k)] = 1.0;
  if (static_cast<int>(vertex.x.size()) != lp.variable_count()) {
    throw InputError("vertex does not match the LP");
  }
  for (int j = 0; j < lp.variable_count(); ++j) {
    const double v = vertex.x[at(j)];
    x[at(lp.users[at(j)])] = v >= 1.0 - delta ? 1.0 : 0.0;
  }
  return x;
}

}  // namespace opfptas
