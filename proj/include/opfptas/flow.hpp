// Flow states of the branch flow model and their evaluation.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "opfptas/network.hpp"

namespace opfptas {

/// Candidate solution (s0, s, x, S, v, l). Demands are always stored in the
/// original frame; `supply` and `flow` live in whichever frame the producing
/// program used (see unrotate_solution).
struct FlowState {
  Complex supply;
  std::vector<Complex> demand;   // per user
  std::vector<double> control;   // per user; x_k for discrete users, 1 otherwise
  std::vector<Complex> flow;     // per edge, sending end
  std::vector<double> voltage;   // per node, voltage[0] = v0
  std::vector<double> current;   // per edge

  /// No-load state: zero demand and current, flat voltage.
  static FlowState zero(const Instance& instance);
};

/// Constraint violations, each >= 0.
struct ResidualReport {
  double balance = 0.0;
  double root = 0.0;
  double voltage_drop = 0.0;
  double voltage_bounds = 0.0;
  double capacity = 0.0;
  double reverse_capacity = 0.0;
  double current_limit = 0.0;
  double demand = 0.0;        // s_k outside its set (box, or s_max x_k)
  double soc = 0.0;           // max(0, |S|^2 / v - l)
  double soc_gap = 0.0;       // |l - |S|^2 / v|
  double integrality = 0.0;   // max over discrete users of min(x, 1 - x)
  double sign = 0.0;          // negative v or l
  bool exact = false;         // soc_gap <= tol

  /// Largest violation among the relaxed-model constraints (everything but
  /// soc_gap and integrality).
  double max_violation() const;
  bool feasible(double tol) const { return max_violation() <= tol; }
};

/// Evaluates every constraint of the (rotated, if phi > 0) branch flow model.
ResidualReport verify(const Instance& instance, const FlowState& state,
                      double tol = 1e-6, double phi = 0.0);

/// S per edge and v per node implied by demands and currents.
struct TreeFlow {
  std::vector<Complex> flow;
  std::vector<double> voltage;
};

/// Closed-form sums over subtrees and root paths.
TreeFlow tree_flow(const Instance& instance, std::span<const Complex> demand,
                   std::span<const double> current, double phi = 0.0);

/// Balance from the leaves up, then voltage drops from the root down.
TreeFlow recursive_flow(const Instance& instance, std::span<const Complex> demand,
                        std::span<const double> current, double phi = 0.0);

/// First violated (node j, edge (h,l)) of the exactness condition.
struct ExactnessWitness {
  int node = 0;
  int edge = 0;
  double value = 0.0;  // sum_{k in N_j} Re(z_hl^* s_k) < 0
};

struct ExactnessCheck {
  bool ok = true;
  std::optional<ExactnessWitness> witness;
};

/// sum_{k in N_j} Re(z_hl^* s_k) >= -tol for every node j and every edge of
/// its subtree plus its incoming edge.
ExactnessCheck check_c2(const Instance& instance, std::span<const Complex> demand,
                        double tol = 0.0);

/// Lossless flows S_hat and voltages v_hat of the linear exactness system,
/// with v_hat anchored at the root voltage.
struct LinearizedCheck {
  bool feasible = true;
  std::vector<Complex> flow;
  std::vector<double> voltage;
  std::string reason;
};

LinearizedCheck check_c1(const Instance& instance, const FlowState& state,
                         double tol = 0.0);

/// f(s0, s) with the supply argument -Re(s0 e^{-i phi}). Discrete users cost
/// f_k(0) * (1 - x_k), which coincides with f_k at x in {0, 1}.
double objective(const Instance& instance, const FlowState& state, double phi = 0.0);

}  // namespace opfptas
