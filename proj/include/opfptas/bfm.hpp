// Branch flow model programs: the relaxation with partial guesses (P1), the
// re-solve at fixed demands (P3), the loss-minimizing program used for
// exactness recovery, and the recovery itself.
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "opfptas/conic.hpp"
#include "opfptas/flow.hpp"
#include "opfptas/network.hpp"

namespace opfptas {

/// Where each quantity of a flow state lives in a program's variable vector.
/// An index of -1 means the quantity is a constant of the program.
struct FlowLayout {
  int supply_re = -1;
  int supply_im = -1;
  std::vector<int> control;          // per user
  std::vector<double> fixed_control; // per user, used when control[k] == -1
  std::vector<int> demand_re;        // per user, continuous users only
  std::vector<int> demand_im;
  std::vector<Complex> fixed_demand; // per user, original frame
  std::vector<int> flow_re;          // per edge
  std::vector<int> flow_im;
  std::vector<int> current;          // per edge
  std::vector<int> voltage;          // per node, -1 at the root
};

struct BfmProgram {
  ConicProgram program;
  FlowLayout layout;
  double phi = 0.0;

  /// Flow state read from a solution vector of `program`. Supply and flows are
  /// in the rotated frame of `phi`.
  FlowState extract(std::span<const double> x, const Instance& instance) const;
};

/// Relaxation with x_k = 0 on I0, x_k = 1 on I1 and x_k in [0,1] elsewhere.
/// Continuous users range over their boxes. Throws InputError on overlapping
/// or unknown guess sets.
BfmProgram build_p1(const Instance& instance, std::span<const int> I0,
                    std::span<const int> I1, double phi);

/// Every demand fixed: s_k = s_max x_hat_k for discrete users and s_k =
/// s_prime_k for continuous ones. Both vectors are indexed by user; entries of
/// the other kind are ignored. Throws InputError on fractional x_hat.
BfmProgram build_p3(const Instance& instance, std::span<const double> x_hat,
                    std::span<const Complex> s_prime, double phi);

/// Minimizes total squared current at the demands of `relaxed` with
/// l <= l'' (original frame). Throws InputError if `relaxed` is not feasible
/// for the relaxation within `tol`.
BfmProgram build_copf_prime(const Instance& instance, const FlowState& relaxed,
                            double tol = 1e-6);

struct TightenConfig {
  int max_iters = 100;
  double gap_tol = 1e-8;
  double feasibility_tol = 1e-6;
  SolverConfig solver;
};

struct TightenResult {
  FlowState state;
  int iterations = 0;
  double soc_gap = 0.0;
  bool used_solver = false;  // false when the loss program failed and the input was iterated directly
};

/// Returns a state with the same demands whose currents satisfy
/// l = |S|^2 / v on every edge and whose objective does not exceed the
/// input's. Both states are in the original frame. Throws InputError if the
/// demands violate the exactness condition and std::runtime_error if the
/// iteration does not converge.
TightenResult tighten_to_exact(const Instance& instance, const FlowState& relaxed,
                               const TightenConfig& config = {});

}  // namespace opfptas
