// Partial-guess approximation scheme: enumerate guesses (I0, I1), solve the
// relaxation, round through a vertex of the rounding LP, re-solve at the
// rounded demands and keep the best candidate.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "opfptas/assumptions.hpp"
#include "opfptas/conic.hpp"
#include "opfptas/flow.hpp"
#include "opfptas/network.hpp"

namespace opfptas {

/// Users forced off (I0) and forced on (I1); both hold user indices.
struct Guess {
  std::vector<int> I0;
  std::vector<int> I1;
};

/// floor(4m / eps).
int guess_size_cap(int edges, double epsilon);

/// I1 = {k in discrete \ I0 : f_k(0) > min over I0 of f_k(0)}; empty for an
/// empty I0. `drop` is indexed by user.
std::vector<int> forced_on(std::span<const int> discrete, std::span<const double> drop,
                           std::span<const int> I0);

/// Lazy stream of guesses: the empty guess, then all subsets of size 1, 2, ...
/// up to `max_size`. Within a size, subsets are taken in lexicographic order
/// over the users sorted by decreasing f_k(0) (ties by index).
class GuessStream {
 public:
  GuessStream(std::vector<int> discrete, std::vector<double> drop, int max_size,
              std::optional<std::int64_t> budget = std::nullopt);

  bool next(Guess& out);
  std::int64_t emitted() const { return emitted_; }
  /// True once every subset up to max_size has been produced.
  bool complete() const { return complete_; }
  int max_size() const { return max_size_; }

 private:
  bool advance();

  std::vector<int> discrete_;
  std::vector<double> drop_;
  std::vector<int> order_;
  int max_size_ = 0;
  std::optional<std::int64_t> budget_;
  std::vector<int> combo_;
  bool started_ = false;
  bool complete_ = false;
  std::int64_t emitted_ = 0;
};

std::vector<Guess> enumerate_guesses(std::span<const int> discrete,
                                     std::span<const double> drop, int edges,
                                     double epsilon,
                                     std::optional<std::int64_t> budget = std::nullopt);

struct PtasConfig {
  double epsilon = 1.0;
  std::optional<std::int64_t> guess_budget;
  /// Stop once best - f_low <= gap * f_low. Defaults to epsilon.
  std::optional<double> early_stop_gap;
  bool early_stop = true;
  int workers = 1;
  /// Refuse to run when an assumption check fails.
  bool strict = false;
  double delta = 1e-7;
  SolverConfig solver;
};

/// Per-guess pipeline result, in the rotated frame.
struct GuessOutcome {
  enum class Status { Infeasible, Candidate, Error };
  Status status = Status::Infeasible;
  std::string message;
  FlowState candidate;
  std::vector<double> x_hat;
  double p1_objective = 0.0;
  double p2_objective = 0.0;     // LP objective at the vertex
  double p2_reference = 0.0;     // LP objective at x'
  double rounded_drop_cost = 0.0;// sum f_k(0) (1 - x_hat_k)
  double candidate_objective = 0.0;
  int free_users = 0;
  int lp_rows = 0;
  int fractional = 0;
  double max_free_drop = 0.0;    // max f_k(0) over free users
  bool reused_p1 = false;        // x' was already integral
  bool retried = false;
  /// candidate <= (1 + eps) P1 + 1e-7
  bool within_bound = true;
  /// fractional * max_free_drop <= eps * P1: the rounding-loss condition
  /// under which the bound is guaranteed.
  bool premise = true;
  double p1_seconds = 0.0;
  double p2_seconds = 0.0;
  double p3_seconds = 0.0;
};

GuessOutcome evaluate_guess(const Instance& instance, const Guess& guess, double phi,
                            const PtasConfig& config);

struct LowerBound {
  bool feasible = false;
  double value = 0.0;
  FlowState state;  // rotated frame
};

/// Optimum of the relaxation with no guess.
LowerBound lower_bound(const Instance& instance, double phi, const SolverConfig& solver = {});

struct GuessTrace {
  std::int64_t id = 0;
  int I0 = 0;
  int I1 = 0;
  int free_users = 0;
  std::string status;
  double p1 = 0.0;
  double p2 = 0.0;
  double candidate = 0.0;
  int fractional = 0;
  int lp_rows = 0;
  bool reused = false;
  bool within_bound = true;
  bool premise = true;
};

struct PtasTimings {
  double total = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
  double tighten = 0.0;
};

struct PtasReport {
  bool feasible = false;
  std::string termination;  // complete | early_stop | budget | infeasible
  FlowState best;           // original frame, exact
  std::vector<double> x_hat;
  double objective = 0.0;   // f(best)
  double candidate_objective = 0.0;  // best f^phi before tightening
  double lower_bound = 0.0;
  std::optional<double> oracle_objective;
  std::optional<double> ratio;       // objective / oracle
  double phi = 0.0;
  double epsilon = 0.0;
  int max_guess_size = 0;
  std::int64_t guesses_explored = 0;
  std::int64_t guesses_feasible = 0;
  std::int64_t best_guess = -1;
  bool complete = false;       // the full guess stream was consumed
  bool guarantee = false;      // complete, and every assumption check passed
  int max_fractional = 0;
  int row_bound = 0;           // 4m
  std::int64_t hard_errors = 0;
  std::int64_t bound_violations = 0;
  std::int64_t premise_violations = 0;  // bound violations with the premise satisfied
  double tighten_gap = 0.0;
  AssumptionReport assumptions;
  PtasTimings timings;
  std::vector<GuessTrace> trace;

  std::string to_json(bool include_timings = false) const;
  std::string trace_csv() const;
};

/// Runs the scheme with phi = rotation_angle(instance). Throws InputError in
/// strict mode when an assumption fails.
PtasReport run_ptas(const Instance& instance, const PtasConfig& config = {});

}  // namespace opfptas
