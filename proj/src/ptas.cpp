#include "opfptas/ptas.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

#include "opfptas/bfm.hpp"
#include "opfptas/lp.hpp"

namespace opfptas {

namespace {

size_t at(int i) { return static_cast<size_t>(i); }

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SolverConfig tightened(const SolverConfig& base) {
  SolverConfig cfg = base;
  cfg.tol_feas = std::min(base.tol_feas, 1e-9);
  cfg.tol_gap = std::min(base.tol_gap, 1e-9);
  cfg.max_iters = std::max(base.max_iters, 200);
  return cfg;
}

// P1 must resolve x' to within delta of its bounds. The duality gap carried by
// a free user is about drop_k * (1 - x'_k), so the gap floor follows the
// cheapest free user.
SolverConfig p1_solver(const SolverConfig& base, std::span<const double> drop,
                       std::span<const int> free_users, double delta) {
  double cheapest = std::numeric_limits<double>::infinity();
  for (int k : free_users) {
    if (drop[at(k)] > 0.0) cheapest = std::min(cheapest, drop[at(k)]);
  }
  SolverConfig cfg = base;
  if (std::isfinite(cheapest)) {
    const double floor = 0.1 * delta * cheapest;
    cfg.gap_floor = cfg.gap_floor > 0.0 ? std::min(cfg.gap_floor, floor) : floor;
  }
  return cfg;
}

const char* status_name(GuessOutcome::Status s) {
  switch (s) {
    case GuessOutcome::Status::Infeasible: return "infeasible";
    case GuessOutcome::Status::Candidate: return "candidate";
    case GuessOutcome::Status::Error: return "error";
  }
  return "unknown";
}

}  // namespace

int guess_size_cap(int edges, double epsilon) {
  if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
  const double cap = std::floor(4.0 * edges / epsilon);
  return cap > 1e9 ? 1000000000 : static_cast<int>(cap);
}

std::vector<int> forced_on(std::span<const int> discrete, std::span<const double> drop,
                           std::span<const int> I0) {
  std::vector<int> out;
  if (I0.empty()) return out;
  double floor_cost = drop[at(I0.front())];
  for (int k : I0) floor_cost = std::min(floor_cost, drop[at(k)]);
  for (int k : discrete) {
    if (std::find(I0.begin(), I0.end(), k) != I0.end()) continue;
    if (drop[at(k)] > floor_cost) out.push_back(k);
  }
  return out;
}

GuessStream::GuessStream(std::vector<int> discrete, std::vector<double> drop, int max_size,
                         std::optional<std::int64_t> budget)
    : discrete_(std::move(discrete)), drop_(std::move(drop)), budget_(budget) {
  if (budget_ && *budget_ < 1) throw InputError("guess budget must be at least 1");
  order_ = discrete_;
  std::stable_sort(order_.begin(), order_.end(), [this](int a, int b) {
    if (drop_[at(a)] != drop_[at(b)]) return drop_[at(a)] > drop_[at(b)];
    return a < b;
  });
  max_size_ = std::clamp(max_size, 0, static_cast<int>(order_.size()));
}

bool GuessStream::advance() {
  if (!started_) {
    started_ = true;
    combo_.clear();
    return true;
  }
  const int n = static_cast<int>(order_.size());
  const int c = static_cast<int>(combo_.size());
  for (int i = c - 1; i >= 0; --i) {
    if (combo_[at(i)] < n - c + i) {
      ++combo_[at(i)];
      for (int j = i + 1; j < c; ++j) combo_[at(j)] = combo_[at(j - 1)] + 1;
      return true;
    }
  }
  if (c + 1 > max_size_) return false;
  combo_.resize(at(c + 1));
  for (int j = 0; j <= c; ++j) combo_[at(j)] = j;
  return true;
}

bool GuessStream::next(Guess& out) {
  if (complete_) return false;
  if (budget_ && emitted_ >= *budget_) {
    // Peek: the stream is complete if nothing is left.
    if (!started_ || !advance()) complete_ = started_;
    return false;
  }
  if (!advance()) {
    complete_ = true;
    return false;
  }
  out.I0.clear();
  for (int p : combo_) out.I0.push_back(order_[at(p)]);
  std::sort(out.I0.begin(), out.I0.end());
  out.I1 = forced_on(discrete_, drop_, out.I0);
  ++emitted_;
  return true;
}

std::vector<Guess> enumerate_guesses(std::span<const int> discrete,
                                     std::span<const double> drop, int edges,
                                     double epsilon, std::optional<std::int64_t> budget) {
  GuessStream stream({discrete.begin(), discrete.end()}, {drop.begin(), drop.end()},
                     guess_size_cap(edges, epsilon), budget);
  std::vector<Guess> out;
  Guess g;
  while (stream.next(g)) out.push_back(g);
  return out;
}

GuessOutcome evaluate_guess(const Instance& instance, const Guess& guess, double phi,
                            const PtasConfig& config) {
  GuessOutcome out;
  const int n = instance.user_count();
  const std::vector<double> drop = instance.drop_costs();

  std::vector<char> pinned(at(n), 0);
  for (int k : guess.I0) pinned[at(k)] = 1;
  for (int k : guess.I1) pinned[at(k)] = 1;
  std::vector<int> free_users;
  for (int k : instance.discrete_users()) {
    if (!pinned[at(k)]) free_users.push_back(k);
  }
  out.free_users = static_cast<int>(free_users.size());

  auto t0 = Clock::now();
  const BfmProgram p1 = build_p1(instance, guess.I0, guess.I1, phi);
  const SolverConfig s1 = p1_solver(config.solver, drop, free_users, config.delta);
  SolveResult r1 = solve(p1.program, s1);
  if (r1.status == SolveStatus::NumericalError || r1.status == SolveStatus::IterationLimit) {
    r1 = solve(p1.program, tightened(s1));
    out.retried = true;
  }
  out.p1_seconds = seconds_since(t0);
  if (r1.status == SolveStatus::Infeasible) {
    out.status = GuessOutcome::Status::Infeasible;
    return out;
  }
  if (!r1.optimal()) {
    out.status = GuessOutcome::Status::Error;
    out.message = std::string("P1 solver status ") + to_string(r1.status);
    return out;
  }
  const FlowState relaxed = p1.extract(r1.x, instance);
  out.p1_objective = objective(instance, relaxed, phi);

  t0 = Clock::now();
  const LpProgram lp = build_p2(instance, relaxed, free_users, phi, config.delta);
  SimplexConfig scfg;
  scfg.delta = config.delta;
  const VertexSolution vertex = solve_vertex(lp, scfg);
  out.p2_seconds = seconds_since(t0);
  if (vertex.status != LpStatus::Optimal) {
    out.status = GuessOutcome::Status::Error;
    out.message = std::string("P2 status ") + to_string(vertex.status);
    return out;
  }
  out.lp_rows = lp.row_count();
  out.fractional = static_cast<int>(vertex.fractional.size());
  out.p2_objective = vertex.objective;
  out.p2_reference = lp.evaluate(lp.reference);
  for (int k : free_users) out.max_free_drop = std::max(out.max_free_drop, drop[at(k)]);

  out.x_hat = round_down(instance, lp, vertex, guess.I0, guess.I1, config.delta);
  for (int k : instance.discrete_users()) {
    out.rounded_drop_cost += drop[at(k)] * (1.0 - out.x_hat[at(k)]);
  }

  bool integral = true;
  for (int k : free_users) {
    if (std::abs(relaxed.control[at(k)] - out.x_hat[at(k)]) > config.delta) integral = false;
  }

  t0 = Clock::now();
  if (integral) {
    out.reused_p1 = true;
    out.candidate = relaxed;
    for (int k : instance.discrete_users()) {
      out.candidate.control[at(k)] = out.x_hat[at(k)];
      out.candidate.demand[at(k)] = instance.user(k).peak() * out.x_hat[at(k)];
    }
  } else {
    const BfmProgram p3 = build_p3(instance, out.x_hat, relaxed.demand, phi);
    SolveResult r3 = solve(p3.program, config.solver);
    if (!r3.optimal()) {
      r3 = solve(p3.program, tightened(config.solver));
      out.retried = true;
    }
    if (!r3.optimal()) {
      out.p3_seconds = seconds_since(t0);
      out.status = GuessOutcome::Status::Error;
      out.message = std::string("P3 at the rounded point returned ") + to_string(r3.status);
      return out;
    }
    out.candidate = p3.extract(r3.x, instance);
  }
  out.p3_seconds = seconds_since(t0);
  out.candidate_objective = objective(instance, out.candidate, phi);
  out.status = GuessOutcome::Status::Candidate;

  const double eps = config.epsilon;
  out.within_bound = out.candidate_objective <= (1.0 + eps) * out.p1_objective + 1e-7;
  out.premise = out.fractional * out.max_free_drop <= eps * out.p1_objective + 1e-12;
  return out;
}

LowerBound lower_bound(const Instance& instance, double phi, const SolverConfig& solver) {
  LowerBound out;
  const BfmProgram p1 = build_p1(instance, {}, {}, phi);
  const SolverConfig s1 = p1_solver(solver, instance.drop_costs(), instance.discrete_users(), 1e-7);
  SolveResult r = solve(p1.program, s1);
  if (r.status == SolveStatus::NumericalError || r.status == SolveStatus::IterationLimit) {
    r = solve(p1.program, tightened(s1));
  }
  if (!r.optimal()) return out;
  out.feasible = true;
  out.state = p1.extract(r.x, instance);
  out.value = objective(instance, out.state, phi);
  return out;
}

PtasReport run_ptas(const Instance& instance, const PtasConfig& config) {
  const auto t_start = Clock::now();
  if (!(config.epsilon > 0.0)) throw InputError("epsilon must be positive");
  if (config.workers < 1) throw InputError("worker count must be at least 1");

  PtasReport report;
  report.epsilon = config.epsilon;
  report.assumptions = check_assumptions(instance);
  if (config.strict && !report.assumptions.all_ok()) {
    std::string msg = "assumption check failed:";
    for (const auto& v : report.assumptions.violations) {
      msg += " " + v.assumption + " (" + v.entity + ": " + v.detail + ");";
    }
    throw InputError(msg);
  }
  const double phi = report.assumptions.phi;
  report.phi = phi;
  const int m = instance.network().edge_count();
  report.row_bound = 4 * m;

  const auto& discrete = instance.discrete_users();
  const std::vector<double> drop = instance.drop_costs();
  GuessStream stream(discrete, drop, guess_size_cap(m, config.epsilon), config.guess_budget);
  report.max_guess_size = stream.max_size();
  const double gap = config.early_stop_gap.value_or(config.epsilon);

  std::optional<GuessOutcome> best;
  bool lower_known = false;
  bool stop = false;
  const size_t batch_size = config.workers == 1 ? 1 : static_cast<size_t>(config.workers) * 4;
  std::int64_t next_id = 0;

  while (!stop) {
    std::vector<Guess> batch;
    Guess g;
    while (batch.size() < batch_size && stream.next(g)) batch.push_back(g);
    if (batch.empty()) break;

    std::vector<GuessOutcome> results(batch.size());
    if (config.workers == 1 || batch.size() == 1) {
      for (size_t i = 0; i < batch.size(); ++i) {
        results[i] = evaluate_guess(instance, batch[i], phi, config);
      }
    } else {
      std::atomic<size_t> cursor{0};
      std::vector<std::thread> pool;
      const size_t count = std::min(batch.size(), static_cast<size_t>(config.workers));
      for (size_t w = 0; w < count; ++w) {
        pool.emplace_back([&] {
          for (size_t i = cursor++; i < batch.size(); i = cursor++) {
            try {
              results[i] = evaluate_guess(instance, batch[i], phi, config);
            } catch (const std::exception& e) {
              results[i].status = GuessOutcome::Status::Error;
              results[i].message = e.what();
            }
          }
        });
      }
      for (auto& t : pool) t.join();
    }

    for (size_t i = 0; i < batch.size(); ++i) {
      GuessOutcome& r = results[i];
      const std::int64_t id = next_id++;
      ++report.guesses_explored;
      report.timings.p1 += r.p1_seconds;
      report.timings.p2 += r.p2_seconds;
      report.timings.p3 += r.p3_seconds;

      GuessTrace tr;
      tr.id = id;
      tr.I0 = static_cast<int>(batch[i].I0.size());
      tr.I1 = static_cast<int>(batch[i].I1.size());
      tr.free_users = r.free_users;
      tr.status = status_name(r.status);
      tr.p1 = r.p1_objective;
      tr.p2 = r.p2_objective;
      tr.candidate = r.candidate_objective;
      tr.fractional = r.fractional;
      tr.lp_rows = r.lp_rows;
      tr.reused = r.reused_p1;
      tr.within_bound = r.within_bound;
      tr.premise = r.premise;
      report.trace.push_back(tr);

      if (id == 0) {
        if (r.status == GuessOutcome::Status::Infeasible) {
          report.termination = "infeasible";
          stop = true;
          break;
        }
        if (r.status == GuessOutcome::Status::Candidate) {
          report.lower_bound = r.p1_objective;
          lower_known = true;
        }
      }
      if (r.status == GuessOutcome::Status::Error) {
        ++report.hard_errors;
        continue;
      }
      if (r.status != GuessOutcome::Status::Candidate) continue;

      ++report.guesses_feasible;
      report.max_fractional = std::max(report.max_fractional, r.fractional);
      if (!r.within_bound) {
        ++report.bound_violations;
        if (r.premise) ++report.premise_violations;
      }
      if (!best || r.candidate_objective < best->candidate_objective - 1e-9) {
        best = std::move(r);
        report.best_guess = id;
      }
      if (config.early_stop && lower_known &&
          best->candidate_objective - report.lower_bound <=
              gap * report.lower_bound + 1e-12) {
        report.termination = "early_stop";
        stop = true;
        break;
      }
    }
  }
  report.complete = stream.complete() && report.termination.empty();
  if (report.termination.empty()) report.termination = report.complete ? "complete" : "budget";
  report.guarantee = report.complete && report.assumptions.all_ok();

  if (best) {
    report.feasible = true;
    report.candidate_objective = best->candidate_objective;
    report.x_hat = best->x_hat;
    const auto t0 = Clock::now();
    const FlowState original = unrotate_solution(best->candidate, phi);
    TightenConfig tcfg;
    tcfg.solver = config.solver;
    const TightenResult tight = tighten_to_exact(instance, original, tcfg);
    report.timings.tighten = seconds_since(t0);
    report.best = tight.state;
    report.tighten_gap = tight.soc_gap;
    report.objective = objective(instance, report.best);
  } else if (report.termination != "infeasible") {
    report.termination = "no_candidate";
  }
  report.timings.total = seconds_since(t_start);
  return report;
}

}  // namespace opfptas
