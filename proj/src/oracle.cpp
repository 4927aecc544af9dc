#include "opfptas/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <sstream>
#include <thread>

#include "opfptas/assumptions.hpp"
#include "opfptas/bfm.hpp"

namespace opfptas {

namespace {

struct Solved {
  OracleEntry entry;
  FlowState state;
};

Solved solve_assignment(const Instance& instance, std::uint32_t mask, double phi,
                        const SolverConfig& solver, bool keep_state) {
  const auto& discrete = instance.discrete_users();
  std::vector<int> off, on;
  for (size_t b = 0; b < discrete.size(); ++b) {
    ((mask >> b) & 1u ? on : off).push_back(discrete[b]);
  }
  Solved out;
  out.entry.mask = mask;
  const BfmProgram p = build_p1(instance, off, on, phi);
  SolveResult r = solve(p.program, solver);
  if (r.status == SolveStatus::NumericalError || r.status == SolveStatus::IterationLimit) {
    SolverConfig cfg = solver;
    cfg.tol_feas = std::min(cfg.tol_feas, 1e-9);
    cfg.tol_gap = std::min(cfg.tol_gap, 1e-9);
    cfg.max_iters = std::max(cfg.max_iters, 200);
    r = solve(p.program, cfg);
  }
  if (r.status == SolveStatus::Infeasible) {
    out.entry.status = "infeasible";
    return out;
  }
  if (!r.optimal()) {
    out.entry.status = "error";
    return out;
  }
  out.entry.status = "optimal";
  const FlowState st = p.extract(r.x, instance);
  out.entry.objective = objective(instance, st, phi);
  if (keep_state) out.state = st;
  return out;
}

}  // namespace

OracleResult brute_force(const Instance& instance, double phi, const OracleConfig& config) {
  const auto& discrete = instance.discrete_users();
  if (static_cast<int>(discrete.size()) > kOracleMaxUsers) {
    throw InputError("oracle supports at most " + std::to_string(kOracleMaxUsers) +
                     " discrete users, got " + std::to_string(discrete.size()));
  }
  if (config.workers < 1) throw InputError("worker count must be at least 1");

  OracleResult out;
  const std::uint64_t total = std::uint64_t{1} << discrete.size();
  out.assignments = static_cast<std::int64_t>(total);

  std::vector<OracleEntry> entries(total);
  auto work = [&](std::uint64_t i) {
    const auto gray = static_cast<std::uint32_t>(i ^ (i >> 1));
    entries[i] = solve_assignment(instance, gray, phi, config.solver, false).entry;
  };
  if (config.workers == 1) {
    for (std::uint64_t i = 0; i < total; ++i) work(i);
  } else {
    std::atomic<std::uint64_t> cursor{0};
    std::vector<std::thread> pool;
    const auto count = std::min<std::uint64_t>(total, static_cast<std::uint64_t>(config.workers));
    for (std::uint64_t w = 0; w < count; ++w) {
      pool.emplace_back([&] {
        for (std::uint64_t i = cursor++; i < total; i = cursor++) work(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  std::int64_t winner = -1;
  for (std::uint64_t i = 0; i < total; ++i) {
    const OracleEntry& e = entries[i];
    if (e.status == "error") ++out.errors;
    if (e.status != "optimal") continue;
    ++out.feasible_count;
    if (winner < 0 || e.objective < entries[static_cast<size_t>(winner)].objective - 1e-9) {
      winner = static_cast<std::int64_t>(i);
    }
  }
  if (winner >= 0) {
    const OracleEntry& w = entries[static_cast<size_t>(winner)];
    out.feasible = true;
    out.mask = w.mask;
    out.relaxed_objective = w.objective;
    const Solved s = solve_assignment(instance, w.mask, phi, config.solver, true);
    TightenConfig tcfg;
    tcfg.solver = config.solver;
    out.state = tighten_to_exact(instance, unrotate_solution(s.state, phi), tcfg).state;
    out.objective = objective(instance, out.state);
    out.x.assign(static_cast<size_t>(instance.user_count()), 1.0);
    for (size_t b = 0; b < discrete.size(); ++b) {
      out.x[static_cast<size_t>(discrete[b])] = (w.mask >> b) & 1u ? 1.0 : 0.0;
    }
  }
  if (config.keep_table) out.table = std::move(entries);
  return out;
}

std::string OracleResult::table_csv() const {
  std::ostringstream os;
  os << "mask,x,status,objective\n";
  char buf[32];
  for (const auto& e : table) {
    std::string bits;
    for (size_t b = 0; (std::uint64_t{1} << b) < static_cast<std::uint64_t>(assignments); ++b) {
      bits.push_back((e.mask >> b) & 1u ? '1' : '0');
    }
    std::snprintf(buf, sizeof buf, "%.17g", e.objective);
    os << e.mask << ',' << bits << ',' << e.status << ',' << (e.status == "optimal" ? buf : "")
       << '\n';
  }
  return os.str();
}

}  // namespace opfptas
