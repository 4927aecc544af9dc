// opfptas command-line tool.
//   solve   run the approximation scheme on a case or a generated instance
//   oracle  exhaustive search over on/off assignments (small instances)
//   check   assumption flags and exactness conditions at full demand
//   bench   sweep user counts and seeds, one CSV row per run
//   dump    write the instance as a case file
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "opfptas/assumptions.hpp"
#include "opfptas/cases.hpp"
#include "opfptas/flow.hpp"
#include "opfptas/oracle.hpp"
#include "opfptas/ptas.hpp"

using namespace opfptas;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

struct Source {
  std::string case_path;
  std::string spec_network;
  int users = 100;
  std::string mix = "M";
  std::string cost = "C";
  std::uint64_t seed = 1;
};

void add_source(CLI::App* cmd, Source& src) {
  auto* c = cmd->add_option("--case", src.case_path, "case file, or rbts13");
  auto* s = cmd->add_option("--spec", src.spec_network, "generate users on this network (rbts13 or a case file)");
  c->excludes(s);
  cmd->add_option("--users", src.users, "generated user count")->check(CLI::PositiveNumber);
  cmd->add_option("--mix", src.mix, "R, I or M")->check(CLI::IsMember({"R", "I", "M"}));
  cmd->add_option("--cost", src.cost, "C or U")->check(CLI::IsMember({"C", "U"}));
  cmd->add_option("--seed", src.seed, "generator seed");
}

Case load_source(const Source& src) {
  if (!src.case_path.empty()) return load_case(src.case_path);
  if (src.spec_network.empty()) throw InputError("one of --case or --spec is required");
  InstanceSpec spec;
  spec.network = src.spec_network;
  spec.users = src.users;
  spec.mix = parse_mix(src.mix);
  spec.cost = parse_cost_mode(src.cost);
  spec.seed = src.seed;
  return generate_instance(spec);
}

int default_workers() {
  if (const char* env = std::getenv("OPFPTAS_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 1;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

// objective / lower bound, 1 when both vanish.
double bound_ratio(double objective, double lower) {
  constexpr double kTiny = 1e-12;
  if (lower > kTiny) return objective / lower;
  return objective <= kTiny ? 1.0 : std::numeric_limits<double>::infinity();
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// solve

struct SolveArgs {
  Source src;
  double eps = 1.0;
  std::optional<std::int64_t> budget;
  int workers = 0;
  bool no_early_stop = false;
  bool strict = false;
  bool with_oracle = false;
  bool timings = false;
  std::string output;
  std::string trace;
};

int run_solve(const SolveArgs& a) {
  const Case c = load_source(a.src);
  PtasConfig cfg;
  cfg.epsilon = a.eps;
  cfg.guess_budget = a.budget;
  cfg.workers = a.workers > 0 ? a.workers : default_workers();
  cfg.early_stop = !a.no_early_stop;
  cfg.strict = a.strict;
  PtasReport r = run_ptas(c.instance, cfg);
  if (a.with_oracle) {
    OracleConfig oc;
    oc.workers = cfg.workers;
    oc.keep_table = false;
    const OracleResult o = brute_force(c.instance, r.phi, oc);
    if (o.feasible) {
      r.oracle_objective = o.objective;
      if (r.feasible && o.objective > 0.0) r.ratio = r.objective / o.objective;
    }
  }
  write_text(a.output, r.to_json(a.timings));
  if (!a.trace.empty()) write_text(a.trace, r.trace_csv());
  return r.feasible ? kExitOk : kExitInfeasible;
}

// oracle

struct OracleArgs {
  Source src;
  int workers = 0;
  std::string output;
  std::string table;
};

int run_oracle(const OracleArgs& a) {
  const Case c = load_source(a.src);
  OracleConfig oc;
  oc.workers = a.workers > 0 ? a.workers : default_workers();
  oc.keep_table = !a.table.empty();
  const double phi = rotation_angle(c.instance);
  const OracleResult o = brute_force(c.instance, phi, oc);
  Json j;
  j["feasible"] = o.feasible;
  j["objective"] = o.feasible ? Json(o.objective) : Json(nullptr);
  j["relaxed_objective"] = o.feasible ? Json(o.relaxed_objective) : Json(nullptr);
  j["phi"] = phi;
  j["mask"] = o.mask;
  j["x"] = o.x;
  j["assignments"] = o.assignments;
  j["feasible_assignments"] = o.feasible_count;
  j["errors"] = o.errors;
  write_text(a.output, j.dump(2));
  if (!a.table.empty()) write_text(a.table, o.table_csv());
  return o.feasible ? kExitOk : kExitInfeasible;
}

// check

struct CheckArgs {
  Source src;
  std::string output;
};

int run_check(const CheckArgs& a) {
  const Case c = load_source(a.src);
  const Instance& inst = c.instance;
  const AssumptionReport rep = check_assumptions(inst);

  FlowState full = FlowState::zero(inst);
  for (int k = 0; k < inst.user_count(); ++k) {
    full.demand[static_cast<size_t>(k)] = inst.user(k).peak();
    full.control[static_cast<size_t>(k)] = 1.0;
  }
  const ExactnessCheck c2 = check_c2(inst, full.demand);
  const LinearizedCheck c1 = check_c1(inst, full);

  Json j;
  j["network"] = inst.network().name();
  j["nodes"] = inst.network().node_count();
  j["edges"] = inst.network().edge_count();
  j["users"] = inst.user_count();
  j["discrete_users"] = inst.discrete_users().size();
  Json flags;
  flags["A0"] = rep.a0_ok;
  flags["A1"] = rep.a1_ok;
  flags["A2"] = rep.a2_ok;
  flags["A3"] = rep.a3_ok;
  flags["A4"] = rep.a4_ok;
  flags["consumers"] = rep.consumers_ok;
  flags["rotated"] = rep.rotated_ok;
  j["assumptions"] = flags;
  j["theta"] = rep.theta;
  j["phi"] = rep.phi;
  Json v = Json::array();
  for (const auto& x : rep.violations) {
    v.push_back({{"assumption", x.assumption}, {"entity", x.entity}, {"detail", x.detail}});
  }
  j["violations"] = v;
  Json jc2;
  jc2["ok"] = c2.ok;
  if (c2.witness) {
    jc2["node"] = c2.witness->node;
    jc2["edge"] = c2.witness->edge;
    jc2["value"] = c2.witness->value;
  }
  j["C2_full_demand"] = jc2;
  j["C1_full_demand"] = {{"ok", c1.feasible}, {"reason", c1.reason}};
  Json meta;
  meta["derived_current_limits"] = c.metadata.derived_current_limits;
  meta["default_voltage_bounds"] = c.metadata.default_voltage_bounds;
  meta["default_root_voltage"] = c.metadata.default_root_voltage;
  j["metadata"] = meta;
  write_text(a.output, j.dump(2));
  return kExitOk;
}

// bench

struct BenchArgs {
  std::string network = "rbts13";
  std::vector<int> users{100, 200, 500};
  int seeds = 1;
  std::uint64_t first_seed = 1;
  std::string mix = "M";
  std::string cost = "C";
  double eps = 1.0;
  std::optional<std::int64_t> budget;
  int workers = 0;
  bool with_oracle = false;
  std::string output;
};

int run_bench(const BenchArgs& a) {
  std::ostringstream csv;
  csv << ResultRow::csv_header() << '\n';
  for (int n : a.users) {
    for (int s = 0; s < a.seeds; ++s) {
      InstanceSpec spec;
      spec.network = a.network;
      spec.users = n;
      spec.mix = parse_mix(a.mix);
      spec.cost = parse_cost_mode(a.cost);
      spec.seed = a.first_seed + static_cast<std::uint64_t>(s);
      const Case c = generate_instance(spec);
      const std::string id = a.mix + a.cost + "-n" + std::to_string(n) + "-s" + std::to_string(spec.seed);

      PtasConfig cfg;
      cfg.epsilon = a.eps;
      cfg.guess_budget = a.budget;
      cfg.workers = a.workers > 0 ? a.workers : default_workers();
      const auto t0 = std::chrono::steady_clock::now();
      const PtasReport r = run_ptas(c.instance, cfg);
      ResultRow row;
      row.instance = id;
      row.algorithm = "ptas";
      row.objective = r.objective;
      row.lower_bound = r.lower_bound;
      row.ratio = r.feasible ? bound_ratio(r.objective, r.lower_bound) : 0.0;
      row.runtime = seconds_since(t0);
      row.guesses = r.guesses_explored;
      row.fractional = r.max_fractional;
      csv << row.csv() << '\n';

      if (a.with_oracle) {
        OracleConfig oc;
        oc.workers = cfg.workers;
        oc.keep_table = false;
        const auto t1 = std::chrono::steady_clock::now();
        const OracleResult o = brute_force(c.instance, r.phi, oc);
        ResultRow orow;
        orow.instance = id;
        orow.algorithm = "oracle";
        orow.objective = o.objective;
        orow.lower_bound = r.lower_bound;
        orow.ratio = o.feasible ? bound_ratio(o.objective, r.lower_bound) : 0.0;
        orow.runtime = seconds_since(t1);
        orow.guesses = o.assignments;
        csv << orow.csv() << '\n';
      }
    }
  }
  write_text(a.output, csv.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximation scheme for optimal power flow with on/off demands"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "run the approximation scheme");
  add_source(solve, solve_args.src);
  solve->add_option("--eps", solve_args.eps, "accuracy parameter")->check(CLI::PositiveNumber);
  solve->add_option("--budget", solve_args.budget, "maximum number of guesses");
  solve->add_option("--workers", solve_args.workers, "worker threads (default $OPFPTAS_WORKERS or 1)");
  solve->add_flag("--no-early-stop", solve_args.no_early_stop, "enumerate every guess");
  solve->add_flag("--strict", solve_args.strict, "refuse instances failing an assumption");
  solve->add_flag("--oracle", solve_args.with_oracle, "also run the exhaustive oracle and report the ratio");
  solve->add_flag("--timings", solve_args.timings, "include timings in the report");
  solve->add_option("--output,-o", solve_args.output, "JSON report path (default stdout)");
  solve->add_option("--trace", solve_args.trace, "per-guess CSV path");

  OracleArgs oracle_args;
  auto* oracle = app.add_subcommand("oracle", "exhaustive search over on/off assignments");
  add_source(oracle, oracle_args.src);
  oracle->add_option("--workers", oracle_args.workers, "worker threads");
  oracle->add_option("--output,-o", oracle_args.output, "JSON result path (default stdout)");
  oracle->add_option("--table", oracle_args.table, "CSV of every assignment");

  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "assumption and exactness checks");
  add_source(check, check_args.src);
  check->add_option("--output,-o", check_args.output, "JSON path (default stdout)");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "sweep user counts, emit CSV rows");
  bench->add_option("--network", bench_args.network, "rbts13 or a case file");
  bench->add_option("--users", bench_args.users, "user counts")->delimiter(',');
  bench->add_option("--seeds", bench_args.seeds, "seeds per user count")->check(CLI::PositiveNumber);
  bench->add_option("--first-seed", bench_args.first_seed, "first seed");
  bench->add_option("--mix", bench_args.mix, "R, I or M")->check(CLI::IsMember({"R", "I", "M"}));
  bench->add_option("--cost", bench_args.cost, "C or U")->check(CLI::IsMember({"C", "U"}));
  bench->add_option("--eps", bench_args.eps, "accuracy parameter")->check(CLI::PositiveNumber);
  bench->add_option("--budget", bench_args.budget, "maximum number of guesses");
  bench->add_option("--workers", bench_args.workers, "worker threads");
  bench->add_flag("--oracle", bench_args.with_oracle, "add an oracle row per instance");
  bench->add_option("--output,-o", bench_args.output, "CSV path (default stdout)");

  Source dump_src;
  std::string dump_out;
  auto* dump = app.add_subcommand("dump", "write the instance as a case file");
  add_source(dump, dump_src);
  dump->add_option("--output,-o", dump_out, "case path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return run_solve(solve_args);
    if (*oracle) return run_oracle(oracle_args);
    if (*check) return run_check(check_args);
    if (*bench) return run_bench(bench_args);
    if (*dump) {
      write_text(dump_out, dump_case(load_source(dump_src)));
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "opfptas: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
