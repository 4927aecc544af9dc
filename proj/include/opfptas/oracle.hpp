// Exhaustive solver over on/off assignments of the discrete users. Meant for
// checking the approximation scheme on small instances.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opfptas/conic.hpp"
#include "opfptas/flow.hpp"
#include "opfptas/network.hpp"

namespace opfptas {

inline constexpr int kOracleMaxUsers = 20;

struct OracleEntry {
  std::uint32_t mask = 0;  // bit b set: discrete_users()[b] is on
  std::string status;      // optimal | infeasible | error
  double objective = 0.0;  // f^phi of the assignment, when optimal
};

struct OracleConfig {
  int workers = 1;
  bool keep_table = true;
  SolverConfig solver;
};

struct OracleResult {
  bool feasible = false;
  std::vector<double> x;        // per user; 1 for continuous users
  double objective = 0.0;       // f of `state`, original frame
  double relaxed_objective = 0.0;  // f^phi of the winning assignment before tightening
  FlowState state;              // original frame, exact
  std::uint32_t mask = 0;
  std::int64_t assignments = 0;
  std::int64_t feasible_count = 0;
  std::int64_t errors = 0;
  std::vector<OracleEntry> table;  // Gray-code order

  /// mask,x,status,objective with x written as a bit string, user 0 first.
  std::string table_csv() const;
};

/// Solves every assignment x in {0,1}^I with continuous users optimized and
/// keeps the cheapest. Throws InputError when more than kOracleMaxUsers
/// users are discrete.
OracleResult brute_force(const Instance& instance, double phi, const OracleConfig& config = {});

}  // namespace opfptas
