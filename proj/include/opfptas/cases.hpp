// Case files, the bundled RBTS 13-node feeder, and the random instance
// generator used by the benchmarks.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "opfptas/network.hpp"

namespace opfptas {

/// Which values of a loaded case were filled in by defaults rather than read.
struct CaseMetadata {
  std::vector<int> derived_current_limits;  // edges with l_max = S_max^2 / v_min
  bool default_voltage_bounds = false;      // v in [0.95^2, 1.05^2]
  bool default_root_voltage = false;        // v0 = 1
};

struct Case {
  Instance instance;
  CaseMetadata metadata;
};

inline constexpr double kDefaultVoltageLower = 0.95 * 0.95;
inline constexpr double kDefaultVoltageUpper = 1.05 * 1.05;

double to_per_unit(double volt_amperes, const PerUnitBase& base);

/// Parses a JSON case. Demands may be given in per-unit ("demand", "lower",
/// "upper") or in kVA ("demand_kva", ...), converted on the case base.
Case parse_case(const std::string& text);
Case load_case(const std::string& path);
/// Per-unit JSON; parse_case(dump_case(c)) reproduces `c`.
std::string dump_case(const Case& c);
void save_case(const Case& c, const std::string& path);

/// RBTS bus 4 feeder: 13 nodes, 8 MVA / 11 kV base, no users. Current limits
/// are derived from the capacities and flagged in the metadata.
Case rbts13();

enum class UserMix { Residential, Industrial, Mixed };
enum class CostMode { Correlated, Uncorrelated };

UserMix parse_mix(const std::string& s);
CostMode parse_cost_mode(const std::string& s);

struct InstanceSpec {
  std::string network = "rbts13";  // "rbts13" or a case file path
  int users = 100;
  UserMix mix = UserMix::Mixed;
  CostMode cost = CostMode::Correlated;
  std::uint64_t seed = 1;
  double max_angle_deg = 25.0;  // lagging power factor angle drawn from [0, max]
  SupplyCost supply;
};

/// Discrete users placed uniformly over the non-root nodes. Residential
/// demands are 0.5-5 kVA, industrial 300-1000 kVA; a mixed population has
/// fewer than 20% industrial users.
Case generate_instance(const InstanceSpec& spec);

struct ResultRow {
  std::string instance;
  std::string algorithm;
  double objective = 0.0;
  double lower_bound = 0.0;
  double ratio = 0.0;
  double runtime = 0.0;
  std::int64_t guesses = 0;
  int fractional = 0;

  static std::string csv_header();
  std::string csv() const;
};

}  // namespace opfptas
