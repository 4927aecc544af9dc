#include "opfptas/cases.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"

namespace opfptas {

namespace {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

Complex read_complex(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw InputError(what + " must be a [re, im] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

double read_number(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw InputError(where + ": missing numeric field '" + key + "'");
  }
  return j[key].get<double>();
}

// Power in per-unit from either "<key>" (pu) or "<key>_kva".
Complex read_power(const Json& j, const std::string& key, const PerUnitBase& base,
                   const std::string& where) {
  if (j.contains(key)) return read_complex(j[key], where + "." + key);
  const std::string kva = key + "_kva";
  if (j.contains(kva)) {
    const Complex s = read_complex(j[kva], where + "." + kva);
    return {to_per_unit(s.real() * 1e3, base), to_per_unit(s.imag() * 1e3, base)};
  }
  throw InputError(where + ": missing '" + key + "' or '" + kva + "'");
}

CostSpec read_cost(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("type")) throw InputError(where + ": cost needs a type");
  const std::string type = j["type"].get<std::string>();
  if (type == "quadratic") return QuadraticCost{read_number(j, "base", where)};
  if (type == "linear") return LinearCost{read_number(j, "rate", where)};
  if (type == "tabulated") {
    TabulatedCost t;
    if (!j.contains("breakpoints") || !j["breakpoints"].is_array()) {
      throw InputError(where + ": tabulated cost needs breakpoints");
    }
    for (const auto& bp : j["breakpoints"]) {
      const Complex p = read_complex(bp, where + ".breakpoints");
      t.breakpoints.emplace_back(p.real(), p.imag());
    }
    return t;
  }
  throw InputError(where + ": unknown cost type '" + type + "'");
}

OJson cost_json(const CostSpec& c) {
  if (const auto* q = std::get_if<QuadraticCost>(&c)) return {{"type", "quadratic"}, {"base", q->base}};
  if (const auto* l = std::get_if<LinearCost>(&c)) return {{"type", "linear"}, {"rate", l->rate}};
  const auto& t = std::get<TabulatedCost>(c);
  OJson bps = OJson::array();
  for (const auto& [x, v] : t.breakpoints) bps.push_back({x, v});
  return {{"type", "tabulated"}, {"breakpoints", bps}};
}

OJson pair_json(Complex c) { return OJson::array({c.real(), c.imag()}); }

}  // namespace

double to_per_unit(double volt_amperes, const PerUnitBase& base) {
  return volt_amperes / (base.mva * 1e6);
}

Case parse_case(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("case is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("case must be a JSON object");

  CaseMetadata meta;
  PerUnitBase base;
  if (j.contains("base")) {
    base.mva = read_number(j["base"], "mva", "base");
    base.kv = read_number(j["base"], "kv", "base");
    if (!(base.mva > 0.0) || !(base.kv > 0.0)) throw InputError("base must be positive");
  }
  const std::string name = j.value("name", std::string{});

  double v0 = 1.0;
  if (j.contains("root_voltage")) {
    v0 = j["root_voltage"].get<double>();
  } else {
    meta.default_root_voltage = true;
  }

  if (!j.contains("edges") || !j["edges"].is_array()) throw InputError("case needs an edge list");
  const auto& jedges = j["edges"];
  const int nodes = j.contains("nodes") ? j["nodes"].get<int>()
                                        : static_cast<int>(jedges.size()) + 1;

  std::vector<VoltageBounds> bounds(static_cast<size_t>(std::max(nodes, 0)),
                                    {kDefaultVoltageLower, kDefaultVoltageUpper});
  if (j.contains("voltage_bounds")) {
    const auto& vb = j["voltage_bounds"];
    if (vb.is_object()) {
      const VoltageBounds all{read_number(vb, "lower", "voltage_bounds"),
                              read_number(vb, "upper", "voltage_bounds")};
      std::fill(bounds.begin(), bounds.end(), all);
    } else if (vb.is_array()) {
      std::vector<char> seen(bounds.size(), 0);
      for (const auto& b : vb) {
        const int node = b.at("node").get<int>();
        if (node < 1 || node >= nodes) throw InputError("voltage bound for unknown node");
        bounds[static_cast<size_t>(node)] = {read_number(b, "lower", "voltage_bounds"),
                                             read_number(b, "upper", "voltage_bounds")};
        seen[static_cast<size_t>(node)] = 1;
      }
      for (int n = 1; n < nodes; ++n) {
        if (!seen[static_cast<size_t>(n)]) meta.default_voltage_bounds = true;
      }
    } else {
      throw InputError("voltage_bounds must be an object or an array");
    }
  } else {
    meta.default_voltage_bounds = true;
  }

  std::vector<Edge> edges;
  for (size_t e = 0; e < jedges.size(); ++e) {
    const auto& je = jedges[e];
    const std::string where = "edge " + std::to_string(e);
    Edge edge;
    edge.parent = je.at("from").get<int>();
    edge.child = je.at("to").get<int>();
    edge.impedance = {read_number(je, "r", where), read_number(je, "x", where)};
    edge.capacity = read_number(je, "capacity", where);
    if (je.contains("current_limit")) {
      edge.current_limit = je["current_limit"].get<double>();
    } else {
      if (edge.child < 1 || edge.child >= nodes) throw InputError(where + " references an unknown node");
      edge.current_limit = edge.capacity * edge.capacity / bounds[static_cast<size_t>(edge.child)].lower;
      meta.derived_current_limits.push_back(static_cast<int>(e));
    }
    edges.push_back(edge);
  }
  if (j.contains("metadata")) {
    const auto& m = j["metadata"];
    if (m.contains("derived_current_limits")) {
      for (int e : m["derived_current_limits"]) meta.derived_current_limits.push_back(e);
      std::sort(meta.derived_current_limits.begin(), meta.derived_current_limits.end());
      meta.derived_current_limits.erase(
          std::unique(meta.derived_current_limits.begin(), meta.derived_current_limits.end()),
          meta.derived_current_limits.end());
    }
    meta.default_voltage_bounds |= m.value("default_voltage_bounds", false);
    meta.default_root_voltage |= m.value("default_root_voltage", false);
  }

  RadialNetwork net(v0, std::move(edges), std::move(bounds), base, name);

  SupplyCost supply;
  if (j.contains("supply_cost")) {
    supply.quadratic = j["supply_cost"].value("quadratic", 0.0);
    supply.linear = j["supply_cost"].value("linear", 0.0);
  }

  std::vector<User> users;
  if (j.contains("users")) {
    for (size_t k = 0; k < j["users"].size(); ++k) {
      const auto& ju = j["users"][k];
      const std::string where = "user " + std::to_string(k);
      User u;
      u.id = ju.value("id", static_cast<int>(k));
      u.node = ju.at("node").get<int>();
      const std::string kind = ju.value("kind", std::string("discrete"));
      if (kind == "discrete") {
        u.demand = DiscreteDemand{read_power(ju, "demand", base, where)};
      } else if (kind == "continuous") {
        u.demand = ContinuousDemand{read_power(ju, "lower", base, where),
                                    read_power(ju, "upper", base, where)};
      } else {
        throw InputError(where + ": unknown kind '" + kind + "'");
      }
      if (!ju.contains("cost")) throw InputError(where + ": missing cost");
      u.cost = read_cost(ju["cost"], where);
      users.push_back(std::move(u));
    }
  }
  return Case{Instance(std::move(net), std::move(users), supply), meta};
}

Case load_case(const std::string& path) {
  if (path == "rbts13") return rbts13();
  std::ifstream in(path);
  if (!in) throw InputError("cannot open case file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

std::string dump_case(const Case& c) {
  const Instance& inst = c.instance;
  const RadialNetwork& net = inst.network();
  OJson j;
  if (!net.name().empty()) j["name"] = net.name();
  j["base"] = {{"mva", net.base().mva}, {"kv", net.base().kv}};
  j["root_voltage"] = net.root_voltage();
  j["nodes"] = net.node_count();
  OJson vb = OJson::array();
  for (int n = 1; n < net.node_count(); ++n) {
    vb.push_back({{"node", n},
                  {"lower", net.voltage_bounds(n).lower},
                  {"upper", net.voltage_bounds(n).upper}});
  }
  j["voltage_bounds"] = vb;
  OJson edges = OJson::array();
  for (const Edge& e : net.edges()) {
    edges.push_back({{"from", e.parent},
                     {"to", e.child},
                     {"r", e.impedance.real()},
                     {"x", e.impedance.imag()},
                     {"capacity", e.capacity},
                     {"current_limit", e.current_limit}});
  }
  j["edges"] = edges;
  j["supply_cost"] = {{"quadratic", inst.supply_cost().quadratic},
                      {"linear", inst.supply_cost().linear}};
  OJson users = OJson::array();
  for (const User& u : inst.users()) {
    OJson ju;
    ju["id"] = u.id;
    ju["node"] = u.node;
    if (const auto* d = std::get_if<DiscreteDemand>(&u.demand)) {
      ju["kind"] = "discrete";
      ju["demand"] = pair_json(d->rated);
    } else {
      const auto& box = std::get<ContinuousDemand>(u.demand);
      ju["kind"] = "continuous";
      ju["lower"] = pair_json(box.lower);
      ju["upper"] = pair_json(box.upper);
    }
    ju["cost"] = cost_json(u.cost);
    users.push_back(ju);
  }
  j["users"] = users;
  j["metadata"] = {{"derived_current_limits", c.metadata.derived_current_limits},
                   {"default_voltage_bounds", c.metadata.default_voltage_bounds},
                   {"default_root_voltage", c.metadata.default_root_voltage}};
  return j.dump(2);
}

void save_case(const Case& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write case file " + path);
  out << dump_case(c) << '\n';
}

Case rbts13() {
  struct Row {
    int from, to;
    double r, x, capacity;
  };
  static constexpr Row kRows[] = {
      {0, 1, 0.011636363636364, 0.034380165289256, 1},
      {1, 2, 0.026446280991736, 0.158677685950413, 0.125},
      {1, 3, 0.014545454545455, 0.043636363636364, 0.7625},
      {3, 4, 0.026446280991736, 0.158677685950413, 0.25},
      {3, 5, 0.017454545454546, 0.042314049586777, 0.75},
      {5, 6, 0.026446280991736, 0.158677685950413, 0.25},
      {5, 7, 0.011636363636364, 0.03702479338843, 0.75},
      {7, 8, 0.026446280991736, 0.171900826446281, 0.25},
      {7, 9, 0.031735537190083, 0.185123966942149, 0.25},
      {7, 10, 0.014545454545455, 0.039669421487603, 0.75},
      {10, 11, 0.013223140495868, 0.161322314049587, 0.25},
      {10, 12, 0.029090909090909, 0.185123966942149, 0.25},
  };
  CaseMetadata meta;
  meta.default_voltage_bounds = true;
  meta.default_root_voltage = true;
  std::vector<Edge> edges;
  for (size_t e = 0; e < std::size(kRows); ++e) {
    const Row& r = kRows[e];
    edges.push_back(Edge{r.from, r.to, {r.r, r.x}, r.capacity,
                         r.capacity * r.capacity / kDefaultVoltageLower});
    meta.derived_current_limits.push_back(static_cast<int>(e));
  }
  std::vector<VoltageBounds> bounds(13, {kDefaultVoltageLower, kDefaultVoltageUpper});
  RadialNetwork net(1.0, std::move(edges), std::move(bounds), PerUnitBase{8.0, 11.0}, "rbts13");
  return Case{Instance(std::move(net), {}), meta};
}

UserMix parse_mix(const std::string& s) {
  if (s == "R") return UserMix::Residential;
  if (s == "I") return UserMix::Industrial;
  if (s == "M") return UserMix::Mixed;
  throw InputError("unknown user mix '" + s + "' (expected R, I or M)");
}

CostMode parse_cost_mode(const std::string& s) {
  if (s == "C") return CostMode::Correlated;
  if (s == "U") return CostMode::Uncorrelated;
  throw InputError("unknown cost mode '" + s + "' (expected C or U)");
}

Case generate_instance(const InstanceSpec& spec) {
  if (spec.users < 1) throw InputError("instance needs at least one user");
  if (!(spec.max_angle_deg >= 0.0 && spec.max_angle_deg <= 90.0)) {
    throw InputError("power factor angle must lie in [0, 90] degrees");
  }
  Case base = load_case(spec.network);
  const RadialNetwork& net = base.instance.network();
  const PerUnitBase& pu = net.base();

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int nodes = net.node_count();
  const double max_angle = spec.max_angle_deg * std::numbers::pi / 180.0;

  std::vector<User> users;
  int industrial = 0;
  for (int k = 0; k < spec.users; ++k) {
    bool heavy = spec.mix == UserMix::Industrial;
    if (spec.mix == UserMix::Mixed) {
      // Strictly fewer than 20% industrial.
      heavy = unit(rng) < 0.1 && 5 * (industrial + 1) < spec.users;
    }
    if (heavy) ++industrial;
    const double lo = heavy ? 300e3 : 500.0;
    const double hi = heavy ? 1e6 : 5e3;
    const double va = lo + (hi - lo) * unit(rng);
    const double angle = max_angle * unit(rng);
    const int node = 1 + static_cast<int>(unit(rng) * (nodes - 1));
    const Complex s = std::polar(to_per_unit(va, pu), angle);

    User u;
    u.id = k;
    u.node = std::min(node, nodes - 1);
    u.demand = DiscreteDemand{s};
    if (spec.cost == CostMode::Correlated) {
      u.cost = QuadraticCost{std::abs(s)};
    } else {
      const double cap = to_per_unit(heavy ? 1e6 : 5e3, pu);
      u.cost = LinearCost{cap * unit(rng)};
    }
    users.push_back(std::move(u));
  }
  RadialNetwork copy = net;
  return Case{Instance(std::move(copy), std::move(users), spec.supply), base.metadata};
}

std::string ResultRow::csv_header() {
  return "instance,algorithm,objective,lower_bound,ratio,runtime,guesses,fractional";
}

std::string ResultRow::csv() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.6f,%lld,%d", objective, lower_bound,
                ratio, runtime, static_cast<long long>(guesses), fractional);
  return instance + "," + algorithm + buf;
}

}  // namespace opfptas
