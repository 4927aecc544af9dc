#include "opfptas/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace opfptas {

namespace {

constexpr double kAngleSlack = 1e-12;

std::string edge_name(const Edge& e) {
  return "edge (" + std::to_string(e.parent) + "," + std::to_string(e.child) + ")";
}

std::string user_name(const User& u) { return "user " + std::to_string(u.id); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

/// Demand points whose angles matter: the peak of a discrete user, the four
/// corners of a continuous box.
std::vector<Complex> demand_points(const User& u) {
  if (const auto* d = std::get_if<DiscreteDemand>(&u.demand)) return {d->rated};
  const auto& b = std::get<ContinuousDemand>(u.demand);
  return {b.lower, {b.lower.real(), b.upper.imag()}, {b.upper.real(), b.lower.imag()},
          b.upper};
}

bool first_quadrant(Complex c, double scale) {
  const double slack = 1e-12 * std::max(1.0, scale);
  return c.real() >= -slack && c.imag() >= -slack;
}

}  // namespace

double rotation_angle(const Instance& instance) {
  double phi = 0.0;
  for (int k : instance.discrete_users()) {
    phi = std::max(phi, -demand_angle(instance.user(k).peak()));
  }
  return std::clamp(phi, 0.0, std::numbers::pi / 2);
}

AssumptionReport check_assumptions(const Instance& instance) {
  const auto& net = instance.network();
  AssumptionReport r;
  auto flag = [&r](bool& ok, std::string name, std::string entity, std::string detail) {
    ok = false;
    r.violations.push_back({std::move(name), std::move(entity), std::move(detail)});
  };

  const SupplyCost& f0 = instance.supply_cost();
  if (!(f0.quadratic >= 0.0) || !(f0.linear >= 0.0)) {
    flag(r.a0_ok, "A0", "supply", "supply cost must be non-decreasing in supplied power");
  }
  for (const User& u : instance.users()) {
    if (auto why = validate_cost(u.cost); !why.empty()) flag(r.a0_ok, "A0", user_name(u), why);
  }

  for (const Edge& e : net.edges()) {
    if (e.impedance.real() < 0.0 || e.impedance.imag() < 0.0) {
      flag(r.a1_ok, "A1", edge_name(e),
           "impedance " + fmt(e.impedance.real()) + "+" + fmt(e.impedance.imag()) + "i");
    }
  }

  const double v0 = net.root_voltage();
  for (int j = 1; j < net.node_count(); ++j) {
    const auto& b = net.voltage_bounds(j);
    if (!(b.lower < v0 && v0 < b.upper)) {
      flag(r.a2_ok, "A2", "node " + std::to_string(j),
           "bounds [" + fmt(b.lower) + ", " + fmt(b.upper) + "] do not strictly contain v0");
    }
  }

  for (int k : instance.discrete_users()) {
    const User& u = instance.user(k);
    for (const Edge& e : net.edges()) {
      const double value = (std::conj(e.impedance) * u.peak()).real();
      if (value < 0.0) {
        flag(r.a3_ok, "A3", user_name(u), "Re(z* s) = " + fmt(value) + " on " + edge_name(e));
        break;
      }
    }
  }

  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (const User& u : instance.users()) {
    for (Complex c : demand_points(u)) {
      const double a = demand_angle(c);
      lo = any ? std::min(lo, a) : a;
      hi = any ? std::max(hi, a) : a;
      any = true;
    }
    if (u.peak().real() < 0.0) {
      flag(r.consumers_ok, "consumer", user_name(u), "negative active demand");
    }
  }
  r.theta = any ? hi - lo : 0.0;
  if (r.theta > std::numbers::pi / 2 + kAngleSlack) {
    flag(r.a4_ok, "A4", "demands", "theta = " + fmt(r.theta) + " exceeds pi/2");
  }

  r.phi = rotation_angle(instance);
  const Complex rot = std::polar(1.0, r.phi);
  for (const Edge& e : net.edges()) {
    if (!first_quadrant(e.impedance * rot, std::abs(e.impedance))) {
      flag(r.rotated_ok, "rotated", edge_name(e), "rotated impedance leaves the first quadrant");
    }
  }
  for (const User& u : instance.users()) {
    for (Complex c : demand_points(u)) {
      if (!first_quadrant(c * rot, std::abs(c))) {
        flag(r.rotated_ok, "rotated", user_name(u), "rotated demand leaves the first quadrant");
        break;
      }
    }
  }
  return r;
}

RotatedInstance rotate_instance(const Instance& instance, double phi) {
  if (!(phi >= 0.0 && phi <= std::numbers::pi / 2)) {
    throw InputError("rotation angle " + fmt(phi) + " outside [0, pi/2]");
  }
  const Complex rot = std::polar(1.0, phi);
  RotatedInstance r;
  r.phi = phi;
  for (const Edge& e : instance.network().edges()) r.impedance.push_back(e.impedance * rot);
  for (const User& u : instance.users()) {
    r.peak.push_back(u.peak() * rot);
    if (const auto* b = std::get_if<ContinuousDemand>(&u.demand)) {
      r.floor.push_back(b->lower * rot);
    } else {
      r.floor.push_back(Complex{});
    }
  }
  return r;
}

FlowState unrotate_solution(const FlowState& state, double phi) {
  return rotate_solution(state, -phi);
}

FlowState rotate_solution(const FlowState& state, double phi) {
  FlowState out = state;
  const Complex rot = std::polar(1.0, phi);
  out.supply *= rot;
  for (Complex& S : out.flow) S *= rot;
  return out;
}

}  // namespace opfptas
