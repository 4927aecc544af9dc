#include <cmath>

#include "doctest.h"
#include "opfptas/assumptions.hpp"
#include "opfptas/oracle.hpp"
#include "opfptas/ptas.hpp"
#include "oracles.hpp"

using namespace opfptas;

namespace {

// Smallest root of |z|^2 l^2 + (2 Re(conj(D) z) - v0) l + |D|^2 = 0: the
// current of a single line feeding D at the far end.
double line_current(Complex z, Complex D, double v0) {
  const double a = std::norm(z), b = 2.0 * (std::conj(D) * z).real() - v0, c = std::norm(D);
  if (a == 0.0) return -c / b;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return -1.0;
  return (-b - std::sqrt(disc)) / (2.0 * a);
}

}  // namespace

TEST_CASE("three users on one line match hand enumeration") {
  const Complex z{0.02, 0.05};
  const double cap = 0.8;
  RadialNetwork net(1.0, {Edge{0, 1, z, cap, 10.0}}, {{0, 0}, {0.9025, 1.1025}});
  const std::vector<Complex> s{{0.5, 0.2}, {0.35, 0.1}, {0.25, 0.05}};
  const std::vector<double> rate{1.0, 0.7, 0.45};
  std::vector<User> users;
  for (int k = 0; k < 3; ++k) users.push_back(User{k, 1, DiscreteDemand{s[k]}, LinearCost{rate[k]}});
  const SupplyCost supply{0.2, 0.1};
  const Instance inst(std::move(net), users, supply);

  double best = 1e300;
  for (int mask = 0; mask < 8; ++mask) {
    Complex D;
    double drop = 0.0;
    for (int k = 0; k < 3; ++k) {
      if (mask >> k & 1) {
        D += s[k];
      } else {
        drop += rate[k];
      }
    }
    const double l = line_current(z, D, 1.0);
    if (l < 0.0) continue;
    const Complex S = D + z * l;
    const double v1 = 1.0 - 2.0 * (std::conj(z) * S).real() + std::norm(z) * l;
    if (std::abs(S) > cap || std::abs(D) > cap || v1 < 0.9025) continue;
    best = std::min(best, supply.value(S.real()) + drop);
  }
  const auto r = brute_force(inst, 0.0);
  REQUIRE(r.feasible);
  CHECK(r.objective == doctest::Approx(best).epsilon(1e-7));
  CHECK(r.assignments == 8);
  CHECK(r.table.size() == 8);
}

TEST_CASE("no discrete users") {
  oracles::UserOptions uo;
  uo.discrete = 0;
  uo.continuous = 3;
  const Instance inst = oracles::random_instance(2, 2, uo);
  const auto r = brute_force(inst, 0.0);
  REQUIRE(r.feasible);
  CHECK(r.relaxed_objective == doctest::Approx(lower_bound(inst, 0.0).value).epsilon(1e-9));
}

TEST_CASE("user that exceeds the line stays off") {
  RadialNetwork net(1.0, {Edge{0, 1, {0.01, 0.02}, 0.3, 1.0}}, {{0, 0}, {0.9, 1.1}});
  const Instance inst(std::move(net),
                      {User{0, 1, DiscreteDemand{{0.5, 0.1}}, LinearCost{2.5}},
                       User{1, 1, ContinuousDemand{{0.05, 0.0}, {0.1, 0.02}}, QuadraticCost{0.1}}});
  const auto r = brute_force(inst, 0.0);
  REQUIRE(r.feasible);
  CHECK(r.x[0] == 0.0);
  CHECK(r.x[1] == 1.0);
  CHECK(r.objective == doctest::Approx(2.5).epsilon(1e-7));
  CHECK(r.feasible_count == 1);
}

TEST_CASE("oracle brackets the scheme") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    oracles::UserOptions uo;
    uo.discrete = 3 + static_cast<int>(seed % 5);
    const Instance inst = oracles::random_instance(seed, 2, uo);
    const double phi = rotation_angle(inst);
    const auto o = brute_force(inst, phi);
    PtasConfig cfg;
    cfg.early_stop = false;
    const auto p = run_ptas(inst, cfg);
    REQUIRE(o.feasible == p.feasible);
    if (!o.feasible) continue;
    CHECK(o.objective >= p.lower_bound - 1e-7);
    for (const auto& t : p.trace) {
      if (t.status == "candidate") CHECK(t.candidate >= o.relaxed_objective - 1e-7);
    }
  }
}

TEST_CASE("cap and parallel reduction") {
  oracles::UserOptions uo;
  uo.discrete = 21;
  const Instance big = oracles::random_instance(1, 1, uo);
  CHECK_THROWS_AS(brute_force(big, 0.0), InputError);

  uo.discrete = 6;
  const Instance inst = oracles::random_instance(6, 3, uo);
  OracleConfig one, four;
  four.workers = 4;
  const auto a = brute_force(inst, 0.0, one);
  const auto b = brute_force(inst, 0.0, four);
  CHECK(a.mask == b.mask);
  CHECK(a.objective == b.objective);
  CHECK(a.table_csv() == b.table_csv());
  CHECK(a.table_csv().rfind("mask,x,status,objective\n", 0) == 0);
}
