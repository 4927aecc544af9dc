#include <cmath>

#include "conic_cases.hpp"
#include "doctest.h"
#include "opfptas/assumptions.hpp"
#include "opfptas/bfm.hpp"
#include "opfptas/lp.hpp"
#include "oracles.hpp"

using namespace opfptas;

TEST_CASE("one knapsack row") {
  LpProgram lp;
  lp.users = {0, 1, 2};
  lp.cost = {-1.0, -1.0, -1.0};
  lp.rows.push_back({{{0, 1.0}, {1, 1.0}, {2, 1.0}}, 1.5, "r"});
  const auto v = solve_vertex(lp);
  REQUIRE(v.status == LpStatus::Optimal);
  CHECK(v.objective == doctest::Approx(-1.5));
  CHECK(v.fractional.size() == 1);
}

TEST_CASE("infeasible rows") {
  LpProgram lp;
  lp.users = {0};
  lp.cost = {1.0};
  lp.rows.push_back({{{0, 1.0}}, -0.5, "neg"});
  CHECK(solve_vertex(lp).status == LpStatus::Infeasible);
}

TEST_CASE("vertex enumeration agrees") {
  int solved = 0;
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    const auto lp = oracles::random_lp(seed);
    const double ref = oracles::lp_by_vertices(lp);
    const auto v = solve_vertex(lp);
    INFO("seed " << seed);
    if (ref == oracles::kNone) {
      CHECK(v.status == LpStatus::Infeasible);
      continue;
    }
    ++solved;
    REQUIRE(v.status == LpStatus::Optimal);
    CHECK(std::abs(v.objective - ref) < 1e-7);
    CHECK(lp.max_violation(v.x) < 1e-9);
    CHECK(static_cast<int>(v.fractional.size()) <= lp.row_count());
  }
  CHECK(solved > 100);
}

TEST_CASE("rounding program from a relaxed solution") {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    oracles::UserOptions uo;
    uo.discrete = 10;
    const int m = 1 + static_cast<int>(seed % 3);
    const Instance inst = oracles::random_instance(seed, m, uo);
    const double phi = rotation_angle(inst);
    const auto p1 = build_p1(inst, {}, {}, phi);
    const auto r = solve(p1.program);
    REQUIRE(r.optimal());
    const FlowState relaxed = p1.extract(r.x, inst);
    const auto& free = inst.discrete_users();
    const LpProgram lp = build_p2(inst, relaxed, free, phi);
    CHECK(lp.row_count() <= 4 * m);
    CHECK(lp.max_violation(lp.reference) < 1e-9);
    const auto v = solve_vertex(lp);
    REQUIRE(v.status == LpStatus::Optimal);
    CHECK(v.objective <= lp.evaluate(lp.reference) + 1e-9);
    CHECK(static_cast<int>(v.fractional.size()) <= 4 * m);

    const auto xh = round_down(inst, lp, v, {}, {});
    for (int k : free) {
      const double x = xh[static_cast<size_t>(k)];
      CHECK((x == 0.0 || x == 1.0));
    }
  }
}

TEST_CASE("rounding respects pinned users") {
  oracles::UserOptions uo;
  uo.discrete = 5;
  const Instance inst = oracles::random_instance(77, 2, uo);
  const std::vector<int> I0{0}, I1{1};
  const auto p1 = build_p1(inst, I0, I1, 0.0);
  const auto r = solve(p1.program);
  REQUIRE(r.optimal());
  const FlowState relaxed = p1.extract(r.x, inst);
  const std::vector<int> free{2, 3, 4};
  const LpProgram lp = build_p2(inst, relaxed, free, 0.0);
  const auto v = solve_vertex(lp);
  const auto xh = round_down(inst, lp, v, I0, I1);
  CHECK(xh[0] == 0.0);
  CHECK(xh[1] == 1.0);
}
