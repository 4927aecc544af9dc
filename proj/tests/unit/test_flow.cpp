#include <cmath>
#include <random>

#include "doctest.h"
#include "opfptas/flow.hpp"
#include "oracles.hpp"

using namespace opfptas;

namespace {

std::vector<Complex> peaks(const Instance& inst) {
  std::vector<Complex> d;
  for (const auto& u : inst.users()) d.push_back(u.peak());
  return d;
}

FlowState from_sweep(const Instance& inst, const std::vector<Complex>& demand,
                     const oracles::Sweep& s) {
  FlowState st = FlowState::zero(inst);
  st.demand = demand;
  for (int k = 0; k < inst.user_count(); ++k) st.control[static_cast<size_t>(k)] = 1.0;
  st.flow = s.eval.flow;
  st.voltage = s.eval.voltage;
  st.current = s.current;
  st.supply = s.supply;
  return st;
}

}  // namespace

TEST_CASE("subtree-sum and recursive evaluations agree") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    oracles::UserOptions uo;
    uo.discrete = 10;
    const Instance inst = oracles::random_instance(seed, 1 + static_cast<int>(seed % 12), uo);
    std::vector<double> current(static_cast<size_t>(inst.network().edge_count()));
    for (double& l : current) l = u(rng);
    for (double phi : {0.0, 0.3}) {
      const auto a = tree_flow(inst, peaks(inst), current, phi);
      const auto b = recursive_flow(inst, peaks(inst), current, phi);
      const auto c = oracles::distflow(inst, peaks(inst), current, phi);
      for (size_t e = 0; e < current.size(); ++e) {
        CHECK(std::abs(a.flow[e] - c.flow[e]) < 1e-12);
        CHECK(std::abs(b.flow[e] - c.flow[e]) < 1e-12);
      }
      for (size_t j = 0; j < a.voltage.size(); ++j) {
        CHECK(a.voltage[j] == doctest::Approx(c.voltage[j]).epsilon(1e-12));
        CHECK(b.voltage[j] == doctest::Approx(c.voltage[j]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("verify accepts an exact power flow and flags perturbations") {
  oracles::UserOptions uo;
  uo.discrete = 3;
  uo.mag_hi = 0.1;
  const Instance inst = oracles::random_instance(3, 3, uo);
  const auto d = peaks(inst);
  const auto s = oracles::sweep(inst, d);
  REQUIRE(s.converged);
  REQUIRE(oracles::within_limits(inst, s));
  FlowState st = from_sweep(inst, d, s);
  auto r = verify(inst, st);
  CHECK(r.max_violation() < 1e-12);
  CHECK(r.exact);
  CHECK(r.integrality == 0.0);

  st.current[0] += 0.01;
  r = verify(inst, st);
  CHECK(r.balance > 1e-4);
  CHECK_FALSE(r.exact);

  st = from_sweep(inst, d, s);
  st.voltage[0] = 1.1;
  CHECK(verify(inst, st).voltage_bounds > 0.09);
}

TEST_CASE("objective of an exact state") {
  oracles::UserOptions uo;
  uo.discrete = 4;
  const Instance inst = oracles::random_instance(9, 2, uo);
  std::vector<Complex> d = peaks(inst);
  d[1] = 0.0;
  const auto s = oracles::sweep(inst, d);
  REQUIRE(s.converged);
  FlowState st = from_sweep(inst, d, s);
  st.control[1] = 0.0;
  CHECK(objective(inst, st) == doctest::Approx(oracles::exact_cost(inst, s, 0b1101)).epsilon(1e-12));
}

TEST_CASE("exactness condition") {
  RadialNetwork net(1.0, {Edge{0, 1, {0.01, 0.02}, 1, 1}, Edge{1, 2, {0.02, 0.01}, 1, 1}},
                    {{0, 0}, {0.9, 1.1}, {0.9, 1.1}});
  const Instance inst(std::move(net), {User{0, 2, DiscreteDemand{{0.1, 0.05}}, LinearCost{1}},
                                        User{1, 1, DiscreteDemand{{0.05, 0.0}}, LinearCost{1}}});
  CHECK(check_c2(inst, peaks(inst)).ok);
  // Strongly capacitive demand at node 2: Re(z* s) < 0 on the inner edge.
  std::vector<Complex> bad{{0.01, -0.2}, {0.0, 0.0}};
  const auto c = check_c2(inst, bad);
  CHECK_FALSE(c.ok);
  REQUIRE(c.witness);
  CHECK(c.witness->value < 0.0);
}

TEST_CASE("linearized check on a light load") {
  oracles::UserOptions uo;
  uo.discrete = 3;
  uo.mag_hi = 0.05;
  uo.angle_lo = 0.0;
  const Instance inst = oracles::random_instance(4, 3, uo);
  const auto d = peaks(inst);
  const auto s = oracles::sweep(inst, d);
  const auto c = check_c1(inst, from_sweep(inst, d, s));
  CHECK(c.feasible);
  // Lossless flows are plain subtree demand sums.
  for (int j = 1; j < inst.network().node_count(); ++j) {
    Complex sum;
    for (int k : inst.subtree_users(j)) sum += d[static_cast<size_t>(k)];
    CHECK(std::abs(c.flow[static_cast<size_t>(inst.network().incoming_edge(j))] - sum) < 1e-14);
  }
}
