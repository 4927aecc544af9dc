#include "conic_cases.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace oracles {

using namespace opfptas;

AnalyticCase analytic_conic(std::uint64_t seed, int family) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto pos = [&] { return 0.2 + 1.8 * (u(rng) + 1.0) / 2.0; };
  AnalyticCase out;
  ConicProgram& p = out.program;
  switch (family) {
    case 0: {
      out.family = "disk";
      const int x = p.add_variable("x", VarRole::Auxiliary);
      const int y = p.add_variable("y", VarRole::Auxiliary);
      const double a = u(rng), b = u(rng), r = pos(), cx = u(rng), cy = u(rng);
      p.add_disk_bound({LinearExpr(-a).add(x, 1.0), LinearExpr(-b).add(y, 1.0), r, "disk"});
      p.objective().linear.add(x, cx).add(y, cy);
      out.optimum = cx * a + cy * b - r * std::hypot(cx, cy);
      break;
    }
    case 1: {
      out.family = "box quadratic";
      const int n = 1 + static_cast<int>(rng() % 8);
      for (int i = 0; i < n; ++i) {
        const double lo = u(rng), hi = lo + pos(), w = pos(), a = 2.0 * u(rng), c = u(rng);
        const int x = p.add_variable("x" + std::to_string(i), VarRole::Auxiliary, lo, hi);
        p.objective().quadratic.push_back({w, LinearExpr(-a).add(x, 1.0)});
        p.objective().linear.add(x, c);
        const double xs = std::clamp(a - c / (2.0 * w), lo, hi);
        out.optimum += w * (xs - a) * (xs - a) + c * xs;
      }
      break;
    }
    case 2: {
      out.family = "equality quadratic";
      const int n = 1 + static_cast<int>(rng() % 8);
      LinearExpr sum(-3.0 * u(rng));
      const double b = -sum.constant;
      std::vector<double> w(static_cast<size_t>(n)), a(static_cast<size_t>(n));
      double inv = 0.0, suma = 0.0;
      for (int i = 0; i < n; ++i) {
        w[static_cast<size_t>(i)] = pos();
        a[static_cast<size_t>(i)] = u(rng);
        const int x = p.add_variable("x" + std::to_string(i), VarRole::Auxiliary);
        p.objective().quadratic.push_back({w[static_cast<size_t>(i)],
                                           LinearExpr(-a[static_cast<size_t>(i)]).add(x, 1.0)});
        sum.add(x, 1.0);
        inv += 1.0 / w[static_cast<size_t>(i)];
        suma += a[static_cast<size_t>(i)];
      }
      p.add_equality(sum, RowFamily::Other, "sum");
      const double lambda = 2.0 * (b - suma) / inv;
      for (int i = 0; i < n; ++i) {
        const double d = lambda / (2.0 * w[static_cast<size_t>(i)]);
        out.optimum += w[static_cast<size_t>(i)] * d * d;
      }
      break;
    }
    case 3: {
      out.family = "rotated cone";
      const double alpha = pos(), beta = pos(), sp = u(rng), sq = u(rng);
      const int l = p.add_variable("l", VarRole::Current, 0.0);
      const int v = p.add_variable("v", VarRole::Voltage, 0.0);
      p.add_rotated_cone({LinearExpr(sp), LinearExpr(sq), LinearExpr().add(l, 1.0),
                          LinearExpr().add(v, 1.0), "cone"});
      p.objective().linear.add(l, alpha).add(v, beta);
      out.optimum = 2.0 * std::sqrt(alpha * beta) * std::hypot(sp, sq);
      break;
    }
    default: {
      out.family = "piecewise";
      const double lo = u(rng), hi = lo + pos();
      const int x = p.add_variable("x", VarRole::Auxiliary, lo, hi);
      PiecewiseTerm term;
      const int pieces = 1 + static_cast<int>(rng() % 4);
      std::vector<std::pair<double, double>> lines;
      for (int i = 0; i < pieces; ++i) {
        const double s = 2.0 * u(rng), c = u(rng);
        lines.emplace_back(s, c);
        term.pieces.push_back(LinearExpr(c).add(x, s));
      }
      p.objective().piecewise.push_back(term);
      // The minimum of a convex piecewise-linear function sits at an
      // endpoint or a crossing of two pieces.
      auto f = [&](double t) {
        double m = -kInf;
        for (auto [s, c] : lines) m = std::max(m, s * t + c);
        return m;
      };
      double best = std::min(f(lo), f(hi));
      for (size_t i = 0; i < lines.size(); ++i) {
        for (size_t j = i + 1; j < lines.size(); ++j) {
          const double ds = lines[i].first - lines[j].first;
          if (std::abs(ds) < 1e-12) continue;
          const double t = (lines[j].second - lines[i].second) / ds;
          if (t >= lo && t <= hi) best = std::min(best, f(t));
        }
      }
      out.optimum = best;
      break;
    }
  }
  return out;
}

LpProgram random_lp(std::uint64_t seed, int max_vars, int max_rows) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LpProgram lp;
  const int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_vars));
  const int m = static_cast<int>(rng() % static_cast<unsigned>(max_rows + 1));
  for (int j = 0; j < n; ++j) {
    lp.users.push_back(j);
    lp.cost.push_back(u(rng));
  }
  for (int r = 0; r < m; ++r) {
    LpRow row;
    for (int j = 0; j < n; ++j) {
      if (rng() % 3) row.terms.emplace_back(j, u(rng));
    }
    row.rhs = u(rng);
    lp.rows.push_back(row);
  }
  return lp;
}

ConicProgram lp_as_conic(const LpProgram& lp) {
  ConicProgram p;
  for (int j = 0; j < lp.variable_count(); ++j) {
    p.add_variable("x" + std::to_string(j), VarRole::Control, 0.0, 1.0);
    p.objective().linear.add(j, lp.cost[static_cast<size_t>(j)]);
  }
  p.objective().linear.constant = lp.constant;
  for (const auto& row : lp.rows) {
    LinearExpr e(-row.rhs);
    for (auto [v, c] : row.terms) e.add(v, c);
    p.add_inequality(e, RowFamily::Other, row.label);
  }
  return p;
}

}  // namespace oracles
