// Homogeneous self-dual interior-point method for
//
//   minimize c'x  s.t.  Ax = b,  Gx + s = h,  s in K,
//
// following the predictor-corrector scheme of conelp-style solvers:
// Nesterov-Todd scaling, Mehrotra centering sigma = (1 - alpha_aff)^3 and a
// second-order correction. Newton systems are reduced to the normal
// equations (G'W^-2 G + rho A'A) dx + A'dy = r, solved by sparse Cholesky and
// a dense Schur complement on the equality block, then refined against the
// unreduced KKT system.

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "opfptas/conic.hpp"

namespace opfptas {
namespace {

constexpr double kLooseCertificate = 1e-5;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;

struct ConeDims {
  int l = 0;
  std::vector<int> soc;
  std::vector<int> start;
  int m = 0;

  ConeDims(int orthant, const std::vector<int>& blocks) : l(orthant), soc(blocks) {
    m = l;
    for (int q : soc) {
      start.push_back(m);
      m += q;
    }
  }
  int degree() const { return l + static_cast<int>(soc.size()); }
};

double soc_residual(const double* u, int q) {
  double n = 0.0;
  for (int i = 1; i < q; ++i) n += u[i] * u[i];
  return u[0] - std::sqrt(n);
}

// u0^2 - |u1|^2, evaluated as a product to limit cancellation.
double soc_det(const double* u, int q) {
  double n = 0.0;
  for (int i = 1; i < q; ++i) n += u[i] * u[i];
  n = std::sqrt(n);
  return (u[0] - n) * (u[0] + n);
}

// Smallest eigenvalue with respect to the cone (orthant entries, u0 - |u1|).
double min_eigenvalue(const ConeDims& dims, const Vec& u) {
  double e = kInf;
  for (int i = 0; i < dims.l; ++i) e = std::min(e, u[i]);
  for (size_t k = 0; k < dims.soc.size(); ++k) {
    e = std::min(e, soc_residual(u.data() + dims.start[k], dims.soc[k]));
  }
  return e;
}

void add_identity(const ConeDims& dims, Vec& u, double t) {
  for (int i = 0; i < dims.l; ++i) u[i] += t;
  for (int st : dims.start) u[st] += t;
}

Vec identity(const ConeDims& dims) {
  Vec e = Vec::Zero(dims.m);
  add_identity(dims, e, 1.0);
  return e;
}

Vec jordan_product(const ConeDims& dims, const Vec& u, const Vec& v) {
  Vec w(dims.m);
  for (int i = 0; i < dims.l; ++i) w[i] = u[i] * v[i];
  for (size_t k = 0; k < dims.soc.size(); ++k) {
    const int st = dims.start[k], q = dims.soc[k];
    w[st] = u.segment(st, q).dot(v.segment(st, q));
    for (int i = 1; i < q; ++i) w[st + i] = u[st] * v[st + i] + v[st] * u[st + i];
  }
  return w;
}

// Solves lambda o x = w for x.
Vec jordan_divide(const ConeDims& dims, const Vec& lambda, const Vec& w) {
  Vec x(dims.m);
  for (int i = 0; i < dims.l; ++i) x[i] = w[i] / lambda[i];
  for (size_t k = 0; k < dims.soc.size(); ++k) {
    const int st = dims.start[k], q = dims.soc[k];
    const double* lam = lambda.data() + st;
    const double det = soc_det(lam, q);
    double dot = 0.0;
    for (int i = 1; i < q; ++i) dot += lam[i] * w[st + i];
    const double x0 = (lam[0] * w[st] - dot) / det;
    x[st] = x0;
    for (int i = 1; i < q; ++i) x[st + i] = (w[st + i] - x0 * lam[i]) / lam[0];
  }
  return x;
}

// Largest alpha with u + alpha d in the cone (infinity if unbounded).
double max_step(const ConeDims& dims, const Vec& u, const Vec& d) {
  double alpha = kInf;
  for (int i = 0; i < dims.l; ++i) {
    if (d[i] < 0.0) alpha = std::min(alpha, -u[i] / d[i]);
  }
  for (size_t k = 0; k < dims.soc.size(); ++k) {
    const int st = dims.start[k], q = dims.soc[k];
    const double* uu = u.data() + st;
    const double* dd = d.data() + st;
    // q(t) = a t^2 + 2 b t + c with c = det(u) > 0.
    double a = dd[0] * dd[0], b = uu[0] * dd[0];
    for (int i = 1; i < q; ++i) {
      a -= dd[i] * dd[i];
      b -= uu[i] * dd[i];
    }
    const double c = std::max(soc_det(uu, q), 0.0);
    double t = kInf;
    if (a == 0.0) {
      if (b < 0.0) t = -c / (2.0 * b);
    } else {
      const double disc = b * b - a * c;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double qq = -(b + std::copysign(sq, b));
        for (double r : {qq / a, qq != 0.0 ? c / qq : kInf}) {
          if (r > 0.0) t = std::min(t, r);
        }
      }
    }
    // The head must also stay non-negative.
    if (dd[0] < 0.0) t = std::min(t, -uu[0] / dd[0]);
    alpha = std::min(alpha, t);
  }
  return alpha;
}

struct NtScaling {
  Vec d;                      // orthant: W = diag(d)
  std::vector<Vec> w;         // second-order cones: normalized scaling point
  std::vector<double> eta;
  Vec lambda;

  void compute(const ConeDims& dims, const Vec& s, const Vec& z) {
    d.resize(dims.l);
    for (int i = 0; i < dims.l; ++i) d[i] = std::sqrt(s[i] / z[i]);
    w.assign(dims.soc.size(), Vec());
    eta.assign(dims.soc.size(), 1.0);
    for (size_t k = 0; k < dims.soc.size(); ++k) {
      const int st = dims.start[k], q = dims.soc[k];
      const double a = std::sqrt(soc_det(s.data() + st, q));
      const double b = std::sqrt(soc_det(z.data() + st, q));
      const Vec sb = s.segment(st, q) / a;
      const Vec zb = z.segment(st, q) / b;
      const double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
      Vec wb(q);
      wb[0] = (sb[0] + zb[0]) / (2.0 * gamma);
      for (int i = 1; i < q; ++i) wb[i] = (sb[i] - zb[i]) / (2.0 * gamma);
      w[k] = wb;
      eta[k] = std::sqrt(a / b);
    }
    lambda = apply(dims, z, false);
  }

  // W v, or W^-1 v when `inverse`. On a cone block W = eta * [w0 w1'; w1
  // I + w1 w1' / (1 + w0)] and W^-1 = J W J / eta^2.
  Vec apply(const ConeDims& dims, const Vec& v, bool inverse) const {
    Vec out(dims.m);
    for (int i = 0; i < dims.l; ++i) out[i] = inverse ? v[i] / d[i] : v[i] * d[i];
    for (size_t k = 0; k < dims.soc.size(); ++k) {
      const int st = dims.start[k], q = dims.soc[k];
      const Vec& wb = w[k];
      const double sign = inverse ? -1.0 : 1.0;
      const double f = inverse ? 1.0 / eta[k] : eta[k];
      double t = 0.0;
      for (int i = 1; i < q; ++i) t += wb[i] * v[st + i];
      out[st] = f * (wb[0] * v[st] + sign * t);
      const double c = t / (1.0 + wb[0]);
      for (int i = 1; i < q; ++i) {
        out[st + i] = f * (sign * v[st] * wb[i] + v[st + i] + c * wb[i]);
      }
    }
    return out;
  }

  // W^-1 as a block-diagonal sparse matrix.
  SpMat inverse_matrix(const ConeDims& dims) const {
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < dims.l; ++i) t.emplace_back(i, i, 1.0 / d[i]);
    for (size_t k = 0; k < dims.soc.size(); ++k) {
      const int st = dims.start[k], q = dims.soc[k];
      const Vec& wb = w[k];
      const double f = 1.0 / eta[k];
      t.emplace_back(st, st, f * wb[0]);
      for (int i = 1; i < q; ++i) {
        t.emplace_back(st, st + i, -f * wb[i]);
        t.emplace_back(st + i, st, -f * wb[i]);
        for (int j = 1; j < q; ++j) {
          t.emplace_back(st + i, st + j,
                         f * ((i == j ? 1.0 : 0.0) + wb[i] * wb[j] / (1.0 + wb[0])));
        }
      }
    }
    SpMat out(dims.m, dims.m);
    out.setFromTriplets(t.begin(), t.end());
    return out;
  }
};

// Solves  [0 A' G'; A 0 0; G 0 -W^2] [x; y; z] = [r1; r2; r3]  through the
// equivalent scaled system in (x, y, W z) with G replaced by W^-1 G.
class KktSolver {
 public:
  KktSolver(const SpMat& A, const SpMat& G, const ConeDims& dims, double reg)
      : A_(A), G_(G), At_(A.transpose()), dims_(dims), reg_(reg) {
    AtA_ = At_ * A_;
  }

  // `scaling` null means W = I.
  bool factor(const NtScaling* scaling) {
    scaling_ = scaling;
    if (scaling) {
      gs_ = scaling->inverse_matrix(dims_) * G_;
    } else {
      gs_ = G_;
    }
    gst_ = gs_.transpose();
    const int n = static_cast<int>(G_.cols());
    SpMat H = gst_ * gs_;
    H += AtA_;
    double scale = 1.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(H.coeff(i, i)));
    double delta = reg_;
    SpMat I(n, n);
    I.setIdentity();
    for (int attempt = 0; attempt < 8; ++attempt) {
      chol_.compute(H + delta * I);
      if (chol_.info() == Eigen::Success) break;
      delta = std::max(delta * 100.0, 1e-14 * scale);
    }
    if (chol_.info() != Eigen::Success) return false;
    const int p = static_cast<int>(A_.rows());
    if (p > 0) {
      hinv_at_ = chol_.solve(Mat(At_));
      schur_.compute(A_ * hinv_at_);
      if (schur_.info() != Eigen::Success) return false;
    }
    return true;
  }

  void solve(const Vec& r1, const Vec& r2, const Vec& r3, Vec& x, Vec& y, Vec& z) const {
    const Vec r3s = scaling_ ? scaling_->apply(dims_, r3, true) : r3;
    Vec zs;
    reduced(r1, r2, r3s, x, y, zs);
    for (int it = 0; it < 3; ++it) {
      const Vec e1 = r1 - (At_ * y + gst_ * zs);
      const Vec e2 = r2 - A_ * x;
      const Vec e3 = r3s - (gs_ * x - zs);
      const double err = std::max({e1.size() ? e1.lpNorm<Eigen::Infinity>() : 0.0,
                                   e2.size() ? e2.lpNorm<Eigen::Infinity>() : 0.0,
                                   e3.size() ? e3.lpNorm<Eigen::Infinity>() : 0.0});
      if (err < 1e-15) break;
      Vec dx, dy, dz;
      reduced(e1, e2, e3, dx, dy, dz);
      x += dx;
      y += dy;
      zs += dz;
    }
    z = scaling_ ? scaling_->apply(dims_, zs, true) : zs;
  }

 private:
  void reduced(const Vec& r1, const Vec& r2, const Vec& r3, Vec& x, Vec& y, Vec& z) const {
    const Vec u = chol_.solve(r1 + gst_ * r3 + At_ * r2);
    if (A_.rows() > 0) {
      y = schur_.solve(A_ * u - r2);
      x = u - hinv_at_ * y;
    } else {
      y = Vec(0);
      x = u;
    }
    z = gs_ * x - r3;
  }

  const SpMat& A_;
  const SpMat& G_;
  SpMat At_, AtA_;
  const ConeDims& dims_;
  double reg_;
  const NtScaling* scaling_ = nullptr;
  SpMat gs_, gst_;
  Eigen::SimplicialLDLT<SpMat> chol_;
  Mat hinv_at_;
  Eigen::LDLT<Mat> schur_;
};

double norm_or_zero(const Vec& v) { return v.size() ? v.norm() : 0.0; }

}  // namespace

ConeSolution solve_cone(const ConeProblem& problem, const SolverConfig& config) {
  ConeSolution out;
  const int n = static_cast<int>(problem.c.size());
  const int p = static_cast<int>(problem.A.rows());
  const ConeDims dims(problem.orthant, problem.soc);
  if (problem.G.rows() != dims.m || problem.h.size() != dims.m ||
      problem.A.cols() != n || problem.G.cols() != n || problem.b.size() != p) {
    throw std::invalid_argument("inconsistent cone problem dimensions");
  }

  // Row equilibration: orthant and equality rows individually, cone blocks
  // by a common factor. The objective is scaled to unit max-norm.
  Vec row_scale_a = Vec::Ones(p), row_scale_g = Vec::Ones(dims.m);
  {
    SpMat At = problem.A.transpose();
    for (int r = 0; r < p; ++r) {
      double mx = 0.0;
      for (SpMat::InnerIterator it(At, r); it; ++it) mx = std::max(mx, std::abs(it.value()));
      if (mx > 0.0) row_scale_a[r] = 1.0 / mx;
    }
    SpMat Gt = problem.G.transpose();
    std::vector<double> rowmax(static_cast<size_t>(dims.m), 0.0);
    for (int r = 0; r < dims.m; ++r) {
      for (SpMat::InnerIterator it(Gt, r); it; ++it) {
        rowmax[static_cast<size_t>(r)] = std::max(rowmax[static_cast<size_t>(r)], std::abs(it.value()));
      }
    }
    for (int r = 0; r < dims.l; ++r) {
      if (rowmax[static_cast<size_t>(r)] > 0.0) row_scale_g[r] = 1.0 / rowmax[static_cast<size_t>(r)];
    }
    for (size_t k = 0; k < dims.soc.size(); ++k) {
      double mx = 0.0;
      for (int i = 0; i < dims.soc[k]; ++i) mx = std::max(mx, rowmax[static_cast<size_t>(dims.start[k] + i)]);
      if (mx > 0.0) row_scale_g.segment(dims.start[k], dims.soc[k]).setConstant(1.0 / mx);
    }
  }
  const SpMat A = row_scale_a.asDiagonal() * problem.A;
  const Vec b = row_scale_a.cwiseProduct(problem.b);
  const SpMat G = row_scale_g.asDiagonal() * problem.G;
  const Vec h = row_scale_g.cwiseProduct(problem.h);
  double cscale = problem.c.size() ? problem.c.lpNorm<Eigen::Infinity>() : 0.0;
  if (cscale == 0.0) cscale = 1.0;
  const Vec c = problem.c / cscale;

  const double resx0 = std::max(1.0, c.norm());
  const double resy0 = std::max(1.0, norm_or_zero(b));
  const double resz0 = std::max(1.0, norm_or_zero(h));

  KktSolver kkt(A, G, dims, config.regularization);
  Vec x, y, z, s;
  {
    if (!kkt.factor(nullptr)) {
      out.status = SolveStatus::NumericalError;
      return out;
    }
    Vec dx, dy, dz;
    kkt.solve(Vec::Zero(n), b, h, x, dy, dz);
    s = -dz;
    kkt.solve(-c, Vec::Zero(p), Vec::Zero(dims.m), dx, y, z);
    const double ts = -min_eigenvalue(dims, s);
    if (dims.m > 0 && ts >= -1e-8 * std::max(1.0, s.norm())) add_identity(dims, s, 1.0 + ts);
    const double tz = -min_eigenvalue(dims, z);
    if (dims.m > 0 && tz >= -1e-8 * std::max(1.0, z.norm())) add_identity(dims, z, 1.0 + tz);
  }
  double tau = 1.0, kappa = 1.0;
  const Vec e = identity(dims);
  const double degree = dims.degree();
  NtScaling scaling;

  auto finish = [&](SolveStatus status, double scale_xs, double scale_yz) {
    out.status = status;
    out.x = x * scale_xs;
    out.s = s * scale_xs;
    out.y = y * scale_yz;
    out.z = z * scale_yz;
    // Undo row and objective scaling of the duals and slacks.
    for (int r = 0; r < p; ++r) out.y[r] *= row_scale_a[r] * cscale;
    for (int r = 0; r < dims.m; ++r) {
      out.z[r] *= row_scale_g[r] * cscale;
      out.s[r] /= row_scale_g[r];
    }
    out.primal_objective = problem.c.dot(out.x) + problem.objective_offset;
    out.dual_objective = -(problem.b.dot(out.y) + problem.h.dot(out.z)) + problem.objective_offset;
  };

  // Near-certificate of infeasibility, used if the iteration breaks down
  // after tau has collapsed.
  double best_pinf = kInf, cert_scale = 0.0;
  Vec cert_y, cert_z;
  // Last iterate meeting the standard tests while the gap floor is not met.
  bool have_fallback = false;
  Vec fx, fy, fz, fs;
  double ftau = 1.0;
  auto fail = [&](SolveStatus status) {
    if (have_fallback) {
      x = fx;
      y = fy;
      z = fz;
      s = fs;
      finish(SolveStatus::Optimal, 1.0 / ftau, 1.0 / ftau);
      return;
    }
    if (best_pinf <= kLooseCertificate) {
      x.setZero();
      s.setZero();
      y = cert_y;
      z = cert_z;
      finish(SolveStatus::Infeasible, 0.0, cert_scale);
      return;
    }
    out.status = status;
  };

  for (int iter = 0; iter <= config.max_iters; ++iter) {
    out.iterations = iter;
    if (!s.allFinite() || !z.allFinite() || !x.allFinite() || !std::isfinite(tau) ||
        !std::isfinite(kappa)) {
      fail(SolveStatus::NumericalError);
      return out;
    }
    const Vec hrx = -(A.transpose() * y + G.transpose() * z);
    const Vec hry = A * x;
    const Vec hrz = G * x + s;
    const Vec rx = -hrx + c * tau;           // A'y + G'z + c tau
    const Vec ry = b * tau - hry;            // b tau - A x
    const Vec rz = h * tau - hrz;            // h tau - G x - s
    const double cx = c.dot(x), by = b.dot(y), hz = h.dot(z);
    const double rt = -cx - by - hz - kappa;
    const double gap = s.dot(z);
    const double mu = (gap + tau * kappa) / (degree + 1.0);

    const double pcost = cx / tau, dcost = -(by + hz) / tau;
    const double pres = std::max(norm_or_zero(ry) / tau / resy0, norm_or_zero(rz) / tau / resz0);
    const double dres = rx.norm() / tau / resx0;
    const double abs_gap = gap / (tau * tau);
    double relgap = kInf;
    if (pcost < 0.0) relgap = abs_gap / -pcost;
    else if (dcost > 0.0) relgap = abs_gap / dcost;
    const double pinf = (hz + by < 0.0) ? hrx.norm() / resx0 / -(hz + by) : kInf;
    const double dinf = (cx < 0.0)
        ? std::max(norm_or_zero(hry) / resy0, norm_or_zero(hrz) / resz0) / -cx
        : kInf;

    if (config.log) {
      *config.log << std::setw(3) << iter << std::scientific << std::setprecision(3)
                  << "  pcost " << pcost * cscale << "  dcost " << dcost * cscale
                  << "  gap " << abs_gap << "  pres " << pres << "  dres " << dres
                  << "  tau " << tau << "  kappa " << kappa << "\n";
    }
    out.gap = abs_gap * cscale;
    out.primal_residual = pres;
    out.dual_residual = dres;

    if (pres <= config.tol_feas && dres <= config.tol_feas &&
        (abs_gap <= config.tol_abs || relgap <= config.tol_gap)) {
      if (config.gap_floor <= 0.0 || abs_gap * cscale <= config.gap_floor) {
        finish(SolveStatus::Optimal, 1.0 / tau, 1.0 / tau);
        return out;
      }
      have_fallback = true;
      fx = x;
      fy = y;
      fz = z;
      fs = s;
      ftau = tau;
    }
    if (pinf < best_pinf && tau < 1e-6 * kappa) {
      best_pinf = pinf;
      cert_y = y;
      cert_z = z;
      cert_scale = 1.0 / -(hz + by);
    }
    if (pinf <= config.tol_infeas) {
      finish(SolveStatus::Infeasible, 0.0, 1.0 / -(hz + by));
      return out;
    }
    if (dinf <= config.tol_infeas) {
      finish(SolveStatus::Unbounded, 1.0 / -cx, 0.0);
      return out;
    }
    if (iter == config.max_iters) break;

    scaling.compute(dims, s, z);
    if (!kkt.factor(&scaling)) {
      fail(SolveStatus::NumericalError);
      return out;
    }
    const Vec& lambda = scaling.lambda;
    Vec x1, y1, z1;
    kkt.solve(-c, b, h, x1, y1, z1);
    const double denom_base = kappa / tau - c.dot(x1) - b.dot(y1) - h.dot(z1);

    struct Step {
      Vec dx, dy, dz, ds;
      double dtau = 0.0, dkappa = 0.0;
    };
    auto direction = [&](double eta, const Vec& xi_s, double xi_tau) {
      Step st;
      const Vec lam_div = jordan_divide(dims, lambda, xi_s);
      Vec x2, y2, z2;
      kkt.solve(-eta * rx, eta * ry, eta * rz - scaling.apply(dims, lam_div, false), x2, y2, z2);
      st.dtau = (-eta * rt + c.dot(x2) + b.dot(y2) + h.dot(z2) + xi_tau / tau) / denom_base;
      st.dx = x2 + st.dtau * x1;
      st.dy = y2 + st.dtau * y1;
      st.dz = z2 + st.dtau * z1;
      // From the linearized primal row; keeps rz on its exact linear path.
      st.ds = eta * rz + st.dtau * h - G * st.dx;
      st.dkappa = (xi_tau - kappa * st.dtau) / tau;
      return st;
    };
    auto step_length = [&](const Step& st) {
      double a = std::min(max_step(dims, s, st.ds), max_step(dims, z, st.dz));
      if (st.dtau < 0.0) a = std::min(a, -tau / st.dtau);
      if (st.dkappa < 0.0) a = std::min(a, -kappa / st.dkappa);
      return a;
    };

    const Vec lam_sq = jordan_product(dims, lambda, lambda);
    const Step aff = direction(1.0, -lam_sq, -tau * kappa);
    const double alpha_aff = std::min(1.0, step_length(aff));
    const double sigma = std::pow(1.0 - alpha_aff, 3);

    const Vec corr = jordan_product(dims, scaling.apply(dims, aff.ds, true),
                                    scaling.apply(dims, aff.dz, false));
    const Vec xi_s = -lam_sq - corr + sigma * mu * e;
    const double xi_tau = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
    const Step st = direction(1.0 - sigma, xi_s, xi_tau);
    const double alpha = std::min(1.0, config.step_fraction * step_length(st));
    if (!(alpha > 1e-14)) {
      fail(SolveStatus::NumericalError);
      return out;
    }
    x += alpha * st.dx;
    y += alpha * st.dy;
    z += alpha * st.dz;
    s += alpha * st.ds;
    tau += alpha * st.dtau;
    kappa += alpha * st.dkappa;
  }
  fail(SolveStatus::IterationLimit);
  return out;
}

}  // namespace opfptas
