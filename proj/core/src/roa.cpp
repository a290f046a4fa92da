#include "tlnmem/roa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "tlnmem/numerics.hpp"

namespace tlnmem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd sym_basis(int n, int i, int j) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  S(i, j) = 1.0;
  S(j, i) = 1.0;
  if (i == j) S(i, i) = 1.0;
  return S;
}

}  // namespace

ShiftedSystem shift_about(const Network& net, const Eigen::VectorXd& x_star, double tol) {
  if (x_star.size() != net.params.n)
    throw std::invalid_argument("shift_about: state dimension mismatch");
  Eigen::VectorXd y = net.W * x_star + net.theta;
  Eigen::VectorXd field = -x_star + y.cwiseMax(0.0);
  if (field.lpNorm<Eigen::Infinity>() > tol)
    throw std::invalid_argument("shift_about: x_star is not an equilibrium");
  return ShiftedSystem{net.params, net.W, x_star, y};
}

Eigen::VectorXd shifted_nonlinearity(const ShiftedSystem& sys, const Eigen::VectorXd& u) {
  return (u + sys.y_star).cwiseMax(0.0) - sys.y_star.cwiseMax(0.0);
}

Eigen::VectorXd shifted_field(const ShiftedSystem& sys, const Eigen::VectorXd& z) {
  return -z + shifted_nonlinearity(sys, sys.W * z);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> preactivation_interval(
    const ShiftedSystem& sys, const Eigen::MatrixXd& E, double alpha) {
  if (alpha <= 0.0) throw std::invalid_argument("preactivation_interval: alpha must be positive");
  Eigen::LLT<Eigen::MatrixXd> llt(E);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("preactivation_interval: E must be positive definite");
  const int n = static_cast<int>(sys.W.rows());
  Eigen::VectorXd lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd wi = sys.W.row(i).transpose();
    double spread = alpha * std::sqrt(wi.dot(llt.solve(wi)));
    lo(i) = sys.y_star(i) - spread;
    hi(i) = sys.y_star(i) + spread;
  }
  return {lo, hi};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> local_slopes(const ShiftedSystem& sys,
                                                         const Eigen::VectorXd& v_lo,
                                                         const Eigen::VectorXd& v_hi) {
  const int n = static_cast<int>(sys.y_star.size());
  if (v_lo.size() != n || v_hi.size() != n)
    throw std::invalid_argument("local_slopes: interval dimension mismatch");
  Eigen::VectorXd sa(n), sb(n);
  for (int i = 0; i < n; ++i) {
    double ys = sys.y_star(i);
    if (v_lo(i) > ys || v_hi(i) < ys)
      throw std::invalid_argument("local_slopes: interval must contain y_star");
    if (ys > 0.0) {
      sb(i) = 1.0;
      sa(i) = v_lo(i) >= 0.0 ? 1.0 : ys / (ys - v_lo(i));
    } else {
      sa(i) = 0.0;
      sb(i) = v_hi(i) <= 0.0 ? 0.0 : v_hi(i) / (v_hi(i) - ys);
    }
  }
  return {sa, sb};
}

SectorBounds sector_bounds(const ShiftedSystem& sys, const Eigen::MatrixXd& E,
                           double alpha) {
  SectorBounds b;
  std::tie(b.v_lo, b.v_hi) = preactivation_interval(sys, E, alpha);
  std::tie(b.s_alpha, b.s_beta) = local_slopes(sys, b.v_lo, b.v_hi);
  return b;
}

Eigen::MatrixXd build_qc(const Eigen::VectorXd& s_alpha, const Eigen::VectorXd& s_beta,
                         const Eigen::VectorXd& lambda, const Eigen::MatrixXd& W) {
  const int n = static_cast<int>(W.rows());
  if (s_alpha.size() != n || s_beta.size() != n || lambda.size() != n)
    throw std::invalid_argument("build_qc: dimension mismatch");
  if ((lambda.array() < 0.0).any())
    throw std::invalid_argument("build_qc: multipliers must be nonnegative");
  Eigen::MatrixXd Psi(2 * n, 2 * n);
  Psi << Eigen::MatrixXd(s_beta.asDiagonal()), -Eigen::MatrixXd::Identity(n, n),
      -Eigen::MatrixXd(s_alpha.asDiagonal()), Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  M.topRightCorner(n, n) = Eigen::MatrixXd(lambda.asDiagonal());
  M.bottomLeftCorner(n, n) = Eigen::MatrixXd(lambda.asDiagonal());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  T.topLeftCorner(n, n) = W;
  T.bottomRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Mk = T.transpose() * Psi.transpose() * M * Psi * T;
  return 0.5 * (Mk + Mk.transpose());
}

SdpSearchOutcome certify_sdp(const ShiftedSystem& sys, const MemoryModel& model,
                             const SdpSearchConfig& cfg) {
  const int n = static_cast<int>(sys.W.rows());
  auto svd = num::compact_svd(model.W_E);
  if (svd.sigma.size() == 0)
    throw CertificationError("certify_sdp: encoder is identically zero");
  Eigen::MatrixXd L = svd.V * svd.sigma.asDiagonal();  // n x k
  const int k = static_cast<int>(L.cols());

  const double c = sys.params.c;
  const double a_min = cfg.alpha_min;
  const double a_max = cfg.alpha_max > 0.0 ? cfg.alpha_max : 2.0 * c;
  if (!(a_min > 0.0) || a_max < a_min || cfg.grid_points < 1)
    throw std::invalid_argument("certify_sdp: bad alpha grid");
  const Eigen::MatrixXd E = Eigen::MatrixXd::Identity(n, n);

  // Variable layout: the upper triangle of P, then the multipliers, then t.
  const int nP = n * (n + 1) / 2;
  const int nv = nP + n + 1;
  const int t_idx = nP + n;
  std::vector<std::pair<int, int>> p_entries;
  p_entries.reserve(nP);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) p_entries.emplace_back(i, j);

  SdpSearchOutcome outcome;
  for (int g = 0; g < cfg.grid_points; ++g) {
    double frac = cfg.grid_points == 1 ? 0.0 : double(g) / (cfg.grid_points - 1);
    double alpha = a_min * std::pow(a_max / a_min, frac);
    SectorBounds bounds = sector_bounds(sys, E, alpha);

    std::vector<Eigen::MatrixXd> M_unit(n);
    for (int i = 0; i < n; ++i)
      M_unit[i] = build_qc(bounds.s_alpha, bounds.s_beta,
                           Eigen::VectorXd::Unit(n, i), sys.W);

    num::SdpProblem prob;
    prob.num_vars = nv;
    prob.c = Eigen::VectorXd::Zero(nv);
    prob.c(t_idx) = 1.0;

    num::SdpBlock decrease;  // [ -2P  P ; P  0 ] + sum lambda_i M_i <= -eps I
    decrease.F0 = cfg.eps_lmi * Eigen::MatrixXd::Identity(2 * n, 2 * n);
    for (int v = 0; v < nP; ++v) {
      Eigen::MatrixXd S = sym_basis(n, p_entries[v].first, p_entries[v].second);
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * n, 2 * n);
      G.topLeftCorner(n, n) = -2.0 * S;
      G.topRightCorner(n, n) = S;
      G.bottomLeftCorner(n, n) = S;
      decrease.terms.emplace_back(v, G);
    }
    for (int i = 0; i < n; ++i) decrease.terms.emplace_back(nP + i, M_unit[i]);

    num::SdpBlock nesting;  // E/alpha^2 - P <= -eps I
    nesting.F0 = E / (alpha * alpha) + cfg.eps_nest * Eigen::MatrixXd::Identity(n, n);
    for (int v = 0; v < nP; ++v)
      nesting.terms.emplace_back(v, -sym_basis(n, p_entries[v].first, p_entries[v].second));

    num::SdpBlock radius;  // L'PL - t I <= 0
    radius.F0 = Eigen::MatrixXd::Zero(k, k);
    for (int v = 0; v < nP; ++v) {
      Eigen::MatrixXd S = sym_basis(n, p_entries[v].first, p_entries[v].second);
      radius.terms.emplace_back(v, L.transpose() * S * L);
    }
    radius.terms.emplace_back(t_idx, -Eigen::MatrixXd::Identity(k, k));

    num::SdpBlock lam_sign;  // -lambda <= 0
    lam_sign.F0 = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
      D(i, i) = -1.0;
      lam_sign.terms.emplace_back(nP + i, D);
    }

    prob.blocks = {decrease, nesting, radius, lam_sign};
    num::SdpResult sol = num::sdp_solve(prob);
    if (sol.status == num::SdpStatus::Infeasible) {
      ++outcome.infeasible_points;
      continue;
    }
    if (sol.status != num::SdpStatus::Optimal) {
      ++outcome.solver_failures;
      continue;
    }

    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (int v = 0; v < nP; ++v) {
      auto [i, j] = p_entries[v];
      P(i, j) = P(j, i) = sol.x(v);
    }
    Eigen::VectorXd lambda = sol.x.segment(nP, n).cwiseMax(0.0);

    // Re-verification is independent of the solver: eigenvalue margins of
    // all three inequalities must clear the threshold or the point is
    // rejected outright.
    Eigen::MatrixXd lyap = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    lyap.topLeftCorner(n, n) = -2.0 * P;
    lyap.topRightCorner(n, n) = P;
    lyap.bottomLeftCorner(n, n) = P;
    lyap += build_qc(bounds.s_alpha, bounds.s_beta, lambda, sys.W);
    double m1 = num::sym_eig(0.5 * (lyap + lyap.transpose())).values.maxCoeff();

    Eigen::MatrixXd nest = E / (alpha * alpha) - P;
    double m2 = num::sym_eig(0.5 * (nest + nest.transpose())).values.maxCoeff();

    Eigen::MatrixXd LPL = L.transpose() * P * L;
    double t_true = num::sym_eig(0.5 * (LPL + LPL.transpose())).values.maxCoeff();
    double t_report = t_true * (1.0 + 1e-6);
    double m3 = t_true - t_report;

    if (t_true <= 0.0 || m1 > cfg.margin_tol || m2 > cfg.margin_tol || m3 > cfg.margin_tol) {
      ++outcome.solver_failures;
      continue;
    }
    ++outcome.feasible_points;

    double r = 1.0 / std::sqrt(t_report);
    if (!outcome.certificate || r > outcome.certificate->r) {
      SdpCertificate cert;
      cert.P_lyap = P;
      cert.lambda = lambda;
      cert.E = E;
      cert.alpha = alpha;
      cert.t = t_report;
      cert.r = r;
      cert.bounds = bounds;
      cert.margins = Eigen::Vector3d(m1, m2, m3);
      outcome.certificate = std::move(cert);
    }
  }
  return outcome;
}

FiFeasibility fi_parameters(const CstlnParams& params) {
  const double eps = params.epsilon, delta = params.delta, c = params.c;
  FiFeasibility fi;
  fi.alpha_min = c / (1.0 + delta);
  fi.A.resize(3, 2);
  fi.b.resize(3);
  // alpha + 2(1-eps) beta <= c ; (eps-1) alpha - beta <= -c ; -alpha <= -c/(1+delta)
  fi.A << 1.0, 2.0 * (1.0 - eps), eps - 1.0, -1.0, -1.0, 0.0;
  fi.b << c, -c, -fi.alpha_min;

  num::LpProblem lp;
  lp.c = Eigen::Vector2d(1.0, 0.0);  // widest alpha
  lp.A = fi.A;
  lp.b = fi.b;
  auto sol = num::lp_solve(lp);
  fi.feasible = sol.status == num::LpStatus::Optimal;
  fi.alpha_max = fi.feasible ? sol.objective : 0.0;
  return fi;
}

FiSet build_fi_set(const Network& net, int center, double alpha, double beta) {
  const int n = net.params.n;
  const double c = net.params.c, eps = net.params.epsilon, delta = net.params.delta;
  if (center < 2 || center > n - 1)
    throw std::invalid_argument("build_fi_set: center must have neighbours on both sides");
  if (alpha < 0.0 || beta < 0.0)
    throw std::invalid_argument("build_fi_set: levels must be nonnegative");
  const double slack = 1e-12;
  if (alpha + 2.0 * (1.0 - eps) * beta > c + slack ||
      (eps - 1.0) * alpha + c > beta + slack || alpha + slack < c / (1.0 + delta))
    throw std::invalid_argument("build_fi_set: levels violate the invariance conditions");

  FiSet fi;
  fi.center = center;
  fi.alpha = alpha;
  fi.beta = beta;
  fi.A.resize(n, n);
  fi.b.resize(n);
  for (int k = 1; k <= n; ++k) {
    if (k == center) {
      fi.A.row(k - 1) = -net.W.row(k - 1);
      fi.b(k - 1) = c - alpha;
    } else if (k == center - 1 || k == center + 1) {
      fi.A.row(k - 1) = net.W.row(k - 1);
      fi.b(k - 1) = beta - c;
    } else {
      fi.A.row(k - 1) = net.W.row(k - 1);
      fi.b(k - 1) = -c;
    }
  }
  return fi;
}

Eigen::VectorXd separating_normal(const Network& net, int i) {
  const int n = net.params.n;
  if (i < 2 || i > n - 1)
    throw std::invalid_argument("separating_normal: index must be interior to the chain");
  double q = (net.params.epsilon + net.params.delta) / (1.0 + net.params.delta);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  w(i - 2) = 1.0;
  w(i) = -1.0;
  if (i - 3 >= 0) w(i - 3) = q;
  if (i + 1 < n) w(i + 1) = -q;
  return w;
}

Polytope as_polytope(const RoaPolyhedron& poly) { return Polytope{poly.A, poly.b}; }

std::pair<RoaPolyhedron, RoaPolyhedron> roa_polyhedra(const Network& net, const FiSet& fi) {
  Eigen::VectorXd w = separating_normal(net, fi.center);
  const int n = net.params.n;

  auto half = [&](bool left) {
    RoaPolyhedron p;
    p.attractor_index = left ? fi.center - 1 : fi.center;
    p.left_of_saddle = left;
    p.w = w;
    p.A.resize(n + 1, n);
    p.b.resize(n + 1);
    p.A.topRows(n) = fi.A;
    p.b.head(n) = fi.b;
    if (left)
      p.A.row(n) = -w.transpose();
    else
      p.A.row(n) = w.transpose();
    p.b(n) = 0.0;
    return p;
  };
  return {half(true), half(false)};
}

namespace {

struct SideRows {
  Eigen::MatrixXd A;        // polyhedron rows
  Eigen::VectorXd b_const;  // level-free part of b
  Eigen::VectorXd b_alpha;  // coefficient of alpha in b
  Eigen::VectorXd b_beta;   // coefficient of beta in b
  Eigen::VectorXd den;      // encoder-image norm of each row
};

SideRows side_rows(const Network& net, const MemoryModel& model, int center,
                   bool ours_left_of_saddle) {
  const int n = net.params.n;
  const double c = net.params.c;
  Eigen::VectorXd w = separating_normal(net, center);

  SideRows s;
  s.A.resize(n + 1, n);
  s.b_const.resize(n + 1);
  s.b_alpha = Eigen::VectorXd::Zero(n + 1);
  s.b_beta = Eigen::VectorXd::Zero(n + 1);
  for (int k = 1; k <= n; ++k) {
    if (k == center) {
      s.A.row(k - 1) = -net.W.row(k - 1);
      s.b_const(k - 1) = c;
      s.b_alpha(k - 1) = -1.0;
    } else if (k == center - 1 || k == center + 1) {
      s.A.row(k - 1) = net.W.row(k - 1);
      s.b_const(k - 1) = -c;
      s.b_beta(k - 1) = 1.0;
    } else {
      s.A.row(k - 1) = net.W.row(k - 1);
      s.b_const(k - 1) = -c;
    }
  }
  if (ours_left_of_saddle)
    s.A.row(n) = -w.transpose();
  else
    s.A.row(n) = w.transpose();
  s.b_const(n) = 0.0;

  s.den.resize(n + 1);
  for (int l = 0; l <= n; ++l)
    s.den(l) = (model.W_E * s.A.row(l).transpose()).norm();
  return s;
}

// Worst-case noise radius with the level parameters pinned.
void fixed_level_side(const SideRows& rows, const Eigen::VectorXd& x_tar, double alpha,
                      double beta, SideCertificate& out) {
  const int m = static_cast<int>(rows.A.rows());
  out.alpha = alpha;
  out.beta = beta;
  out.row_ratios.resize(m);
  double r = kInf;
  for (int l = 0; l < m; ++l) {
    double b = rows.b_const(l) + alpha * rows.b_alpha(l) + beta * rows.b_beta(l);
    double num = b - rows.A.row(l).dot(x_tar);
    double ratio;
    if (std::abs(num) <= 1e-12) {
      ratio = 0.0;  // target touches this face
    } else if (num < 0.0) {
      out.target_outside = true;
      ratio = rows.den(l) > 1e-12 ? num / rows.den(l) : -kInf;
    } else {
      ratio = rows.den(l) > 1e-12 ? num / rows.den(l) : kInf;
    }
    out.row_ratios(l) = ratio;
    r = std::min(r, ratio);
  }
  if (out.target_outside || !std::isfinite(r))
    out.r = 0.0;  // rows the encoder cannot see never certify anything
  else
    out.r = std::max(0.0, r);
}

// Level parameters free: maximize r jointly over (alpha, beta, r).
void joint_side(const Network& net, const SideRows& rows, const Eigen::VectorXd& x_tar,
                SideCertificate& out) {
  const int m = static_cast<int>(rows.A.rows());
  const double c = net.params.c, eps = net.params.epsilon, delta = net.params.delta;

  num::LpProblem lp;
  lp.c = Eigen::Vector3d(0.0, 0.0, 1.0);
  lp.A.resize(m + 3, 3);
  lp.b.resize(m + 3);
  for (int l = 0; l < m; ++l) {
    lp.A(l, 0) = -rows.b_alpha(l);
    lp.A(l, 1) = -rows.b_beta(l);
    lp.A(l, 2) = rows.den(l);
    lp.b(l) = rows.b_const(l) - rows.A.row(l).dot(x_tar);
  }
  lp.A.row(m) << 1.0, 2.0 * (1.0 - eps), 0.0;
  lp.b(m) = c;
  lp.A.row(m + 1) << eps - 1.0, -1.0, 0.0;
  lp.b(m + 1) = -c;
  lp.A.row(m + 2) << -1.0, 0.0, 0.0;
  lp.b(m + 2) = -c / (1.0 + delta);

  auto sol = num::lp_solve(lp);
  if (sol.status != num::LpStatus::Optimal) {
    out.target_outside = true;
    out.r = 0.0;
    return;
  }
  out.alpha = sol.x(0);
  out.beta = sol.x(1);
  // Report per-row ratios at the chosen levels for inspection.
  SideCertificate at_levels;
  fixed_level_side(rows, x_tar, out.alpha, out.beta, at_levels);
  out.row_ratios = at_levels.row_ratios;
  double r_star = std::max(0.0, sol.x(2));
  out.target_outside = r_star <= 1e-12 && at_levels.target_outside;
  out.r = out.target_outside ? 0.0 : r_star;
}

}  // namespace

LpCertificate certify_lp(const Network& net, const MemoryModel& model, int pattern_m,
                         const LpOptions& opts) {
  const int n = net.params.n;
  if (pattern_m < 1 || pattern_m > static_cast<int>(model.registry.size()))
    throw std::invalid_argument("certify_lp: pattern index out of range");
  const auto& entry = model.registry[pattern_m - 1];
  Eigen::VectorXd x_tar = encode(model, entry.pattern);

  LpCertificate cert;
  cert.pattern_index = pattern_m;
  const bool has_prev = pattern_m >= 2;
  const bool has_next = pattern_m + 1 <= n - 1;
  if (!has_prev && !has_next)
    throw CertificationError("certify_lp: the chain has no interior saddle to certify against");

  double fixed_alpha = opts.alpha, fixed_beta = opts.beta;
  if (!opts.joint && fixed_alpha < 0.0) {
    auto fi = fi_parameters(net.params);
    if (!fi.feasible)
      throw CertificationError("certify_lp: no forward-invariant levels exist for these parameters");
    fixed_alpha = 0.5 * (fi.alpha_min + fi.alpha_max);
    fixed_beta = net.params.c - (1.0 - net.params.epsilon) * fixed_alpha;
  }

  auto run_side = [&](int center, bool ours_left, SideCertificate& out) {
    out.exists = true;
    SideRows rows = side_rows(net, model, center, ours_left);
    if (rows.den.maxCoeff() <= 1e-12)
      throw CertificationError("certify_lp: encoder is degenerate for this pattern");
    if (opts.joint)
      joint_side(net, rows, x_tar, out);
    else
      fixed_level_side(rows, x_tar, fixed_alpha, fixed_beta, out);
  };

  // The boundary toward the previous pair has its saddle at this pattern's
  // first coordinate; the boundary toward the next pair at its second.
  if (has_prev) run_side(pattern_m, false, cert.toward_previous);
  if (has_next) run_side(pattern_m + 1, true, cert.toward_next);

  if (has_prev && has_next)
    cert.r = opts.report_max ? std::max(cert.toward_previous.r, cert.toward_next.r)
                             : std::min(cert.toward_previous.r, cert.toward_next.r);
  else
    cert.r = has_prev ? cert.toward_previous.r : cert.toward_next.r;
  return cert;
}

ValidationReport validate_certificate(const Network& net, const MemoryModel& model,
                                      int pattern_m, double radius, double rho,
                                      int trials, std::uint64_t seed,
                                      const SessionConfig& session) {
  if (pattern_m < 1 || pattern_m > static_cast<int>(model.registry.size()))
    throw std::invalid_argument("validate_certificate: pattern index out of range");
  if (radius < 0.0 || rho < 0.0)
    throw std::invalid_argument("validate_certificate: radius and rho must be nonnegative");
  const auto& entry = model.registry[pattern_m - 1];
  const int d = static_cast<int>(entry.pattern.size());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  ValidationReport rep;
  rep.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(d);
    double scale = rho * radius;
    if (scale > 0.0) {
      double norm = 0.0;
      while (norm < 1e-12) {
        for (int i = 0; i < d; ++i) eta(i) = gauss(rng);
        norm = eta.norm();
      }
      eta *= scale / norm;
    }
    Pattern probe{entry.pattern + eta, entry.pattern_id + "-probe"};
    auto res = infer_pattern(model, net, probe, session);
    if (res.matched_support == entry.support) ++rep.successes;
  }
  rep.accuracy = trials > 0 ? double(rep.successes) / trials : 0.0;
  return rep;
}

}  // namespace tlnmem
