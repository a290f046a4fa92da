#include "tlnmem/cstln.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tlnmem/numerics.hpp"

namespace tlnmem {

SupportSet::SupportSet(std::initializer_list<int> idx) : indices(idx) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
}

SupportSet::SupportSet(std::vector<int> idx) : indices(std::move(idx)) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
}

bool SupportSet::contains(int i) const {
  return std::binary_search(indices.begin(), indices.end(), i);
}

std::string SupportSet::to_string() const {
  std::ostringstream os;
  os << "{";
  for (size_t k = 0; k < indices.size(); ++k) {
    if (k) os << ",";
    os << indices[k];
  }
  os << "}";
  return os.str();
}

SupportSet support_of(const Eigen::VectorXd& x, double threshold) {
  std::vector<int> idx;
  for (int i = 0; i < x.size(); ++i)
    if (x(i) > threshold) idx.push_back(i + 1);
  return SupportSet(std::move(idx));
}

Network build_network(const CstlnParams& p) {
  if (p.n < 2) throw CstlnError("build_network: need n >= 2, got n = " + std::to_string(p.n));
  if (!(p.epsilon > 0.0 && p.epsilon < 1.0))
    throw CstlnError("build_network: epsilon must lie in (0, 1), got " +
                     std::to_string(p.epsilon));
  if (!(p.delta > 0.0))
    throw CstlnError("build_network: delta must be positive, got " + std::to_string(p.delta));
  if (!(p.c > 0.0))
    throw CstlnError("build_network: c must be positive, got " + std::to_string(p.c));

  Network net;
  net.params = p;
  net.W.setZero(p.n, p.n);
  for (int k = 0; k < p.n; ++k)
    for (int l = 0; l < p.n; ++l) {
      if (k == l) continue;
      net.W(k, l) = (std::abs(k - l) == 1) ? -1.0 + p.epsilon : -1.0 - p.delta;
    }
  net.theta = Eigen::VectorXd::Constant(p.n, p.c);
  return net;
}

Eigen::VectorXd drive(const Network& net, const Eigen::VectorXd& x) {
  if (x.size() != net.params.n) throw CstlnError("drive: state size mismatch");
  return net.W * x + net.theta;
}

namespace {

void check_index(const Network& net, int i, int lo, int hi, const char* who) {
  if (i < lo || i > hi)
    throw CstlnError(std::string(who) + ": index " + std::to_string(i) +
                     " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

std::vector<std::complex<double>> sorted_spectrum(std::vector<std::complex<double>> ev) {
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return ev;
}

EquilibriumKind classify(const std::vector<std::complex<double>>& ev) {
  constexpr double hyper_tol = 1e-9;
  int unstable = 0;
  for (const auto& l : ev) {
    if (std::abs(l.real()) < hyper_tol) return EquilibriumKind::Other;
    if (l.real() > 0) ++unstable;
  }
  if (unstable == 0) return EquilibriumKind::Attractor;
  if (unstable == 1) return EquilibriumKind::Saddle;
  return EquilibriumKind::Other;
}

double min_cell_margin(const Network& net, const Eigen::VectorXd& x,
                       const SupportSet& support) {
  Eigen::VectorXd y = drive(net, x);
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= net.params.n; ++i) {
    double slack = support.contains(i) ? y(i - 1) : -y(i - 1);
    margin = std::min(margin, slack);
  }
  return margin;
}

}  // namespace

Equilibrium attractor_closed_form(const Network& net, int i) {
  const auto& p = net.params;
  check_index(net, i, 1, p.n - 1, "attractor_closed_form");
  Equilibrium eq;
  eq.x = Eigen::VectorXd::Zero(p.n);
  double v = p.c / (2.0 - p.epsilon);
  eq.x(i - 1) = v;
  eq.x(i) = v;
  eq.support = SupportSet{i, i + 1};
  eq.kind = EquilibriumKind::Attractor;
  std::vector<std::complex<double>> ev = {{-2.0 + p.epsilon, 0.0}, {-p.epsilon, 0.0}};
  for (int k = 0; k < p.n - 2; ++k) ev.push_back({-1.0, 0.0});
  eq.eigenvalues = sorted_spectrum(std::move(ev));
  eq.cell_margin = min_cell_margin(net, eq.x, eq.support);
  return eq;
}

Equilibrium saddle_closed_form(const Network& net, int i) {
  const auto& p = net.params;
  if (p.n < 3) throw CstlnError("saddle_closed_form: need n >= 3");
  check_index(net, i, 2, p.n - 1, "saddle_closed_form");
  const double D = p.delta + 4.0 * p.epsilon - 2.0 * p.epsilon * p.epsilon;
  const double shoulder = p.c * p.epsilon / D;
  const double center = p.c * (p.delta + 2.0 * p.epsilon) / D;

  Equilibrium eq;
  eq.x = Eigen::VectorXd::Zero(p.n);
  eq.x(i - 2) = shoulder;
  eq.x(i - 1) = center;
  eq.x(i) = shoulder;
  eq.support = SupportSet{i - 1, i, i + 1};
  eq.kind = EquilibriumKind::Saddle;

  // Spectrum of the active 3x3 block: delta, and the stable pair
  // -1 + (b +- sqrt(b^2 + 8 a^2))/2 with a = -1+eps, b = -1-delta.
  const double a = -1.0 + p.epsilon;
  const double b = -1.0 - p.delta;
  const double disc = std::sqrt(b * b + 8.0 * a * a);
  std::vector<std::complex<double>> ev = {{p.delta, 0.0},
                                          {-1.0 + (b + disc) / 2.0, 0.0},
                                          {-1.0 + (b - disc) / 2.0, 0.0}};
  for (int k = 0; k < p.n - 3; ++k) ev.push_back({-1.0, 0.0});
  eq.eigenvalues = sorted_spectrum(std::move(ev));
  eq.cell_margin = min_cell_margin(net, eq.x, eq.support);
  return eq;
}

std::optional<Equilibrium> equilibrium_in_cell(const Network& net,
                                               const SupportSet& support) {
  const int n = net.params.n;
  const int m = support.size();
  if (m == 0) return std::nullopt;  // origin is never a fixed point for c > 0
  for (int i : support.indices)
    if (i < 1 || i > n) throw CstlnError("equilibrium_in_cell: index out of range");

  Eigen::MatrixXd Wss(m, m);
  Eigen::VectorXd ths(m);
  for (int r = 0; r < m; ++r) {
    ths(r) = net.theta(support.indices[r] - 1);
    for (int s = 0; s < m; ++s)
      Wss(r, s) = net.W(support.indices[r] - 1, support.indices[s] - 1);
  }
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(m, m) - Wss;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible())
    throw CstlnError("equilibrium_in_cell: I - W restricted to " + support.to_string() +
                     " is singular (degenerate network)");
  Eigen::VectorXd xs = lu.solve(ths);

  Equilibrium eq;
  eq.x = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < m; ++r) eq.x(support.indices[r] - 1) = xs(r);
  eq.support = support;
  eq.cell_margin = min_cell_margin(net, eq.x, support);
  if (!(eq.cell_margin > 0.0)) return std::nullopt;

  CellJacobian cj = cell_jacobian(net, support);
  eq.eigenvalues = cj.eigenvalues;
  eq.kind = cj.kind;
  return eq;
}

CellJacobian cell_jacobian(const Network& net, const SupportSet& support) {
  const int n = net.params.n;
  for (int i : support.indices)
    if (i < 1 || i > n) throw CstlnError("cell_jacobian: index out of range");

  CellJacobian out;
  out.J = -Eigen::MatrixXd::Identity(n, n);
  for (int i : support.indices) out.J.row(i - 1) += net.W.row(i - 1);

  // The spectrum splits: eigenvalues of -I + W restricted to the support,
  // plus -1 for each silent coordinate (block-triangular after permutation).
  const int m = support.size();
  std::vector<std::complex<double>> ev;
  if (m > 0) {
    Eigen::MatrixXd Wss(m, m);
    for (int r = 0; r < m; ++r)
      for (int s = 0; s < m; ++s)
        Wss(r, s) = net.W(support.indices[r] - 1, support.indices[s] - 1);
    Eigen::MatrixXd A = -Eigen::MatrixXd::Identity(m, m) + Wss;
    auto eig = num::sym_eig(A);
    for (int k = 0; k < m; ++k) ev.push_back({eig.values(k), 0.0});
  }
  for (int k = 0; k < n - m; ++k) ev.push_back({-1.0, 0.0});
  out.eigenvalues = sorted_spectrum(std::move(ev));
  out.kind = classify(out.eigenvalues);
  return out;
}

}  // namespace tlnmem
