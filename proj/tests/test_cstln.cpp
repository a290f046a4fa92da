#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "tlnmem/cstln.hpp"
#include "tlnmem/numerics.hpp"

using namespace tlnmem;

namespace {
Network paper_net() { return build_network({7, 0.9, 2.0, 1.0}); }
}  // namespace

TEST_CASE("build_network entries and validation") {
  SUBCASE("n=3 entries") {
    auto net = build_network({3, 0.7, 2.5, 1.2});
    CHECK(net.W(0, 0) == 0.0);
    CHECK(net.W(0, 1) == doctest::Approx(-0.3));
    CHECK(net.W(1, 0) == doctest::Approx(-0.3));
    CHECK(net.W(0, 2) == doctest::Approx(-3.5));
    CHECK((net.W - net.W.transpose()).norm() == 0.0);
    CHECK(net.theta.minCoeff() == doctest::Approx(1.2));
    CHECK(net.theta.maxCoeff() == doctest::Approx(1.2));
  }
  SUBCASE("parameter bounds enforced") {
    CHECK_THROWS_AS(build_network({1, 0.5, 1.0, 1.0}), CstlnError);
    CHECK_THROWS_AS(build_network({4, 0.0, 1.0, 1.0}), CstlnError);
    CHECK_THROWS_AS(build_network({4, 1.0, 1.0, 1.0}), CstlnError);
    CHECK_THROWS_AS(build_network({4, 0.5, 0.0, 1.0}), CstlnError);
    CHECK_THROWS_AS(build_network({4, 0.5, 1.0, -2.0}), CstlnError);
  }
}

TEST_CASE("drive") {
  auto net = build_network({4, 0.7, 2.5, 1.0});
  Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  x(0) = 1.0;
  Eigen::VectorXd y = drive(net, x);
  CHECK(y(0) == doctest::Approx(1.0));
  CHECK(y(1) == doctest::Approx(0.7));
  CHECK(y(2) == doctest::Approx(-2.5));
  CHECK(y(3) == doctest::Approx(-2.5));
}

TEST_CASE("attractor closed form") {
  auto net = paper_net();
  auto eq = attractor_closed_form(net, 2);
  const double v = 1.0 / 1.1;

  SUBCASE("state and support") {
    CHECK(eq.x(1) == doctest::Approx(v).epsilon(1e-14));
    CHECK(eq.x(2) == doctest::Approx(v).epsilon(1e-14));
    CHECK(eq.support == SupportSet{2, 3});
    CHECK(eq.kind == EquilibriumKind::Attractor);
  }
  SUBCASE("fixed point of the rectified map") {
    Eigen::VectorXd y = drive(net, eq.x);
    Eigen::VectorXd residual = eq.x - y.cwiseMax(0.0);
    CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-14);
  }
  SUBCASE("adjacent silent drive matches -c*delta/(2-eps)") {
    Eigen::VectorXd y = drive(net, eq.x);
    CHECK(y(0) == doctest::Approx(-2.0 / 1.1).epsilon(1e-13));
    CHECK(y(1) == doctest::Approx(v).epsilon(1e-13));
    CHECK(y(2) == doctest::Approx(v).epsilon(1e-13));
  }
  SUBCASE("spectrum") {
    // {-2+eps, -eps} from the active block, -1 elsewhere; sorted ascending.
    CHECK(eq.eigenvalues.front().real() == doctest::Approx(-1.1).epsilon(1e-14));
    CHECK(eq.eigenvalues.back().real() == doctest::Approx(-0.9).epsilon(1e-14));
    int minus_one = 0;
    for (auto& l : eq.eigenvalues)
      if (std::abs(l.real() + 1.0) < 1e-14) ++minus_one;
    CHECK(minus_one == 5);
  }
  SUBCASE("agrees with the generic cell solver") {
    auto got = equilibrium_in_cell(net, SupportSet{2, 3});
    REQUIRE(got.has_value());
    CHECK((got->x - eq.x).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(got->kind == EquilibriumKind::Attractor);
    CHECK(got->cell_margin > 0.0);
  }
  SUBCASE("index range enforced") {
    CHECK_THROWS_AS(attractor_closed_form(net, 0), CstlnError);
    CHECK_THROWS_AS(attractor_closed_form(net, 7), CstlnError);
  }
}

TEST_CASE("saddle closed form") {
  auto net = paper_net();
  auto eq = saddle_closed_form(net, 3);

  SUBCASE("coordinates") {
    CHECK(eq.x(1) == doctest::Approx(0.226131).epsilon(1e-5));
    CHECK(eq.x(2) == doctest::Approx(0.954774).epsilon(1e-5));
    CHECK(eq.x(3) == doctest::Approx(0.226131).epsilon(1e-5));
    CHECK(eq.support == SupportSet{2, 3, 4});
  }
  SUBCASE("fixed point residual") {
    Eigen::VectorXd y = drive(net, eq.x);
    CHECK((eq.x - y.cwiseMax(0.0)).lpNorm<Eigen::Infinity>() < 1e-14);
  }
  SUBCASE("spectrum: exactly one positive eigenvalue, equal to delta") {
    int pos = 0;
    for (auto& l : eq.eigenvalues)
      if (l.real() > 0) ++pos;
    CHECK(pos == 1);
    CHECK(eq.eigenvalues.back().real() == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(eq.kind == EquilibriumKind::Saddle);
    // Stable pair of the active block.
    CHECK(eq.eigenvalues.front().real() == doctest::Approx(-4.00665).epsilon(1e-5));
  }
  SUBCASE("numerical spectrum of the active block matches the closed form") {
    auto cj = cell_jacobian(net, eq.support);
    REQUIRE(cj.eigenvalues.size() == eq.eigenvalues.size());
    for (size_t k = 0; k < cj.eigenvalues.size(); ++k)
      CHECK(cj.eigenvalues[k].real() ==
            doctest::Approx(eq.eigenvalues[k].real()).epsilon(1e-10));
  }
  SUBCASE("index range enforced") {
    CHECK_THROWS_AS(saddle_closed_form(net, 1), CstlnError);
    CHECK_THROWS_AS(saddle_closed_form(net, 7), CstlnError);
  }
}

TEST_CASE("equilibrium_in_cell") {
  SUBCASE("cell without equilibrium returns nullopt") {
    auto net = build_network({4, 0.7, 2.5, 1.0});
    auto got = equilibrium_in_cell(net, SupportSet{1, 3});
    CHECK(!got.has_value());
  }
  SUBCASE("full support interior point for small network") {
    auto net = build_network({3, 0.8, 1.5, 1.0});
    auto got = equilibrium_in_cell(net, SupportSet{1, 2, 3});
    REQUIRE(got.has_value());
    CHECK(got->x.minCoeff() > 0.0);
    Eigen::VectorXd y = drive(net, got->x);
    CHECK((got->x - y.cwiseMax(0.0)).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  SUBCASE("pair supports: only adjacent pairs admit equilibria") {
    auto net = paper_net();
    int found = 0;
    for (int i = 1; i <= 6; ++i) {
      auto got = equilibrium_in_cell(net, SupportSet{i, i + 1});
      if (got.has_value()) ++found;
    }
    CHECK(found == 6);
    // Distant pairs have none.
    CHECK(!equilibrium_in_cell(net, SupportSet{1, 4}).has_value());
    CHECK(!equilibrium_in_cell(net, SupportSet{2, 6}).has_value());
  }
}

TEST_CASE("cell_jacobian structure and permutation consistency") {
  auto net = paper_net();
  SupportSet sigma{2, 3, 4};
  auto cj = cell_jacobian(net, sigma);

  SUBCASE("rows off support are -e_k") {
    for (int k = 1; k <= 7; ++k) {
      if (sigma.contains(k)) continue;
      for (int l = 1; l <= 7; ++l) {
        double expect = (k == l) ? -1.0 : 0.0;
        CHECK(cj.J(k - 1, l - 1) == doctest::Approx(expect));
      }
    }
  }
  SUBCASE("permuted block-triangular form gives the same spectrum") {
    // Build the permutation that lists the support first.
    std::vector<int> order;
    for (int i : sigma.indices) order.push_back(i - 1);
    for (int k = 0; k < 7; ++k)
      if (!sigma.contains(k + 1)) order.push_back(k);
    Eigen::MatrixXd Pm = Eigen::MatrixXd::Zero(7, 7);
    for (int k = 0; k < 7; ++k) Pm(k, order[k]) = 1.0;
    Eigen::MatrixXd Jp = Pm * cj.J * Pm.transpose();
    // Lower-left block must vanish and the diagonal blocks match the split.
    CHECK(Jp.bottomLeftCorner(4, 3).norm() == doctest::Approx(0.0));
    Eigen::MatrixXd top = Jp.topLeftCorner(3, 3);
    auto eig_top = num::sym_eig(top);
    CHECK(eig_top.values(2) == doctest::Approx(2.0).epsilon(1e-12));
    Eigen::MatrixXd bottom = Jp.bottomRightCorner(4, 4);
    CHECK((bottom + Eigen::MatrixXd::Identity(4, 4)).norm() == doctest::Approx(0.0));
  }
  SUBCASE("random supports classify consistently with the spectrum") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<int> idx;
      for (int i = 1; i <= 7; ++i)
        if (rng() % 2) idx.push_back(i);
      if (idx.empty()) continue;
      auto c = cell_jacobian(net, SupportSet(idx));
      int pos = 0, zero = 0;
      for (auto& l : c.eigenvalues) {
        if (std::abs(l.real()) < 1e-9) ++zero;
        else if (l.real() > 0) ++pos;
      }
      if (zero > 0) CHECK(c.kind == EquilibriumKind::Other);
      else if (pos == 0) CHECK(c.kind == EquilibriumKind::Attractor);
      else if (pos == 1) CHECK(c.kind == EquilibriumKind::Saddle);
      else CHECK(c.kind == EquilibriumKind::Other);
    }
  }
}

TEST_CASE("support_of thresholds") {
  Eigen::VectorXd x(4);
  x << 0.0, 1e-9, 1e-6, 0.5;
  CHECK(support_of(x, 1e-7) == SupportSet{3, 4});
  CHECK(support_of(x, 1e-10) == SupportSet{2, 3, 4});
}
