#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "tlnmem/numerics.hpp"
#include "support/lp_oracle.hpp"

using namespace tlnmem;

TEST_CASE("sym_eig basics") {
  SUBCASE("known 3x3 spectrum") {
    // Symmetric chain-coupling block with eps=0.9, delta=2; its spectrum is
    // delta and -1 + (b +- sqrt(b^2 + 8 a^2))/2 with a=-0.1, b=-3, shifted
    // here by +I so we can verify against hand values.
    double a = -0.1, b = -3.0;
    Eigen::MatrixXd J(3, 3);
    J << -1, a, b, a, -1, a, b, a, -1;
    auto eig = num::sym_eig(J);
    double disc = std::sqrt(b * b + 8 * a * a);
    Eigen::Vector3d expect(-1 + (b - disc) / 2, -1 + (b + disc) / 2, 2.0);
    for (int i = 0; i < 3; ++i) CHECK(eig.values(i) == doctest::Approx(expect(i)).epsilon(1e-12));
    // Orthonormality and reconstruction.
    CHECK((eig.vectors.transpose() * eig.vectors - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
    CHECK((J * eig.vectors - eig.vectors * eig.values.asDiagonal().toDenseMatrix()).norm() < 1e-10);
  }
  SUBCASE("asymmetric input rejected") {
    Eigen::MatrixXd M(2, 2);
    M << 0, 1, 0, 0;
    CHECK_THROWS_AS(num::sym_eig(M), num::NumericsError);
  }
}

TEST_CASE("lp_solve pinned examples") {
  SUBCASE("simple box optimum") {
    num::LpProblem p;
    p.c = Eigen::Vector2d(1, 1);
    p.A = Eigen::MatrixXd(2, 2);
    p.A << 1, 0, 0, 1;
    p.b = Eigen::Vector2d(2, 3);
    auto r = num::lp_solve(p);
    REQUIRE(r.status == num::LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(r.x(0) == doctest::Approx(2.0));
    CHECK(r.x(1) == doctest::Approx(3.0));
  }
  SUBCASE("infeasible pair of rows") {
    num::LpProblem p;
    p.c = Eigen::VectorXd::Ones(1);
    p.A = Eigen::MatrixXd(2, 1);
    p.A << 1, -1;
    p.b = Eigen::Vector2d(-1, -1);  // x <= -1 and x >= 1
    p.lo = Eigen::VectorXd::Constant(1, -10);
    p.hi = Eigen::VectorXd::Constant(1, 10);
    auto r = num::lp_solve(p);
    CHECK(r.status == num::LpStatus::Infeasible);
  }
  SUBCASE("unbounded ray flagged") {
    num::LpProblem p;
    p.c = Eigen::VectorXd::Ones(1);
    p.A = Eigen::MatrixXd(0, 1);
    p.b = Eigen::VectorXd(0);
    auto r = num::lp_solve(p);
    CHECK(r.status == num::LpStatus::Unbounded);
  }
  SUBCASE("free variable") {
    // maximize y - x with y - x <= 1, y <= 3; x unbounded both sides.
    num::LpProblem p;
    p.c = Eigen::Vector2d(-1, 1);
    p.A = Eigen::MatrixXd(2, 2);
    p.A << -1, 1, 0, 1;
    p.b = Eigen::Vector2d(1, 3);
    p.lo = Eigen::Vector2d(-std::numeric_limits<double>::infinity(), 0);
    p.hi = Eigen::Vector2d(std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity());
    auto r = num::lp_solve(p);
    REQUIRE(r.status == num::LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("upper bound only") {
    num::LpProblem p;
    p.c = Eigen::VectorXd::Ones(1);
    p.A = Eigen::MatrixXd(0, 1);
    p.b = Eigen::VectorXd(0);
    p.lo = Eigen::VectorXd::Constant(1, -std::numeric_limits<double>::infinity());
    p.hi = Eigen::VectorXd::Constant(1, 5.0);
    auto r = num::lp_solve(p);
    REQUIRE(r.status == num::LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(5.0));
  }
}

TEST_CASE("lp_solve agrees with vertex enumeration on random instances") {
  std::mt19937_64 rng(20260815);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.1, 1.1);
  int checked = 0;
  for (int inst = 0; inst < 100; ++inst) {
    int n = 2 + static_cast<int>(rng() % 3);  // 2..4 variables
    int m = n + 1 + static_cast<int>(rng() % 4);
    Eigen::MatrixXd A(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
    Eigen::VectorXd x0(n), c(n);
    for (int j = 0; j < n; ++j) {
      x0(j) = gauss(rng);
      c(j) = gauss(rng);
    }
    Eigen::VectorXd b = A * x0;
    for (int i = 0; i < m; ++i) b(i) += unif(rng);

    num::LpProblem p;
    p.c = c;
    p.A = A;
    p.b = b;
    p.lo = Eigen::VectorXd::Constant(n, -10.0);
    p.hi = Eigen::VectorXd::Constant(n, 10.0);
    auto r = num::lp_solve(p);
    REQUIRE(r.status == num::LpStatus::Optimal);

    // Oracle sees the same system with the box appended as rows.
    Eigen::MatrixXd Afull(m + 2 * n, n);
    Eigen::VectorXd bfull(m + 2 * n);
    Afull.topRows(m) = A;
    bfull.head(m) = b;
    Afull.middleRows(m, n) = Eigen::MatrixXd::Identity(n, n);
    bfull.segment(m, n).setConstant(10.0);
    Afull.bottomRows(n) = -Eigen::MatrixXd::Identity(n, n);
    bfull.tail(n).setConstant(10.0);
    auto oracle = test::lp_vertex_oracle(c, Afull, bfull);
    REQUIRE(oracle.feasible);
    CHECK(std::abs(r.objective - oracle.objective) < 1e-8);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("sdp_solve") {
  SUBCASE("Lyapunov feasibility for a stable diagonal system") {
    // Variables (p11, p12, p22); constraints A'P + PA <= -0.1 I, P >= 0.01 I.
    Eigen::Matrix2d A = Eigen::Vector2d(-1, -2).asDiagonal();
    auto basis = [](int i, int j) {
      Eigen::Matrix2d E = Eigen::Matrix2d::Zero();
      E(i, j) = E(j, i) = 1;
      return E;
    };
    num::SdpProblem p;
    p.num_vars = 3;
    num::SdpBlock lyap, pd;
    lyap.F0 = 0.1 * Eigen::Matrix2d::Identity();
    pd.F0 = 0.01 * Eigen::Matrix2d::Identity();
    Eigen::Matrix2d Es[3] = {basis(0, 0), basis(0, 1), basis(1, 1)};
    for (int k = 0; k < 3; ++k) {
      lyap.terms.emplace_back(k, Eigen::MatrixXd(A.transpose() * Es[k] + Es[k] * A));
      pd.terms.emplace_back(k, Eigen::MatrixXd(-Es[k]));
    }
    p.blocks = {lyap, pd};
    auto r = num::sdp_solve(p);
    REQUIRE(r.status == num::SdpStatus::Optimal);
    for (double mgn : r.block_margins) CHECK(mgn < 0.0);
  }
  SUBCASE("minimize t with M <= tI recovers the max eigenvalue") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd Mraw(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) Mraw(i, j) = gauss(rng);
    Eigen::MatrixXd M = 0.5 * (Mraw + Mraw.transpose());
    num::SdpProblem p;
    p.num_vars = 1;
    p.c = Eigen::VectorXd::Ones(1);
    num::SdpBlock blk;
    blk.F0 = M;
    blk.terms.emplace_back(0, Eigen::MatrixXd(-Eigen::MatrixXd::Identity(5, 5)));
    p.blocks = {blk};
    auto r = num::sdp_solve(p);
    REQUIRE(r.status == num::SdpStatus::Optimal);
    double lmax = num::sym_eig(M).values.maxCoeff();
    CHECK(std::abs(r.objective - lmax) < 1e-6);
  }
  SUBCASE("certified infeasible instance") {
    // 2p <= -0.001 together with p >= 0.001 has no solution.
    num::SdpProblem p;
    p.num_vars = 1;
    num::SdpBlock stab, pd;
    stab.F0 = Eigen::MatrixXd::Constant(1, 1, 0.001);
    stab.terms.emplace_back(0, Eigen::MatrixXd::Constant(1, 1, 2.0));
    pd.F0 = Eigen::MatrixXd::Constant(1, 1, 0.001);
    pd.terms.emplace_back(0, Eigen::MatrixXd::Constant(1, 1, -1.0));
    p.blocks = {stab, pd};
    auto r = num::sdp_solve(p);
    CHECK(r.status == num::SdpStatus::Infeasible);
  }
}

TEST_CASE("care_solve") {
  SUBCASE("scalar closed form") {
    Eigen::MatrixXd A(1, 1), B(1, 1), Q(1, 1), R(1, 1);
    A << -1;
    B << 1;
    Q << 1;
    R << 1;
    auto s = num::care_solve(A, B, Q, R);
    CHECK(s.P(0, 0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));
    CHECK(s.K(0, 0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));
  }
  SUBCASE("B = 0 reduces to a Lyapunov equation") {
    Eigen::MatrixXd A = Eigen::Vector2d(-1, -2).asDiagonal();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2, 1);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(1, 1);
    auto s = num::care_solve(A, B, Q, R);
    CHECK(s.P(0, 0) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(s.P(1, 1) == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(std::abs(s.P(0, 1)) < 1e-10);
    CHECK(s.K.norm() == doctest::Approx(0.0));
  }
  SUBCASE("random stabilizable systems satisfy the equation") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> gauss;
    for (int inst = 0; inst < 20; ++inst) {
      Eigen::MatrixXd A(4, 4), B(4, 2), C(4, 4);
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
          A(i, j) = gauss(rng);
          C(i, j) = gauss(rng);
        }
        for (int j = 0; j < 2; ++j) B(i, j) = gauss(rng);
      }
      Eigen::MatrixXd Q = C.transpose() * C + 0.1 * Eigen::MatrixXd::Identity(4, 4);
      Eigen::MatrixXd R = Eigen::MatrixXd::Identity(2, 2);
      auto s = num::care_solve(A, B, Q, R);
      CHECK(s.residual < 1e-8);
      Eigen::EigenSolver<Eigen::MatrixXd> es(A - B * s.K);
      CHECK(es.eigenvalues().real().maxCoeff() < 0.0);
    }
  }
  SUBCASE("unstabilizable pair rejected") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd B(2, 1);
    B << 1, 0;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(1, 1);
    CHECK_THROWS_AS(num::care_solve(A, B, Q, R), num::NumericsError);
  }
}

TEST_CASE("compact_svd") {
  SUBCASE("rank-1 outer product") {
    Eigen::VectorXd u(5), v(3);
    u << 1, -2, 0.5, 3, -1;
    v << 2, 0, -1;
    Eigen::MatrixXd M = u * v.transpose();
    auto svd = num::compact_svd(M);
    REQUIRE(svd.sigma.size() == 1);
    CHECK(svd.sigma(0) == doctest::Approx(u.norm() * v.norm()).epsilon(1e-12));
    CHECK((M - svd.U * svd.sigma.asDiagonal() * svd.V.transpose()).norm() < 1e-12);
  }
  SUBCASE("zero rows do not produce spurious singular values") {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(4, 3);
    M.row(0) << 1, 0, 0;
    M.row(2) << 0, 2, 0;
    auto svd = num::compact_svd(M);
    CHECK(svd.sigma.size() == 2);
    CHECK((svd.U.transpose() * svd.U - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    CHECK((svd.V.transpose() * svd.V - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
  }
  SUBCASE("all-zero matrix has empty factorization") {
    auto svd = num::compact_svd(Eigen::MatrixXd::Zero(3, 2));
    CHECK(svd.sigma.size() == 0);
  }
  SUBCASE("projected quadratic form keeps the nonzero spectrum") {
    // With W = U S Y' and L = Y S, the matrices W P W' and L' P L share
    // nonzero eigenvalues for any symmetric P.
    std::mt19937_64 rng(4242);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd W(20, 5), Praw(5, 5);
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 5; ++j) W(i, j) = gauss(rng);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) Praw(i, j) = gauss(rng);
    Eigen::MatrixXd P = Praw.transpose() * Praw;
    auto svd = num::compact_svd(W);
    Eigen::MatrixXd L = svd.V * svd.sigma.asDiagonal();
    Eigen::VectorXd e1 = num::sym_eig(W * P * W.transpose()).values;
    Eigen::VectorXd e2 = num::sym_eig(L.transpose() * P * L).values;
    // Strip (near-)zero eigenvalues of the big form, compare the rest.
    std::vector<double> big;
    for (int i = 0; i < e1.size(); ++i)
      if (std::abs(e1(i)) > 1e-9) big.push_back(e1(i));
    REQUIRE(big.size() == static_cast<size_t>(e2.size()));
    for (int i = 0; i < e2.size(); ++i)
      CHECK(big[i] == doctest::Approx(e2(i)).epsilon(1e-8));
  }
}
