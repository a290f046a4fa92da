#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "tlnmem/cstln.hpp"
#include "tlnmem/data_io.hpp"
#include "tlnmem/dynamics.hpp"
#include "tlnmem/memory.hpp"
#include "tlnmem/numerics.hpp"
#include "tlnmem/roa.hpp"

namespace {

using namespace tlnmem;

Network reference_net() { return build_network({7, 0.9, 2.0, 1.0}); }

SessionConfig quick_session() {
  SessionConfig cfg;
  cfg.trigger.H = 5.0;
  cfg.trigger.tau_d = 1.0;
  return cfg;
}

// One pattern bound, a second one pending; the second learn is the part
// worth timing because it exercises the full gated transition.
struct LearnFixture {
  Network net = reference_net();
  PatternSet set = synthetic_patterns(3, 32, 7);
  SessionConfig cfg = quick_session();
  MemoryModel base = make_model(32, 7);

  LearnFixture() {
    cfg.integ.rng_seed = 99;
    learn_pattern(base, net, {set.patterns[0], "p1"}, cfg);
  }
};

LearnFixture& learn_fixture() {
  static LearnFixture f;
  return f;
}

// Two patterns stored, used by the inference and certification timings.
struct StoredFixture {
  Network net = reference_net();
  PatternSet set = synthetic_patterns(3, 32, 7);
  SessionConfig cfg = quick_session();
  MemoryModel model = make_model(32, 7);

  StoredFixture() {
    cfg.integ.rng_seed = 99;
    learn_pattern(model, net, {set.patterns[0], "p1"}, cfg);
    learn_pattern(model, net, {set.patterns[1], "p2"}, cfg);
  }
};

StoredFixture& stored_fixture() {
  static StoredFixture f;
  return f;
}

void BM_VectorField(benchmark::State& state) {
  Network net = reference_net();
  Eigen::VectorXd x = attractor_closed_form(net, 2).x;
  x.array() += 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(vector_field(net, 0.0, x, nullptr));
}
BENCHMARK(BM_VectorField);

void BM_Energy(benchmark::State& state) {
  Network net = reference_net();
  Eigen::VectorXd x = attractor_closed_form(net, 3).x;
  x.array() += 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(energy(net, x));
}
BENCHMARK(BM_Energy);

void BM_AttractorClosedForm(benchmark::State& state) {
  Network net = reference_net();
  for (auto _ : state) benchmark::DoNotOptimize(attractor_closed_form(net, 3));
}
BENCHMARK(BM_AttractorClosedForm);

void BM_Settle(benchmark::State& state) {
  Network net = reference_net();
  Eigen::VectorXd x0 = attractor_closed_form(net, 2).x;
  x0(0) += 0.3;
  x0(4) += 0.2;
  IntegratorConfig cfg{1e-3, 60.0, 1e-8, 100, 0};
  for (auto _ : state) benchmark::DoNotOptimize(settle(net, x0, cfg));
}
BENCHMARK(BM_Settle);

void BM_FiParameters(benchmark::State& state) {
  CstlnParams params{7, 0.9, 2.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(fi_parameters(params));
}
BENCHMARK(BM_FiParameters);

void BM_LpSolve(benchmark::State& state) {
  // A random bounded LP in 4 variables, fixed across iterations.
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  num::LpProblem prob;
  prob.c = Eigen::VectorXd::NullaryExpr(4, [&](int) { return g(rng); });
  prob.A = Eigen::MatrixXd::NullaryExpr(12, 4, [&](int, int) { return g(rng); });
  prob.b = prob.A.cwiseAbs().rowwise().sum();
  for (auto _ : state) benchmark::DoNotOptimize(num::lp_solve(prob));
}
BENCHMARK(BM_LpSolve);

void BM_SdpSolve(benchmark::State& state) {
  // Smallest eigenvalue-shift problem: minimize t with M - tI negative
  // semidefinite, the shape used for certificate re-verification.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(8, 8, [&](int, int) { return g(rng); });
  Eigen::MatrixXd M = 0.5 * (R + R.transpose());
  num::SdpProblem prob;
  prob.num_vars = 1;
  prob.c = Eigen::VectorXd::Ones(1);
  num::SdpBlock block;
  block.F0 = M;
  block.terms.emplace_back(0, -Eigen::MatrixXd::Identity(8, 8));
  prob.blocks.push_back(block);
  for (auto _ : state) benchmark::DoNotOptimize(num::sdp_solve(prob));
}
BENCHMARK(BM_SdpSolve);

void BM_CareSolve(benchmark::State& state) {
  Network net = reference_net();
  Eigen::MatrixXd A = -Eigen::MatrixXd::Identity(7, 7) + net.W;
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(7, 7);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(7, 7);
  Eigen::MatrixXd R = 0.05 * Eigen::MatrixXd::Identity(7, 7);
  for (auto _ : state) benchmark::DoNotOptimize(num::care_solve(A, B, Q, R));
}
BENCHMARK(BM_CareSolve);

void BM_LearnPattern(benchmark::State& state) {
  auto& f = learn_fixture();
  for (auto _ : state) {
    MemoryModel model = f.base;
    benchmark::DoNotOptimize(
        learn_pattern(model, f.net, {f.set.patterns[1], "p2"}, f.cfg));
  }
}
BENCHMARK(BM_LearnPattern)->Unit(benchmark::kMillisecond);

void BM_InferPattern(benchmark::State& state) {
  auto& f = stored_fixture();
  Pattern query{f.set.patterns[0], "q"};
  for (auto _ : state)
    benchmark::DoNotOptimize(infer_pattern(f.model, f.net, query, f.cfg));
}
BENCHMARK(BM_InferPattern)->Unit(benchmark::kMillisecond);

void BM_CertifyLp(benchmark::State& state) {
  auto& f = stored_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(certify_lp(f.net, f.model, 1));
}
BENCHMARK(BM_CertifyLp);

void BM_CertifySdp(benchmark::State& state) {
  auto& f = stored_fixture();
  ShiftedSystem sys = shift_about(f.net, f.model.registry[0].attractor);
  SdpSearchConfig cfg;
  cfg.grid_points = 6;
  for (auto _ : state)
    benchmark::DoNotOptimize(certify_sdp(sys, f.model, cfg));
}
BENCHMARK(BM_CertifySdp)->Unit(benchmark::kMillisecond);

void BM_ModelRoundTrip(benchmark::State& state) {
  auto& f = stored_fixture();
  auto path = std::filesystem::temp_directory_path() / "tlnmem_bench_model.tlnm";
  for (auto _ : state) {
    save_model(path.string(), f.model, f.net.params);
    benchmark::DoNotOptimize(load_model(path.string()));
  }
  std::filesystem::remove(path);
}
BENCHMARK(BM_ModelRoundTrip);

void BM_Crc32(benchmark::State& state) {
  std::vector<std::uint8_t> buf(1 << 20);
  std::mt19937_64 rng(3);
  for (auto& b : buf) b = static_cast<std::uint8_t>(rng());
  for (auto _ : state) benchmark::DoNotOptimize(crc32(buf.data(), buf.size()));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(buf.size()));
}
BENCHMARK(BM_Crc32);

}  // namespace

BENCHMARK_MAIN();
