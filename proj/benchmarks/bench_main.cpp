#include <benchmark/benchmark.h>

#include <random>

#include "adobo/control.hpp"
#include "adobo/experiment.hpp"
#include "adobo/gp.hpp"
#include "adobo/plants.hpp"

using namespace adobo;

namespace {

gp::GpModel random_gp(Eigen::Index dim, Eigen::Index n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  gp::KernelParams p;
  p.lengthscales = Vector::Constant(1, 0.4);
  p.noise_std = 1e-3;
  return gp::GpModel(p, Matrix::NullaryExpr(dim, n, [&] { return u(rng); }),
                     Vector::NullaryExpr(n, [&] { return u(rng); }));
}

void BM_GpPosteriorBatch(benchmark::State& state) {
  const auto model = random_gp(15, state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Matrix q = Matrix::NullaryExpr(15, 2500, [&] { return u(rng); });
  Vector mean, var;
  for (auto _ : state) {
    model.posterior_batch(q, mean, var);
    benchmark::DoNotOptimize(var.data());
  }
}
BENCHMARK(BM_GpPosteriorBatch)->Arg(50)->Arg(150)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_GpHyperparameterFit(benchmark::State& state) {
  const auto model = random_gp(15, state.range(0));
  gp::FitOptions opts;
  opts.restarts = 1;
  for (auto _ : state) {
    std::mt19937_64 rng(3);
    benchmark::DoNotOptimize(gp::fit_hyperparams(model, opts, rng).log_likelihood);
  }
}
BENCHMARK(BM_GpHyperparameterFit)->Arg(50)->Arg(150)->Unit(benchmark::kMillisecond);

void BM_LqrBackward(benchmark::State& state) {
  const auto c = default_config(plants::PlantKind::Dubins);
  const LinearModel m = plants::linearize(c.plant, c.cost.x_ref, c.cost.u_ref);
  for (auto _ : state) benchmark::DoNotOptimize(control::lqr_backward(m, c.cost, 30).gains.data());
}
BENCHMARK(BM_LqrBackward);

void BM_MpcSolve(benchmark::State& state) {
  const auto c = default_config(plants::PlantKind::CartPole);
  const LinearModel m = plants::linearize(c.plant, c.cost.x_ref, c.cost.u_ref);
  for (auto _ : state) {
    benchmark::DoNotOptimize(control::mpc_solve(m, c.cost, c.x0, 0, 30).objective);
  }
}
BENCHMARK(BM_MpcSolve)->Unit(benchmark::kMicrosecond);

void BM_ClosedLoopDubins(benchmark::State& state) {
  const auto c = default_config(plants::PlantKind::Dubins);
  const Vector theta =
      pack_model(plants::linearize(c.plant, c.cost.x_ref, c.cost.u_ref)).values;
  for (auto _ : state) benchmark::DoNotOptimize(closed_loop_evaluate(theta, c).cost);
}
BENCHMARK(BM_ClosedLoopDubins)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
