#include <benchmark/benchmark.h>

#include <memory>

#include "reld/codec.hpp"
#include "reld/linop.hpp"
#include "reld/phantom.hpp"
#include "reld/prior.hpp"
#include "reld/prox.hpp"
#include "reld/solver.hpp"
#include "reld/toynet.hpp"

using namespace reld;

namespace {

Prior toy_prior(Shape s) {
  Prior p;
  p.codec = std::make_shared<BlockDctCodec>(s, 8, 4);
  ToyNetLayout lay;
  lay.token_size = p.codec->token_size();
  lay.cond_token_size = lay.token_size;
  p.predictor = std::make_shared<ToyNet>(lay, 1);
  return p;
}

LatentState random_state(std::size_t n) { return {standard_normal(n, 1), standard_normal(n, 2)}; }

void BM_ProxDeblurFft(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Shape s{n, n, 1};
  const ProxProblem pb{LinearOperator::periodic_conv(s, gaussian_psf(1.0, 7)), piecewise_smooth_phantom(s, 1),
                       piecewise_smooth_phantom(s, 2), 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(prox_deblur_fft(pb));
}
BENCHMARK(BM_ProxDeblurFft)->RangeMultiplier(2)->Range(32, 512)->Unit(benchmark::kMicrosecond);

void BM_ProxSrWoodbury(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int d = static_cast<int>(state.range(1));
  const Shape s{n, n, 1};
  const auto op = LinearOperator::compose(LinearOperator::decimate(s, d),
                                          LinearOperator::periodic_conv(s, gaussian_psf(1.0, 7)));
  const ProxProblem pb{op, Image(op.output_shape(), 0.5), piecewise_smooth_phantom(s, 2), 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(prox_sr_fft(pb, d));
}
BENCHMARK(BM_ProxSrWoodbury)->ArgsProduct({{64, 256}, {2, 4}})->Unit(benchmark::kMicrosecond);

void BM_ProxCg(benchmark::State& state) {
  const Shape s{64, 64, 1};
  const auto op = LinearOperator::compose(LinearOperator::decimate(s, 2),
                                          LinearOperator::periodic_conv(s, gaussian_psf(1.0, 7)));
  const ProxProblem pb{op, Image(op.output_shape(), 0.5), piecewise_smooth_phantom(s, 2), 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(prox_cg(pb, 1e-10, 1000));
}
BENCHMARK(BM_ProxCg)->Unit(benchmark::kMillisecond);

void BM_RunSp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Prior prior = toy_prior({n, n, 1});
  const LatentState v = random_state(prior.codec->latent_size());
  const int p = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(run_sp(v, p, *prior.predictor, prior.schedule));
}
BENCHMARK(BM_RunSp)->ArgsProduct({{64}, {1, 10, 50}})->Unit(benchmark::kMillisecond);

void BM_GenerativeMapVjp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Prior prior = toy_prior({n, n, 1});
  const GenerativeMap map(prior, 10);
  const LatentState v = random_state(prior.codec->latent_size());
  const Image w = piecewise_smooth_phantom({n, n, 1}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(map.vjp(v, w));
}
BENCHMARK(BM_GenerativeMapVjp)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SolveIteration(benchmark::State& state) {
  const Shape s{64, 64, 1};
  const Prior prior = toy_prior(s);
  const auto op = LinearOperator::periodic_conv(s, gaussian_psf(1.0, 7));
  const Image b = apply(op, piecewise_smooth_phantom(s, 4));
  SolverConfig cfg;
  cfg.k_max = 1;
  for (auto _ : state) benchmark::DoNotOptimize(reld_solve(b, op, prior, cfg));
}
BENCHMARK(BM_SolveIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
