// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "zst/bleu.hpp"
#include "zst/linalg.hpp"
#include "zst/model.hpp"
#include "zst/tensor.hpp"
#include "zst/training.hpp"

namespace {

zst::Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  zst::Tensor t({r, c});
  for (double& v : t.data()) v = u(rng);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(zst::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128)->Arg(256);

void BM_LstmCell(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  zst::LstmCellParams p{random_matrix(150, 4 * h, 3), random_matrix(h, 4 * h, 4), zst::Tensor({4 * h}, 0.0)};
  const auto x = random_matrix(1, 150, 5), hp = random_matrix(1, h, 6), cp = random_matrix(1, h, 7);
  const zst::Tensor xv({150}, x.storage()), hv({h}, hp.storage()), cv({h}, cp.storage());
  for (auto _ : state) benchmark::DoNotOptimize(zst::lstm_cell(xv, hv, cv, p));
}
BENCHMARK(BM_LstmCell)->Arg(64)->Arg(128);

void BM_BatchGradients(benchmark::State& state) {
  zst::ModelConfig mc;
  mc.vocab_size = 200;
  mc.embed_dim = 32;
  mc.hidden = static_cast<std::size_t>(state.range(0));
  mc.layers = 2;
  const auto params = zst::ModelParams::initialize(mc, 1);
  zst::Batch b;
  b.size = 8;
  b.source_len = 12;
  b.target_len = 12;
  std::mt19937_64 rng(9);
  for (std::size_t i = 0; i < 8 * 12; ++i) {
    b.source_ids.push_back(4 + static_cast<int>(rng() % 196));
    b.target_in.push_back(4 + static_cast<int>(rng() % 196));
    b.target_out.push_back(4 + static_cast<int>(rng() % 196));
    b.mask.push_back(1.0);
  }
  b.source_lengths.assign(8, 12);
  for (auto _ : state) benchmark::DoNotOptimize(zst::batch_gradients(params, b));
}
BENCHMARK(BM_BatchGradients)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SymEig(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto r = random_matrix(n, n, 10);
  zst::Tensor a({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = r(i, j) + r(j, i);
  for (auto _ : state) benchmark::DoNotOptimize(zst::sym_eig(a));
}
BENCHMARK(BM_SymEig)->Arg(50)->Arg(150)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_Bleu(benchmark::State& state) {
  std::mt19937_64 rng(11);
  std::vector<zst::Tokens> hyp, ref;
  for (int s = 0; s < state.range(0); ++s) {
    zst::Tokens h(20), g(22);
    for (auto& w : h) w = "w" + std::to_string(rng() % 50);
    for (auto& w : g) w = "w" + std::to_string(rng() % 50);
    hyp.push_back(h);
    ref.push_back(g);
  }
  for (auto _ : state) benchmark::DoNotOptimize(zst::bleu(hyp, ref));
}
BENCHMARK(BM_Bleu)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
