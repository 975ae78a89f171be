#include <benchmark/benchmark.h>

#include "sketchout/corpus.hpp"
#include "sketchout/evaluation.hpp"
#include "sketchout/generator.hpp"
#include "sketchout/training.hpp"

using namespace sketchout;

namespace {

ArchitectureScale scale_arg(int64_t which) {
  return which == 0 ? ArchitectureScale::desk() : ArchitectureScale::full();
}

void BM_GeneratorForward(benchmark::State& state) {
  const auto scale = scale_arg(state.range(0));
  auto g = make_generator(scale, 1);
  const auto n = state.range(1);
  auto image = torch::rand({n, 3, scale.half_height, scale.half_width}) * 2 - 1;
  auto sketch = (torch::rand({n, 1, scale.half_height, scale.half_width}) > 0.8).to(torch::kFloat);
  torch::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(g->forward(image, sketch, sketch));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_GeneratorForward)->Args({0, 1})->Args({0, 8})->Args({1, 1})->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  auto cfg = TrainConfig::desk_scale();
  cfg.batch_size = state.range(0);
  auto detector = make_edge_detector(cfg.edge_detector);
  Trainer trainer(cfg, detector);
  auto [h, w] = cfg.source_size();
  auto corpus = synthetic_corpus(static_cast<size_t>(cfg.batch_size), 1, h, w);
  auto batch = make_training_batch(corpus, epoch_order(corpus.size(), 0, cfg.seed), 0,
                                   corpus.size(), 0, cfg, *detector);
  auto rng = make_rng(0, {});
  for (auto _ : state) benchmark::DoNotOptimize(trainer.train_step(batch, rng));
  state.SetItemsProcessed(state.iterations() * cfg.batch_size);
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_EdgeDetection(benchmark::State& state) {
  SobelEdgeDetector det;
  auto images = torch::rand({8, 3, state.range(0), 2 * state.range(0)}) * 2 - 1;
  torch::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(det.detect(images));
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_EdgeDetection)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_FrechetDistance(benchmark::State& state) {
  torch::manual_seed(0);
  const auto d = state.range(0);
  auto a = stats_from_features(to_eigen(torch::randn({4 * d, d}, torch::kDouble)));
  auto b = stats_from_features(to_eigen(torch::randn({4 * d, d}, torch::kDouble) + 0.1));
  for (auto _ : state) benchmark::DoNotOptimize(frechet_distance(a, b));
}
BENCHMARK(BM_FrechetDistance)->Arg(64)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_FeatureStats(benchmark::State& state) {
  auto corpus = synthetic_corpus(static_cast<size_t>(state.range(0)), 2, 64, 128);
  auto images = corpus.images();
  RandomProjectionExtractor ex;
  for (auto _ : state) benchmark::DoNotOptimize(compute_stats(images, ex));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FeatureStats)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
