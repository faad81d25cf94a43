#include <benchmark/benchmark.h>

#include <torch/torch.h>

#include "segaug/dataset.hpp"
#include "segaug/evaluation.hpp"
#include "segaug/gan_training.hpp"
#include "segaug/label_ops.hpp"
#include "segaug/networks.hpp"

using namespace segaug;

namespace {

MultimodalCase phantom_case(std::size_t size) {
  PhantomConfig cfg;
  cfg.num_cases = 1;
  cfg.height = size;
  cfg.width = size;
  cfg.tumor_probability = 1.0;
  cfg.seed = 11;
  return generate_phantom_dataset(cfg).front();
}

void BM_SemanticLabelMap(benchmark::State& state) {
  const auto c = phantom_case(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_semantic_label_map(c));
}
BENCHMARK(BM_SemanticLabelMap)->Arg(64)->Arg(128)->Arg(240);

void BM_BoundaryExtraction(benchmark::State& state) {
  const auto c = phantom_case(static_cast<std::size_t>(state.range(0)));
  const auto mask = complete_tumor_mask(build_semantic_label_map(c));
  for (auto _ : state) benchmark::DoNotOptimize(extract_boundary(mask));
}
BENCHMARK(BM_BoundaryExtraction)->Arg(64)->Arg(128)->Arg(240);

void BM_ElasticDeform(benchmark::State& state) {
  const auto c = phantom_case(static_cast<std::size_t>(state.range(0)));
  const auto labels = build_semantic_label_map(c);
  DeformParams p;
  for (auto _ : state) {
    ++p.seed;
    benchmark::DoNotOptimize(elastic_deform_labels(labels, p));
  }
}
BENCHMARK(BM_ElasticDeform)->Arg(64)->Arg(128)->Arg(240)->Unit(benchmark::kMillisecond);

void BM_CaseMetrics(benchmark::State& state) {
  const auto c = phantom_case(static_cast<std::size_t>(state.range(0)));
  DeformParams p;
  p.alpha = 50;
  const auto moved = elastic_deform_codes(c.labels, p);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_case("bench", moved, c.labels));
}
BENCHMARK(BM_CaseMetrics)->Arg(64)->Arg(240);

void BM_GeneratorForward(benchmark::State& state) {
  torch::NoGradGuard guard;
  const auto size = state.range(0);
  NetworkOptions opt;
  opt.width_divisor = static_cast<int>(state.range(1));
  GeneratorBundle g(opt);
  g->eval();
  const auto codes = torch::randint(0, static_cast<std::int64_t>(kNumSemanticCodes), {1, size, size}, torch::kUInt8);
  for (auto _ : state) benchmark::DoNotOptimize(g->forward(codes).final_image);
}
BENCHMARK(BM_GeneratorForward)->Args({64, 4})->Args({64, 8})->Args({128, 8})->Unit(benchmark::kMillisecond);

void BM_GanIteration(benchmark::State& state) {
  PhantomConfig pc;
  pc.num_cases = 16;
  pc.seed = 5;
  const auto cases = generate_phantom_dataset(pc);
  GanConfig cfg;
  cfg.network.width_divisor = static_cast<int>(state.range(0));
  cfg.optimizer.batch_size = 4;
  GanTrainer trainer(cases, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step());
}
BENCHMARK(BM_GanIteration)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->Iterations(5);

}  // namespace

BENCHMARK_MAIN();
