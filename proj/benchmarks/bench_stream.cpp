#include <benchmark/benchmark.h>

#include <vector>

#include "streamglm/baselines.hpp"
#include "streamglm/euipw.hpp"
#include "streamglm/inference.hpp"
#include "streamglm/simgen.hpp"
#include "streamglm/snapshot.hpp"
#include "streamglm/updater.hpp"

using namespace streamglm;

namespace {

std::vector<Batch> make_stream(Design design, int k, Index n_k) {
  std::vector<Batch> batches;
  batches.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    Rng rng = make_batch_rng(11, 0, j);
    batches.push_back(gen_design_batch(design, n_k, rng));
  }
  return batches;
}

}  // namespace

static void BM_IngestLinear(benchmark::State& state) {
  const Index n_k = state.range(0);
  const auto batches = make_stream(Design::linear_4d, 20, n_k);
  for (auto _ : state) {
    UipwState s = UipwState::initial(Family::gaussian_identity(), 4);
    for (const Batch& b : batches) s = ingest(s, b);
    benchmark::DoNotOptimize(s.beta_hat);
  }
  state.SetItemsProcessed(state.iterations() * 20 * n_k);
}
BENCHMARK(BM_IngestLinear)->Arg(200)->Arg(1000)->Arg(5000);

static void BM_IngestLogistic(benchmark::State& state) {
  const Index n_k = state.range(0);
  const auto batches = make_stream(Design::logistic_4d, 20, n_k);
  for (auto _ : state) {
    UipwState s = UipwState::initial(Family::bernoulli_logit(), 4);
    for (const Batch& b : batches) s = ingest(s, b);
    benchmark::DoNotOptimize(s.beta_hat);
  }
  state.SetItemsProcessed(state.iterations() * 20 * n_k);
}
BENCHMARK(BM_IngestLogistic)->Arg(200)->Arg(1000)->Arg(5000);

static void BM_IngestHetero(benchmark::State& state) {
  const Index n_k = state.range(0);
  const auto batches = make_stream(Design::hetero_logistic, 10, n_k);
  for (auto _ : state) {
    HeteroState s = HeteroState::initial(Family::bernoulli_logit(), 2, 2);
    for (const Batch& b : batches) s = ingest_hetero(s, b);
    benchmark::DoNotOptimize(s.beta_hat);
  }
  state.SetItemsProcessed(state.iterations() * 10 * n_k);
}
BENCHMARK(BM_IngestHetero)->Arg(250)->Arg(500);

static void BM_OracleVsStream_Oracle(benchmark::State& state) {
  const auto batches = make_stream(Design::logistic_4d, state.range(0), 500);
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle_fit(Family::bernoulli_logit(), batches));
  }
}
BENCHMARK(BM_OracleVsStream_Oracle)->Arg(20)->Arg(100);

static void BM_SigmaAccumulated(benchmark::State& state) {
  const auto batches = make_stream(Design::logistic_4d, 10, 1000);
  UipwState s = UipwState::initial(Family::bernoulli_logit(), 4);
  for (const Batch& b : batches) s = ingest(s, b);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sigma_hat(s, batches.back(), VarianceSource::accumulated));
  }
}
BENCHMARK(BM_SigmaAccumulated);

static void BM_SnapshotRoundTrip(benchmark::State& state) {
  const auto batches = make_stream(Design::logistic_4d, 5, 500);
  UipwState s = UipwState::initial(Family::bernoulli_logit(), 4);
  for (const Batch& b : batches) s = ingest(s, b);
  for (auto _ : state) {
    benchmark::DoNotOptimize(load_snapshot(save_snapshot(s)));
  }
}
BENCHMARK(BM_SnapshotRoundTrip);

BENCHMARK_MAIN();
