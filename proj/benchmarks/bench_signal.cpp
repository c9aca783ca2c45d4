#include <benchmark/benchmark.h>

#include "pq/dataset.hpp"
#include "pq/signal.hpp"

namespace {

const pq::SignalSpec kSpec{};

void BM_GenSag(benchmark::State& state) {
  pq::Rng rng(1);
  const pq::EventParams p = pq::sample_params(pq::EventClass::Sag, rng, kSpec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pq::gen_sag(kSpec, p));
  }
}
BENCHMARK(BM_GenSag);

void BM_GenHarmonics(benchmark::State& state) {
  pq::Rng rng(2);
  const pq::EventParams p = pq::sample_params(pq::EventClass::Harmonics, rng, kSpec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pq::gen_harmonics(kSpec, p));
  }
}
BENCHMARK(BM_GenHarmonics);

void BM_GenTransient(benchmark::State& state) {
  pq::Rng rng(3);
  const pq::EventParams p = pq::sample_params(pq::EventClass::Transient, rng, kSpec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pq::gen_transient(kSpec, p));
  }
}
BENCHMARK(BM_GenTransient);

void BM_BuildDataset(benchmark::State& state) {
  const std::size_t per_class = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pq::build_dataset(kSpec, per_class, 7));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(per_class) * 6);
}
BENCHMARK(BM_BuildDataset)->Arg(10)->Arg(100);

void BM_AddAwgn(benchmark::State& state) {
  pq::Rng rng(4);
  const pq::EventParams p = pq::sample_params(pq::EventClass::Flicker, rng, kSpec);
  const pq::Waveform w = pq::gen_flicker(kSpec, p);
  pq::Rng noise_rng(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pq::add_awgn(w, 80.0, noise_rng));
  }
}
BENCHMARK(BM_AddAwgn);

}  // namespace

BENCHMARK_MAIN();
