#include <benchmark/benchmark.h>

#include "pq/nn.hpp"
#include "pq/optim.hpp"
#include "pq/rng.hpp"

namespace {

pq::nn::Tensor1D random_input(int length, std::uint64_t seed) {
  pq::Rng rng(seed);
  pq::nn::Tensor1D x = pq::nn::Tensor1D::zeros(1, length);
  for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
  return x;
}

void BM_NetworkForward(benchmark::State& state) {
  const char* names[] = {"cnn-1a", "cnn-1b", "cnn-1c", "cnn-1d"};
  const pq::nn::Network net =
      pq::nn::build_architecture(names[state.range(0)], 1000, 1);
  const pq::nn::Tensor1D x = random_input(1000, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pq::nn::network_forward(net, x));
  }
  state.SetLabel(names[state.range(0)]);
}
BENCHMARK(BM_NetworkForward)->DenseRange(0, 3);

void BM_NetworkForwardBackward(benchmark::State& state) {
  pq::nn::Network net = pq::nn::build_architecture("cnn-1c", 1000, 1);
  const pq::nn::Tensor1D x = random_input(1000, 2);
  for (auto _ : state) {
    net.zero_gradients();
    const pq::nn::ForwardTrace trace = pq::nn::network_forward_trace(net, x);
    benchmark::DoNotOptimize(pq::nn::network_backward(net, trace, 3));
  }
}
BENCHMARK(BM_NetworkForwardBackward);

void BM_NadamStep(benchmark::State& state) {
  pq::nn::Network net = pq::nn::build_architecture("cnn-1c", 1000, 1);
  pq::optim::Nadam opt(pq::optim::NadamConfig{}, net.parameter_count());
  std::vector<double> params = net.parameters();
  pq::Rng rng(3);
  std::vector<double> grads(params.size());
  for (double& g : grads) g = rng.uniform(-0.1, 0.1);
  for (auto _ : state) {
    opt.step(params, grads);
    benchmark::DoNotOptimize(params.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(params.size()));
}
BENCHMARK(BM_NadamStep);

}  // namespace

BENCHMARK_MAIN();
