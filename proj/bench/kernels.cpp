#include <benchmark/benchmark.h>

#include <vector>

#include "fedspectra/fft.hpp"
#include "fedspectra/nn.hpp"
#include "fedspectra/rng.hpp"
#include "fedspectra/spectral.hpp"

using namespace fedspectra;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(shape_volume(shape));
    for (auto& x : v) x = rng.uniform(-1, 1);
    return Tensor(std::move(shape), std::move(v));
}

std::vector<ParameterSet> client_sets(int n) {
    const Network net({1, 32, 32}, 3, "conv:32:3,relu,pool,conv:64:3,relu,pool,flatten,dense:128,relu,dense", 1);
    std::vector<ParameterSet> out;
    for (int k = 0; k < n; ++k) {
        ParameterSet p = net.parameters();
        for (auto& e : p) e.tensor = random_tensor(e.tensor.shape(), 10 + k * 100 + e.tensor.size());
        out.push_back(std::move(p));
    }
    return out;
}

void BM_fft2d(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Tensor m = random_tensor({n, n}, 1);
    for (auto _ : state) benchmark::DoNotOptimize(fft2d(m));
}

void BM_fft2d_serial(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Tensor m = random_tensor({n, n}, 1);
    for (auto _ : state) benchmark::DoNotOptimize(fft2d_serial(m));
}

void BM_cfa_aggregate(benchmark::State& state) {
    const auto sets = client_sets(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(cfa_aggregate(sets, 0.3));
}

void BM_cfa_aggregate_serial(benchmark::State& state) {
    const auto sets = client_sets(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(cfa_aggregate_serial(sets, 0.3));
}

void BM_smallcnn_forward(benchmark::State& state) {
    Network net({1, 32, 32}, 3, "smallcnn", 1);
    const Tensor batch = random_tensor({20, 1, 32, 32}, 2);
    for (auto _ : state) benchmark::DoNotOptimize(net.logits(batch, true));
}

}  // namespace

BENCHMARK(BM_fft2d)->Arg(64)->Arg(100)->Arg(256);
BENCHMARK(BM_fft2d_serial)->Arg(64)->Arg(100)->Arg(256);
BENCHMARK(BM_cfa_aggregate)->Arg(4)->Arg(16);
BENCHMARK(BM_cfa_aggregate_serial)->Arg(4)->Arg(16);
BENCHMARK(BM_smallcnn_forward);

BENCHMARK_MAIN();
