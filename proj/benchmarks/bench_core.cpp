#include <benchmark/benchmark.h>

#include "midseg/fft.hpp"
#include "midseg/metrics.hpp"
#include "midseg/rng.hpp"
#include "midseg/segnet.hpp"
#include "midseg/tpram.hpp"

using namespace midseg;

namespace {

Grid random_grid(int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    Grid g(h, w);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.uniform();
    return g;
}

MultiGrid random_image(int h, int w, std::uint64_t seed) {
    return MultiGrid(std::vector<Grid>{random_grid(h, w, seed)});
}

}  // namespace

static void BM_Fft2_64(benchmark::State& state) {
    const Grid g = random_grid(64, 64, 1);
    for (auto _ : state) {
        Spectrum s = fft2(g);
        benchmark::DoNotOptimize(s.amplitude.data());
    }
}
BENCHMARK(BM_Fft2_64);

static void BM_AmplitudeMixup_64(benchmark::State& state) {
    const Grid a = random_grid(64, 64, 1);
    const Grid b = random_grid(64, 64, 2);
    for (auto _ : state) {
        Grid out = amplitude_mixup_with_ratio(a, b, 0.5, 1, 1);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_AmplitudeMixup_64);

static void BM_SegnetForward_64(benchmark::State& state) {
    Rng rng(5);
    SegmenterParams params(1, 2);
    params.init_kaiming(rng);
    const MultiGrid img = random_image(64, 64, 3);
    ForwardTrace trace;
    for (auto _ : state) {
        ProbField p = forward_trace(params, img, trace);
        benchmark::DoNotOptimize(p.plane(0).data());
    }
}
BENCHMARK(BM_SegnetForward_64);

static void BM_SegnetForwardBackward_64(benchmark::State& state) {
    Rng rng(5);
    SegmenterParams params(1, 2);
    params.init_kaiming(rng);
    const MultiGrid img = random_image(64, 64, 3);
    MultiGrid dprob(2, 64, 64, 0.01);
    ForwardTrace trace;
    for (auto _ : state) {
        ProbField p = forward_trace(params, img, trace);
        benchmark::DoNotOptimize(p.plane(0).data());
        auto grads = backward(params, trace, dprob);
        benchmark::DoNotOptimize(grads.data());
    }
}
BENCHMARK(BM_SegnetForwardBackward_64);

static void BM_SurfaceDistances_64(benchmark::State& state) {
    Rng rng(9);
    BinaryMask a(64, 64), b(64, 64);
    for (int y = 20; y < 44; ++y)
        for (int x = 18; x < 40; ++x) a.set(y, x, true);
    for (int y = 24; y < 48; ++y)
        for (int x = 22; x < 46; ++x) b.set(y, x, true);
    for (auto _ : state) {
        SurfaceDistances sd = surface_distances(a, b);
        benchmark::DoNotOptimize(sd.hd95);
    }
}
BENCHMARK(BM_SurfaceDistances_64);

BENCHMARK_MAIN();
