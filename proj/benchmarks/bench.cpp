// Microbenchmarks for the hot paths: convolution, SLIC, pooling and forest
// prediction.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "roadseg/featext.hpp"
#include "roadseg/forest.hpp"
#include "roadseg/parallel.hpp"
#include "roadseg/superpix.hpp"

using namespace roadseg;

namespace {

Image random_image(int w, int h, int channels, std::uint32_t seed) {
    Image img;
    img.width = w;
    img.height = h;
    img.channels = channels;
    img.data.resize(static_cast<std::size_t>(w) * h * channels);
    std::mt19937 rng(seed);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(rng());
    return img;
}

KernelBank random_bank(int kernels, int size, std::uint32_t seed) {
    KernelBank bank;
    bank.num_kernels = kernels;
    bank.in_channels = 1;
    bank.kernel_h = size;
    bank.kernel_w = size;
    bank.stride = 1;
    bank.apply_relu = true;
    bank.weights.resize(static_cast<std::size_t>(kernels) * size * size);
    bank.biases.assign(kernels, 0.f);
    std::mt19937 rng(seed);
    std::normal_distribution<float> dist(0.f, 0.2f);
    for (auto& w : bank.weights) w = dist(rng);
    return bank;
}

ForestModel trained_forest(int kernels, std::uint64_t seed) {
    SampleSet set;
    set.dim = 2 * kernels;
    const std::size_t n = 2000;
    set.features.resize(n * set.dim);
    set.labels.resize(n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.f, 1.f);
    for (std::size_t i = 0; i < n; ++i) {
        bool road = (i & 1) != 0;
        for (int d = 0; d < set.dim; ++d)
            set.features[i * set.dim + d] = dist(rng) + (road ? 0.4f : -0.4f);
        set.labels[i] = road ? 1 : 0;
    }
    ForestConfig cfg;
    cfg.num_trees = 10;
    cfg.max_depth = 10;
    cfg.seed = seed;
    cfg.svm.seed = seed;
    return train_forest(set, cfg);
}

void BM_Convolve(benchmark::State& state) {
    set_num_threads(1);
    Image img = random_image(256, 256, 1, 1);
    KernelBank bank = random_bank(static_cast<int>(state.range(0)), 7, 2);
    for (auto _ : state) {
        FeatureStack stack = convolve(img, bank);
        benchmark::DoNotOptimize(stack.data.data());
    }
}
BENCHMARK(BM_Convolve)->Arg(8)->Arg(64);

void BM_Slic(benchmark::State& state) {
    Image img = random_image(256, 256, 3, 3);
    for (auto _ : state) {
        SuperpixelMap map = slic(img, static_cast<int>(state.range(0)));
        benchmark::DoNotOptimize(map.labels.data());
    }
}
BENCHMARK(BM_Slic)->Arg(400)->Arg(1200);

void BM_PoolFeatures(benchmark::State& state) {
    Image img = random_image(256, 256, 1, 4);
    KernelBank bank = random_bank(8, 7, 5);
    FeatureStack stack = extract_hypercolumns(img, bank);
    SuperpixelMap map = slic(img, 800);
    for (auto _ : state) {
        SuperpixelFeatureTable table = pool_features(stack, map);
        benchmark::DoNotOptimize(table.descriptors.data());
    }
}
BENCHMARK(BM_PoolFeatures);

void BM_ForestPredict(benchmark::State& state) {
    set_num_threads(1);
    static ForestModel model = trained_forest(8, 9);
    std::mt19937 rng(6);
    std::normal_distribution<float> dist(0.f, 1.f);
    const int regions = 1200;
    std::vector<float> descriptors(static_cast<std::size_t>(regions) * 16);
    for (auto& v : descriptors) v = dist(rng);
    for (auto _ : state) {
        double acc = 0.0;
        for (int r = 0; r < regions; ++r)
            acc += predict(model, descriptors.data() + static_cast<std::size_t>(r) * 16, 16);
        benchmark::DoNotOptimize(acc);
    }
}
BENCHMARK(BM_ForestPredict);

}  // namespace

BENCHMARK_MAIN();
