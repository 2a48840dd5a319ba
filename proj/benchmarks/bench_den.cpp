// Microbenchmarks for the hot paths: calibration, distribution embedding,
// the pooled head, and a full episode with gradients. Shapes mirror the
// defaults used by the trainer.

#include <benchmark/benchmark.h>

#include <vector>

#include "den/embedding.hpp"
#include "den/metrics.hpp"
#include "den/model.hpp"
#include "den/plf.hpp"
#include "den/rng.hpp"

namespace {

using namespace den;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (double& value : m.data) value = rng.uniform(-1.0, 2.0);
    return m;
}

std::vector<int> cycled_labels(std::size_t n, std::size_t num_classes) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % num_classes);
    return y;
}

void bm_fit_bank(benchmark::State& state) {
    Matrix X = random_matrix(256, 8, 1);
    for (auto _ : state) {
        PlfBank bank = fit_bank(X, 10);
        benchmark::DoNotOptimize(bank);
    }
}
BENCHMARK(bm_fit_bank);

void bm_bank_forward(benchmark::State& state) {
    Matrix X = random_matrix(256, 8, 2);
    PlfBank bank = fit_bank(X, 10);
    for (auto _ : state) {
        Matrix Z = bank_forward(bank, X);
        benchmark::DoNotOptimize(Z);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 256 * 8);
}
BENCHMARK(bm_bank_forward);

void bm_embed_conditional(benchmark::State& state) {
    DenseNet h = init_params({2, 16, 16}, 3);
    Matrix Z = random_matrix(128, 2, 4);
    std::vector<int> y = cycled_labels(128, 2);
    for (auto _ : state) {
        Vec s = embed_conditional(h, Z, y);
        benchmark::DoNotOptimize(s);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 128);
}
BENCHMARK(bm_embed_conditional);

void bm_deepsets_logit(benchmark::State& state) {
    ClassifierHead head;
    head.phi = init_params({35, 16, 16}, 5);
    head.psi = init_params({16, 16, 1}, 6);
    Rng rng(7);
    std::vector<Vec> inputs(64, Vec(35));
    for (Vec& input : inputs)
        for (double& value : input) value = rng.uniform(-1.0, 1.0);
    for (auto _ : state) {
        double logit = deepsets_logit(head, inputs);
        benchmark::DoNotOptimize(logit);
    }
}
BENCHMARK(bm_deepsets_logit);

void bm_episode_loss_and_grads(benchmark::State& state) {
    ModelConfig config;
    DenModel model = make_model(config, 8);
    Matrix support_X = random_matrix(64, 8, 9);
    Matrix query_X = random_matrix(64, 8, 10);
    std::vector<int> support_y = cycled_labels(64, 2);
    std::vector<int> query_y = cycled_labels(64, 2);
    attach_task_bank(model, support_X, "bench");
    EpisodeGrads grads = zero_episode_grads(model);
    for (auto _ : state) {
        double loss =
            episode_loss_and_grads(model, support_X, support_y, query_X, query_y, 2, grads);
        benchmark::DoNotOptimize(loss);
    }
}
BENCHMARK(bm_episode_loss_and_grads);

void bm_den_logits(benchmark::State& state) {
    ModelConfig config;
    DenModel model = make_model(config, 11);
    Matrix support_X = random_matrix(64, 8, 12);
    Matrix query_X = random_matrix(64, 8, 13);
    std::vector<int> support_y = cycled_labels(64, 2);
    attach_task_bank(model, support_X, "bench");
    for (auto _ : state) {
        Vec logits = den_logits(model, support_X, support_y, query_X);
        benchmark::DoNotOptimize(logits);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 64);
}
BENCHMARK(bm_den_logits);

void bm_auc(benchmark::State& state) {
    Rng rng(14);
    std::size_t n = 4096;
    Vec scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = rng.uniform(-1.0, 1.0);
        labels[i] = static_cast<int>(rng.index(2));
    }
    for (auto _ : state) {
        double value = auc(scores, labels);
        benchmark::DoNotOptimize(value);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(n));
}
BENCHMARK(bm_auc);

}  // namespace

BENCHMARK_MAIN();
