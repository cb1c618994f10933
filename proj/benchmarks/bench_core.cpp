#include <benchmark/benchmark.h>

#include "faithkit/attribution.hpp"
#include "faithkit/certify.hpp"
#include "faithkit/metrics.hpp"
#include "faithkit/model.hpp"
#include "faithkit/rng.hpp"

namespace {

using namespace faithkit;

ClassifierModel bench_model(int dim, int hidden) {
    Rng rng(7);
    auto fill = [&rng](Eigen::MatrixXd& m, double scale) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                m(r, c) = rng.uniform(-scale, scale);
    };
    ClassifierModel m;
    m.embedding.resize(64, dim);
    fill(m.embedding, 0.5);
    m.embedding.row(kPadId).setZero();
    m.w1.resize(hidden, dim);
    fill(m.w1, 0.3);
    m.b1 = Eigen::VectorXd::Zero(hidden);
    m.w2.resize(hidden, hidden);
    fill(m.w2, 0.3);
    m.b2 = Eigen::VectorXd::Zero(hidden);
    m.w3.resize(2, hidden);
    fill(m.w3, 0.3);
    m.b3 = Eigen::VectorXd::Zero(2);
    return m;
}

Eigen::MatrixXd bench_embeds(int n, int dim) {
    Rng rng(13);
    Eigen::MatrixXd e(n, dim);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < dim; ++c) e(r, c) = rng.uniform(-1.0, 1.0);
    return e;
}

void BM_Forward(benchmark::State& state) {
    const ClassifierModel m = bench_model(50, 64);
    const Eigen::MatrixXd e = bench_embeds(static_cast<int>(state.range(0)), 50);
    for (auto _ : state) benchmark::DoNotOptimize(forward(m, e).probs.sum());
}
BENCHMARK(BM_Forward)->Arg(10)->Arg(40);

void BM_GradEmbeddings(benchmark::State& state) {
    const ClassifierModel m = bench_model(50, 64);
    const Eigen::MatrixXd e = bench_embeds(static_cast<int>(state.range(0)), 50);
    for (auto _ : state) benchmark::DoNotOptimize(grad_embeddings(m, e, 0).sum());
}
BENCHMARK(BM_GradEmbeddings)->Arg(10)->Arg(40);

void BM_PgdDescend(benchmark::State& state) {
    const ClassifierModel m = bench_model(50, 64);
    const Eigen::MatrixXd e = bench_embeds(12, 50);
    const PgdConfig cfg = PgdConfig::with_epsilon(0.5, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(pgd_descend(m, e, cfg).sum());
}
BENCHMARK(BM_PgdDescend)->Arg(10)->Arg(50);

void BM_BackwardBounds(benchmark::State& state) {
    const ClassifierModel m = bench_model(50, 64);
    const Eigen::MatrixXd e = bench_embeds(12, 50);
    CertifyConfig cfg;
    cfg.delta = 0.1;
    for (auto _ : state)
        benchmark::DoNotOptimize(backward_bounds(m, e, cfg).lower_w.sum());
}
BENCHMARK(BM_BackwardBounds);

void BM_MaskedAttack(benchmark::State& state) {
    const ClassifierModel m = bench_model(50, 64);
    const Eigen::MatrixXd e = bench_embeds(12, 50);
    const std::vector<int> mask{0, 3, 7};
    for (auto _ : state)
        benchmark::DoNotOptimize(pgd_attack(m, e, mask, 2.0).success);
}
BENCHMARK(BM_MaskedAttack);

void BM_Lime(benchmark::State& state) {
    const ClassifierModel m = bench_model(50, 64);
    const Eigen::MatrixXd e = bench_embeds(12, 50);
    LimeConfig cfg;
    cfg.n_samples = static_cast<int>(state.range(0));
    for (auto _ : state) {
        Rng rng(5);
        benchmark::DoNotOptimize(attribute_lime(m, e, cfg, rng).scores.sum());
    }
}
BENCHMARK(BM_Lime)->Arg(100)->Arg(200);

} // namespace

BENCHMARK_MAIN();
