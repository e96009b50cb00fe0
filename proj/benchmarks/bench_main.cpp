#include <benchmark/benchmark.h>

#include "tacos/envs.hpp"
#include "tacos/flow_model.hpp"
#include "tacos/mdp.hpp"
#include "tacos/sac.hpp"

namespace {

void BM_IntegrateFlow(benchmark::State& state) {
    auto sde = tacos::make_env("pendulum-up", {{"sigma_env", 0.1}});
    tacos::Vec x = sde.initial_state;
    tacos::Vec u = tacos::Vec::Constant(1, 1.0);
    tacos::RngStream rng(1, 0);
    for (auto _ : state) {
        auto fs = tacos::integrate_flow(sde, x, u, 1.0, 1e-3, rng);
        benchmark::DoNotOptimize(fs.x_next);
    }
}
BENCHMARK(BM_IntegrateFlow);

void BM_SacUpdate(benchmark::State& state) {
    auto sde = tacos::make_env("pendulum-up", {{"cost", 0.1}});
    tacos::SacConfig cfg;
    cfg.hidden = {static_cast<int>(state.range(0)), static_cast<int>(state.range(0))};
    cfg.batch = 128;
    cfg.warmup_interactions = 300;
    tacos::SacTrainer trainer(sde, tacos::Mode::cost, 0, 1e-3, cfg, 7);
    trainer.train(350); // fill the buffer
    for (auto _ : state) {
        auto losses = trainer.update_once();
        benchmark::DoNotOptimize(losses);
    }
}
BENCHMARK(BM_SacUpdate)->Arg(64)->Arg(256);

void BM_GpPosteriorBatch(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    tacos::GpRegressor gp(5);
    tacos::RngStream rng(3, 0);
    Eigen::MatrixXd X(n, 5);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < 5; ++d) X(i, d) = rng.normal();
        y[i] = std::sin(X.row(i).sum());
    }
    gp.fit(X, y);
    Eigen::MatrixXd Zq(5, 128);
    for (int i = 0; i < Zq.size(); ++i) Zq(i / 128, i % 128) = rng.normal();
    Eigen::VectorXd mean, sd;
    for (auto _ : state) {
        gp.posterior_batch(Zq, mean, sd);
        benchmark::DoNotOptimize(mean);
    }
}
BENCHMARK(BM_GpPosteriorBatch)->Arg(200)->Arg(600);

} // namespace

BENCHMARK_MAIN();
