// Microbenchmarks for the toolkit's hot paths: user-state construction,
// forward/backward passes, top-k ranking, the ranking metrics, and one
// training epoch over a small synthetic corpus.
#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <vector>

#include "m2rec/metrics.hpp"
#include "m2rec/model.hpp"
#include "m2rec/split.hpp"
#include "m2rec/synthetic.hpp"
#include "m2rec/train.hpp"

using namespace m2rec;

namespace {

constexpr std::uint32_t kItems = 1000;
constexpr Variant kVariants[] = {Variant::p2, Variant::gp2, Variant::gp2t, Variant::ugp_only,
                                 Variant::tpi_only};

std::vector<Basket> random_context(std::uint32_t n, int baskets, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> item(0, n - 1);
  std::uniform_int_distribution<int> size(1, 6);
  std::vector<Basket> context;
  for (int t = 0; t < baskets; ++t) {
    Basket b;
    b.timestamp = t;
    int s = size(rng);
    for (int i = 0; i < s; ++i) b.items.emplace_back(item(rng), 1);
    context.push_back(std::move(b));
  }
  return context;
}

Params rich_params(const Hyperparams& hp, std::uint32_t n, std::mt19937_64& rng) {
  Params params = init_params(hp, n, rng);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (double& x : params.b) x = u(rng);
  for (double& x : params.v) x = u(rng);
  for (double& x : params.c) x = u(rng);
  for (double& x : params.q) x = u(rng);
  if (hp.variant == Variant::p2) params.a = u(rng);
  return params;
}

void BM_BuildUserState(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<Basket> context = random_context(kItems, static_cast<int>(state.range(0)), rng);
  for (auto _ : state) {
    UserState user = build_user_state(context, kItems, 0.6);
    benchmark::DoNotOptimize(user);
  }
}
BENCHMARK(BM_BuildUserState)->Arg(10)->Arg(50)->Arg(200);

void BM_Forward(benchmark::State& state) {
  Hyperparams hp;
  hp.variant = kVariants[state.range(0)];
  hp.d = 32;
  std::mt19937_64 rng(2);
  Params params = rich_params(hp, kItems, rng);
  UserState user = build_user_state(random_context(kItems, 20, rng), kItems, hp.gamma);
  for (auto _ : state) {
    ForwardTrace trace = forward(params, hp, user);
    benchmark::DoNotOptimize(trace);
  }
  state.SetLabel(to_string(hp.variant));
}
BENCHMARK(BM_Forward)->DenseRange(0, 4);

void BM_Backward(benchmark::State& state) {
  Hyperparams hp;
  hp.variant = kVariants[state.range(0)];
  hp.d = 32;
  std::mt19937_64 rng(3);
  Params params = rich_params(hp, kItems, rng);
  UserState user = build_user_state(random_context(kItems, 20, rng), kItems, hp.gamma);
  std::vector<std::uint32_t> target = {3, 17, 256, 999};
  for (auto _ : state) {
    Gradients grads = backward(params, hp, user, target);
    benchmark::DoNotOptimize(grads);
  }
  state.SetLabel(to_string(hp.variant));
}
BENCHMARK(BM_Backward)->DenseRange(0, 4);

void BM_PredictTopk(benchmark::State& state) {
  Hyperparams hp;
  hp.d = 32;
  std::mt19937_64 rng(4);
  Params params = rich_params(hp, kItems, rng);
  UserState user = build_user_state(random_context(kItems, 20, rng), kItems, hp.gamma);
  for (auto _ : state) {
    RankedList list = predict_topk(params, hp, user, 20);
    benchmark::DoNotOptimize(list);
  }
}
BENCHMARK(BM_PredictTopk);

void BM_RankingMetrics(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::vector<std::uint32_t> ranked(kItems);
  for (std::uint32_t i = 0; i < kItems; ++i) ranked[i] = i;
  std::shuffle(ranked.begin(), ranked.end(), rng);
  TruthSet truth = {4, 99, 512, 777, 901};
  for (auto _ : state) {
    double r = recall_at_k(ranked, truth, 20);
    double p = precision_at_k(ranked, truth, 20);
    double g = ndcg_at_k(ranked, truth, 20);
    benchmark::DoNotOptimize(r);
    benchmark::DoNotOptimize(p);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_RankingMetrics);

void BM_TrainEpoch(benchmark::State& state) {
  SyntheticSpec spec;
  spec.n_items = 200;
  spec.n_users = 200;
  spec.baskets_per_user = 10;
  spec.seed = 6;
  SplitCorpus split = split_order(assemble_baskets(generate_synthetic(spec).records));
  TrainConfig tc;
  tc.hp.variant = Variant::gp2t;
  tc.hp.d = 32;
  tc.hp.epochs = 1;
  tc.hp.patience = 0;
  for (auto _ : state) {
    TrainResult result = train(split, tc);
    benchmark::DoNotOptimize(result);
  }
  state.SetLabel("200 users x 10 baskets, 200 items, d=32");
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
