#include "m2rec/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "m2rec/metrics.hpp"

namespace m2rec {

namespace {

// One user's training example: context baskets and the unique-item target.
struct Example {
  std::vector<Basket> context;
  std::vector<std::uint32_t> target;
};

std::vector<Example> collect_examples(const SplitCorpus& split, bool include_validation,
                                      std::size_t& skipped) {
  std::vector<Example> examples;
  const std::uint32_t n = split.n();
  for (const auto& u : split.users) {
    std::vector<Basket> sequence = u.train;
    if (include_validation)
      sequence.insert(sequence.end(), u.validation.begin(), u.validation.end());
    if (sequence.size() < 2) {
      if (!sequence.empty()) ++skipped;
      continue;
    }
    Example ex;
    ex.target = unique_vocab_items(sequence.back(), n);
    sequence.pop_back();
    ex.context = std::move(sequence);
    if (ex.target.empty()) {
      // Target entirely cold cannot happen for train baskets, but a folded
      // validation basket can be all-cold; nothing to learn from it then.
      ++skipped;
      continue;
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

}  // namespace

double validation_recall5(const SplitCorpus& split, const Params& params,
                          const Hyperparams& hp) {
  const std::uint32_t n = split.n();
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& u : split.users) {
    if (u.validation.empty()) continue;
    const Basket& target = u.validation.front();
    TruthSet truth;
    for (const auto& [idx, q] : target.items) truth.insert(idx);
    if (truth.empty()) continue;
    UserState state = build_user_state(u.train, n, hp.gamma);
    RankedList ranked = predict_topk(params, hp, state, 5);
    total += recall_at_k(ranked.items, truth, 5);
    ++counted;
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

TrainResult train(const SplitCorpus& split, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  const Hyperparams& hp = config.hp;
  hp.validate();
  const std::uint32_t n = split.n();
  if (n == 0) throw std::invalid_argument("train: empty vocabulary");

  TrainResult result;
  std::vector<Example> examples = collect_examples(split, config.include_validation,
                                                   result.users_skipped);
  result.users_trained = examples.size();

  std::mt19937_64 rng(hp.seed);
  Params params = init_params(hp, n, rng);
  AdagradState opt = AdagradState::zeros_like(params);
  Gradients batch_grads = Gradients::zeros_like(params);

  // Per-example state depends only on hp.gamma; build once.
  std::vector<UserState> states;
  states.reserve(examples.size());
  for (const auto& ex : examples) states.push_back(build_user_state(ex.context, n, hp.gamma));

  const int total_epochs = config.epochs_override.value_or(hp.epochs);
  const bool early_stop = !config.include_validation;

  Params best_params = params;
  double best_val = -1.0;
  int stale = 0;

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= total_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    const auto batch = static_cast<std::size_t>(hp.batch_size);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::size_t end = std::min(start + batch, order.size());
      for (auto& x : batch_grads.W.data()) x = 0.0;
      for (auto& x : batch_grads.A.data()) x = 0.0;
      std::fill(batch_grads.b.begin(), batch_grads.b.end(), 0.0);
      std::fill(batch_grads.v.begin(), batch_grads.v.end(), 0.0);
      std::fill(batch_grads.c.begin(), batch_grads.c.end(), 0.0);
      std::fill(batch_grads.q.begin(), batch_grads.q.end(), 0.0);
      batch_grads.a = 0.0;

      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = examples[order[i]];
        const UserState& state = states[order[i]];
        ForwardTrace trace = forward(params, hp, state);
        epoch_loss += loss(trace, ex.target, 0.0, params);
        accumulate_data_gradients(params, hp, state, ex.target, batch_grads);
      }
      // One global L2 term per optimizer step, not one per user.
      batch_grads.add_l2(params, hp.lambda);
      epoch_loss += hp.lambda * params.squared_norm();
      adagrad_step(params, batch_grads, opt, hp.lr);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss;
    if (early_stop) {
      record.val_recall5 = validation_recall5(split, params, hp);
      if (record.val_recall5 > best_val) {
        best_val = record.val_recall5;
        best_params = params;
        result.best_epoch = epoch;
        record.improved = true;
        stale = 0;
      } else {
        ++stale;
      }
    } else {
      best_params = params;
      result.best_epoch = epoch;
    }
    result.epochs_run = epoch;
    result.log.push_back(record);
    if (on_epoch) on_epoch(record);
    if (early_stop && stale >= hp.patience && hp.patience > 0) break;
  }

  result.params = std::move(best_params);
  result.best_val_recall5 = std::max(best_val, 0.0);
  return result;
}

}  // namespace m2rec
