// Minibatch Adagrad training with early stopping on validation recall@5.
// Deterministic for a fixed seed: parameter init, epoch shuffles and batch
// reduction order all come from one seeded RNG stream and a fixed user
// ordering.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "m2rec/model.hpp"
#include "m2rec/split.hpp"

namespace m2rec {

struct TrainConfig {
  Hyperparams hp;
  // Final-test mode: validation baskets are folded into each user's
  // training sequence and no early stopping happens (there is nothing
  // held out to stop on). Pair it with epochs_override from a selection
  // run.
  bool include_validation = false;
  std::optional<int> epochs_override;
};

struct EpochRecord {
  int epoch = 0;             ///< 1-based
  double train_loss = 0.0;   ///< summed NLL + one regularizer term per step
  double val_recall5 = 0.0;  ///< 0 in final-test mode
  bool improved = false;
};

struct TrainResult {
  Params params;             ///< best-epoch parameters
  int best_epoch = 0;        ///< 0 if no epoch ran
  double best_val_recall5 = 0.0;
  int epochs_run = 0;
  std::size_t users_trained = 0;
  std::size_t users_skipped = 0;  ///< fewer than 2 baskets on the training side
  std::vector<EpochRecord> log;
};

// Progress callback, invoked once per epoch after its record is final.
using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains hp.variant on the split. Each user's training sequence is their
// train baskets (plus validation baskets in final-test mode); the last
// basket is the prediction target, everything before it the context.
// Validation recall@5 follows the first-next-basket protocol: context =
// the user's full training sequence, target = their first validation
// basket.
TrainResult train(const SplitCorpus& split, const TrainConfig& config,
                  const EpochCallback& on_epoch = nullptr);

// The per-epoch validation metric, exposed for tests.
double validation_recall5(const SplitCorpus& split, const Params& params,
                          const Hyperparams& hp);

}  // namespace m2rec
