// Versioned JSON model files. Doubles are written as shortest round-trip
// decimals, so save -> load reproduces every parameter bit for bit.
#pragma once

#include <memory>
#include <string>

#include "m2rec/model.hpp"

namespace m2rec {

inline constexpr int kModelFormatVersion = 1;

struct SavedModel {
  Hyperparams hp;
  Params params;
  std::shared_ptr<const Vocabulary> vocabulary;
  int best_epoch = 0;
};

void save_model(const SavedModel& model, const std::string& path);

// Throws DataError naming the offending field on any structural problem
// (missing field, wrong type, shape mismatch, unknown version).
SavedModel load_model(const std::string& path);

}  // namespace m2rec
