// Train/validation/test splitting and the indexed corpus types the models
// consume. Item indices are assigned from the training split only; items
// that first appear later are "cold": they keep an index at or beyond n
// so metrics can count them, but they are never recommendable.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "m2rec/corpus.hpp"

namespace m2rec {

class Vocabulary {
 public:
  // Index of a training item, assigned in first-appearance order.
  // Returns the cold index (>= n) for known cold items, npos otherwise.
  static constexpr std::uint32_t npos = static_cast<std::uint32_t>(-1);

  std::uint32_t n() const { return static_cast<std::uint32_t>(items_.size()); }
  std::uint32_t total() const { return static_cast<std::uint32_t>(items_.size() + cold_.size()); }
  bool is_cold(std::uint32_t index) const { return index >= n() && index < total(); }

  std::uint32_t lookup(const std::string& id) const;
  std::uint32_t intern_train(const std::string& id);  ///< existing or fresh index < n
  std::uint32_t intern_cold(const std::string& id);   ///< existing or fresh index >= n
  const std::string& id_of(std::uint32_t index) const;

  const std::vector<std::string>& train_items() const { return items_; }
  const std::vector<std::string>& cold_items() const { return cold_; }

 private:
  std::vector<std::string> items_;
  std::vector<std::string> cold_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// An indexed basket: (item index, multiplicity) pairs sorted by index.
struct Basket {
  std::int64_t timestamp = 0;
  std::vector<std::pair<std::uint32_t, int>> items;

  bool contains(std::uint32_t index) const;
  int size_with_multiplicity() const;
};

// Distinct in-vocabulary item indices of a basket, ascending. Cold items
// (index >= n) are dropped.
std::vector<std::uint32_t> unique_vocab_items(const Basket& basket, std::uint32_t n);

struct BasketSequence {
  std::string user_id;
  std::vector<Basket> baskets;  ///< chronological
};

struct Corpus {
  std::shared_ptr<const Vocabulary> vocabulary;
  std::vector<BasketSequence> users;

  std::uint32_t n() const { return vocabulary->n(); }
  std::size_t m() const { return users.size(); }
};

// Per-user view across all three splits; this is what training and the
// rolling-horizon evaluation actually walk. Users appear here if they
// have at least one basket in any split.
struct UserSplit {
  std::string user_id;
  std::vector<Basket> train;
  std::vector<Basket> validation;
  std::vector<Basket> test;
};

struct SplitCorpus {
  std::shared_ptr<const Vocabulary> vocabulary;
  std::vector<UserSplit> users;

  std::uint32_t n() const { return vocabulary->n(); }

  // Single-split projections; users with no basket in that split are
  // omitted. Handy for stats and the global popularity table.
  Corpus train_corpus() const;
  Corpus validation_corpus() const;
  Corpus test_corpus() const;
};

// Assigns each basket by timestamp: t <= cutoff_train_end goes to train,
// t <= cutoff_valid_end to validation, the rest to test. Requires
// cutoff_train_end < cutoff_valid_end.
SplitCorpus split_time(const RawCorpus& corpus, std::int64_t cutoff_train_end,
                       std::int64_t cutoff_valid_end);

// Leave-last-out split: users with at least 4 baskets keep their last
// basket for test, second-to-last for validation, the rest for training.
// Users below 4 baskets are dropped entirely.
SplitCorpus split_order(const RawCorpus& corpus);

}  // namespace m2rec
