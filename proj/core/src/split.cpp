#include "m2rec/split.hpp"

#include <algorithm>
#include <stdexcept>

namespace m2rec {

std::uint32_t Vocabulary::lookup(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? npos : it->second;
}

std::uint32_t Vocabulary::intern_train(const std::string& id) {
  auto it = index_.find(id);
  if (it != index_.end()) return it->second;
  auto idx = static_cast<std::uint32_t>(items_.size());
  items_.push_back(id);
  index_.emplace(id, idx);
  return idx;
}

std::uint32_t Vocabulary::intern_cold(const std::string& id) {
  auto it = index_.find(id);
  if (it != index_.end()) return it->second;
  auto idx = static_cast<std::uint32_t>(items_.size() + cold_.size());
  cold_.push_back(id);
  index_.emplace(id, idx);
  return idx;
}

const std::string& Vocabulary::id_of(std::uint32_t index) const {
  if (index < items_.size()) return items_[index];
  if (index < items_.size() + cold_.size()) return cold_[index - items_.size()];
  throw std::out_of_range("item index " + std::to_string(index) + " out of range");
}

bool Basket::contains(std::uint32_t index) const {
  auto it = std::lower_bound(items.begin(), items.end(), index,
                             [](const auto& entry, std::uint32_t v) { return entry.first < v; });
  return it != items.end() && it->first == index;
}

int Basket::size_with_multiplicity() const {
  int total = 0;
  for (const auto& [idx, q] : items) total += q;
  return total;
}

std::vector<std::uint32_t> unique_vocab_items(const Basket& basket, std::uint32_t n) {
  std::vector<std::uint32_t> out;
  out.reserve(basket.items.size());
  for (const auto& [idx, q] : basket.items)
    if (idx < n) out.push_back(idx);
  return out;
}

namespace {

Basket index_basket(const RawBasket& raw, Vocabulary& vocab, bool train_side) {
  Basket b;
  b.timestamp = raw.timestamp;
  b.items.reserve(raw.items.size());
  for (const auto& [id, q] : raw.items) {
    std::uint32_t idx = train_side ? vocab.intern_train(id) : vocab.lookup(id);
    if (idx == Vocabulary::npos) idx = vocab.intern_cold(id);
    b.items.emplace_back(idx, q);
  }
  std::sort(b.items.begin(), b.items.end());
  return b;
}

Corpus project(const SplitCorpus& split, std::vector<Basket> UserSplit::*member) {
  Corpus c;
  c.vocabulary = split.vocabulary;
  for (const auto& u : split.users) {
    const auto& baskets = u.*member;
    if (baskets.empty()) continue;
    c.users.push_back(BasketSequence{u.user_id, baskets});
  }
  return c;
}

}  // namespace

Corpus SplitCorpus::train_corpus() const { return project(*this, &UserSplit::train); }
Corpus SplitCorpus::validation_corpus() const { return project(*this, &UserSplit::validation); }
Corpus SplitCorpus::test_corpus() const { return project(*this, &UserSplit::test); }

SplitCorpus split_time(const RawCorpus& corpus, std::int64_t cutoff_train_end,
                       std::int64_t cutoff_valid_end) {
  if (cutoff_train_end >= cutoff_valid_end)
    throw std::invalid_argument("split_time: cutoff_train_end must be below cutoff_valid_end");

  auto vocab = std::make_shared<Vocabulary>();
  SplitCorpus split;
  split.users.reserve(corpus.users.size());

  // Two passes so that training baskets define the vocabulary before any
  // validation/test basket can claim a cold index.
  for (const auto& u : corpus.users) {
    UserSplit us;
    us.user_id = u.user_id;
    for (const auto& raw : u.baskets)
      if (raw.timestamp <= cutoff_train_end)
        us.train.push_back(index_basket(raw, *vocab, true));
    split.users.push_back(std::move(us));
  }
  for (std::size_t i = 0; i < corpus.users.size(); ++i) {
    const auto& u = corpus.users[i];
    UserSplit& us = split.users[i];
    for (const auto& raw : u.baskets) {
      if (raw.timestamp <= cutoff_train_end) continue;
      if (raw.timestamp <= cutoff_valid_end)
        us.validation.push_back(index_basket(raw, *vocab, false));
      else
        us.test.push_back(index_basket(raw, *vocab, false));
    }
  }

  // Users that ended up with no baskets at all carry no signal.
  std::erase_if(split.users, [](const UserSplit& u) {
    return u.train.empty() && u.validation.empty() && u.test.empty();
  });

  split.vocabulary = vocab;
  return split;
}

SplitCorpus split_order(const RawCorpus& corpus) {
  auto vocab = std::make_shared<Vocabulary>();
  SplitCorpus split;

  for (const auto& u : corpus.users) {
    if (u.baskets.size() < 4) continue;
    UserSplit us;
    us.user_id = u.user_id;
    for (std::size_t i = 0; i + 2 < u.baskets.size(); ++i)
      us.train.push_back(index_basket(u.baskets[i], *vocab, true));
    split.users.push_back(std::move(us));
  }
  // Validation and test baskets indexed after every user's training
  // baskets, mirroring the two-pass rule of the time split.
  std::size_t slot = 0;
  for (const auto& u : corpus.users) {
    if (u.baskets.size() < 4) continue;
    UserSplit& us = split.users[slot++];
    us.validation.push_back(index_basket(u.baskets[u.baskets.size() - 2], *vocab, false));
    us.test.push_back(index_basket(u.baskets[u.baskets.size() - 1], *vocab, false));
  }

  split.vocabulary = vocab;
  return split;
}

}  // namespace m2rec
