// Non-learned reference rankers: global popularity (POP) and per-user
// repeat-purchase frequency (POEP). Ties always break toward the lower
// item index, matching every other ranker in the toolkit.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "m2rec/split.hpp"

namespace m2rec {

// Interaction totals per vocabulary item, multiplicity included.
struct PopularityTable {
  std::vector<std::int64_t> counts;  ///< size n

  static PopularityTable from_corpus(const Corpus& corpus);
  static PopularityTable from_baskets(std::span<const Basket> baskets, std::uint32_t n);
};

// Top-k items by global popularity. Independent of the user.
std::vector<std::uint32_t> pop_topk(const PopularityTable& table, std::size_t k);

// Top-k items by the user's own interaction counts over the given context
// baskets. An empty context yields an empty list: this ranker has nothing
// to say about a user it has never seen buy anything.
std::vector<std::uint32_t> poep_topk(std::span<const Basket> context, std::uint32_t n,
                                     std::size_t k);

}  // namespace m2rec
