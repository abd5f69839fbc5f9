#include "m2rec/baselines.hpp"

#include <algorithm>
#include <numeric>

namespace m2rec {

namespace {

// Ranks indices by count descending, index ascending, keeping the top k.
std::vector<std::uint32_t> rank_by_count(const std::vector<std::int64_t>& counts,
                                         std::size_t k) {
  std::vector<std::uint32_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0u);
  std::size_t depth = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + depth, order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      if (counts[a] != counts[b]) return counts[a] > counts[b];
                      return a < b;
                    });
  order.resize(depth);
  return order;
}

}  // namespace

PopularityTable PopularityTable::from_corpus(const Corpus& corpus) {
  PopularityTable table;
  table.counts.assign(corpus.n(), 0);
  for (const auto& u : corpus.users)
    for (const auto& b : u.baskets)
      for (const auto& [idx, q] : b.items)
        if (idx < table.counts.size()) table.counts[idx] += q;
  return table;
}

PopularityTable PopularityTable::from_baskets(std::span<const Basket> baskets,
                                              std::uint32_t n) {
  PopularityTable table;
  table.counts.assign(n, 0);
  for (const auto& b : baskets)
    for (const auto& [idx, q] : b.items)
      if (idx < n) table.counts[idx] += q;
  return table;
}

std::vector<std::uint32_t> pop_topk(const PopularityTable& table, std::size_t k) {
  return rank_by_count(table.counts, k);
}

std::vector<std::uint32_t> poep_topk(std::span<const Basket> context, std::uint32_t n,
                                     std::size_t k) {
  bool any = false;
  std::vector<std::int64_t> counts(n, 0);
  for (const auto& b : context)
    for (const auto& [idx, q] : b.items)
      if (idx < n) {
        counts[idx] += q;
        any = true;
      }
  if (!any) return {};
  return rank_by_count(counts, k);
}

}  // namespace m2rec
