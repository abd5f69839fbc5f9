// Post-hoc analyses: the empirical item-to-item transition matrix and its
// cosine structure, recommendation diversity across popularity deciles,
// and export of the learned encoder rows as item embeddings.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "m2rec/evaluate.hpp"
#include "m2rec/matrix.hpp"
#include "m2rec/split.hpp"

namespace m2rec {

// T[i][j] counts how often item i in one basket was followed by item j in
// a later basket of the same user, at most `lookback` steps ahead. Items
// count once per basket (no multiplicity). Built from train + validation
// sequences; cold items are ignored.
Matrix transition_matrix(const SplitCorpus& split, int lookback = 1);

struct SimilarityReport {
  double cluster_mean = 0.0;  ///< mean pairwise cosine within the cluster
  double global_mean = 0.0;   ///< mean pairwise cosine over all item pairs
  double ratio = 0.0;         ///< cluster_mean / global_mean
};

// Rows are compared by cosine; an all-zero row has similarity 0 to
// everything. The cluster must hold at least two distinct valid indices.
SimilarityReport row_similarity(const Matrix& transitions,
                                std::span<const std::uint32_t> cluster);

struct DiversityReport {
  std::array<double, 10> slot_share{};  ///< % of recommended slots per decile
  std::array<std::size_t, 10> slot_count{};
  std::size_t users = 0;
  std::size_t total_slots = 0;
};

// Ranks the vocabulary by global training-side frequency (ties toward the
// lower index), cuts it into 10 equal-count rank deciles (decile 0 = most
// popular) and reports which deciles the scorer's top-`top_k` lists draw
// from. Users follow the horizon-1 evaluation population.
DiversityReport diversity_report(const SplitCorpus& split, const Scorer& scorer,
                                 std::size_t top_k = 20,
                                 bool include_validation_in_context = false);

// Decile of a rank position among n items: floor(rank * 10 / n), capped
// at 9. Shared by the report and its tests.
std::size_t rank_decile(std::size_t rank, std::size_t n);

// Writes one CSV row per vocabulary item: id,dim_0,...,dim_{d-1}, taken
// from the rows of the encoder matrix W.
void export_embeddings(const Matrix& W, const Vocabulary& vocabulary,
                       const std::string& path);

}  // namespace m2rec
