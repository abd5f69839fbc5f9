// Seeded synthetic corpus generator. Each basket slot draws its item from
// a mixture of three behaviors: follow a planted item-to-item transition
// kernel from the previous basket, follow global Zipf popularity, or
// resample from the user's small personal catalog. The generator also
// emits a ground-truth manifest holding every distribution involved, so a
// Bayes-optimal scorer can be computed for any generated corpus.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "m2rec/corpus.hpp"

namespace m2rec {

enum class KernelType {
  cyclic_shift,  ///< item i deterministically transitions to (i + shift) mod n
  noisy_cyclic,  ///< cyclic with probability 1-noise, uniform otherwise
};

enum class CatalogAssignment {
  disjoint,  ///< consecutive blocks; requires n >= catalog_size * users
  random,    ///< catalog_size distinct items drawn uniformly per user
};

struct SyntheticSpec {
  std::uint32_t n_items = 100;
  std::uint32_t n_users = 200;
  int baskets_per_user = 10;
  int basket_size_min = 1;
  int basket_size_max = 3;

  // Mixture weights over (transition, popularity, preference); they must
  // be non-negative and sum to 1.
  double w_transition = 0.3;
  double w_popularity = 0.3;
  double w_preference = 0.4;

  KernelType kernel = KernelType::cyclic_shift;
  std::uint32_t kernel_shift = 1;
  double kernel_noise = 0.1;  ///< noisy_cyclic only

  double zipf_exponent = 1.0;
  std::uint32_t catalog_size = 5;
  CatalogAssignment catalog_assignment = CatalogAssignment::random;

  std::int64_t timestamp_start = 86400;
  std::int64_t timestamp_step = 86400;  ///< one basket per "day"

  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticCorpus {
  std::vector<InteractionRecord> records;
  std::vector<std::vector<std::uint32_t>> catalogs;  ///< per user
  std::vector<double> zipf;                          ///< normalized popularity
};

// Item ids are "i<index>", user ids "u<index>". Basket t of every user
// lands at timestamp_start + t * timestamp_step, which makes time-based
// cutoffs trivial to place.
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

// Writes the interaction CSV and the manifest JSON. The manifest captures
// the spec, catalogs, Zipf weights and the kernel in sparse row form.
void write_synthetic(const SyntheticCorpus& corpus, const SyntheticSpec& spec,
                     const std::string& csv_path, const std::string& manifest_path);

// Kernel row as an explicit distribution over successor items.
std::vector<std::pair<std::uint32_t, double>> kernel_row(const SyntheticSpec& spec,
                                                         std::uint32_t item);

}  // namespace m2rec
