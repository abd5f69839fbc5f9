// Canonical on-disk corpus format: a single versioned JSON document holding
// the vocabulary and the per-user train/validation/test baskets. Writing is
// bit-exact across runs for the same input corpus.
#pragma once

#include <string>

#include "m2rec/split.hpp"

namespace m2rec {

inline constexpr int kCorpusFormatVersion = 1;

void save_split_corpus(const SplitCorpus& split, const std::string& path);

// Throws DataError naming the offending field on malformed or
// version-mismatched input.
SplitCorpus load_split_corpus(const std::string& path);

}  // namespace m2rec
