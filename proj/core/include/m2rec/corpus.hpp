// Raw interaction ingestion: CSV/TSV parsing, basket assembly and corpus
// filtering. Everything here works on external string identifiers; index
// assignment happens later, at split time (see split.hpp).
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace m2rec {

// A single row of an interaction log. basket_key groups rows into one
// shopping trip; rows without it fall back to (user, timestamp) grouping.
struct InteractionRecord {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;  ///< seconds since epoch, non-negative
  std::optional<std::string> basket_key;
  int quantity = 1;            ///< positive purchase multiplicity
};

enum class ParseMode { strict, lenient };

// Thrown by strict-mode parsing on the first malformed row and by loaders
// on unreadable input. `line` is 1-based, 0 when not tied to a line.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ParseResult {
  std::vector<InteractionRecord> records;
  std::size_t rows_read = 0;     ///< data rows seen (header excluded)
  std::size_t rows_skipped = 0;  ///< malformed rows dropped (lenient mode)
  std::vector<std::string> skip_reasons;  ///< one message per skipped row
};

// Parses a delimited interaction log. The delimiter (comma or tab) is
// detected from the header row, which must name user_id, item_id and
// timestamp; basket_id and quantity columns are optional. Strict mode
// throws DataError with the offending line number; lenient mode skips bad
// rows and tallies them.
ParseResult parse_interactions(std::istream& in, ParseMode mode = ParseMode::strict);
ParseResult parse_interactions_file(const std::string& path, ParseMode mode = ParseMode::strict);

// One assembled basket, still keyed by external ids. Items keep their
// first-occurrence order within the basket; multiplicity sums quantities.
struct RawBasket {
  std::int64_t timestamp = 0;
  std::vector<std::pair<std::string, int>> items;
  int total_quantity() const;
};

struct RawSequence {
  std::string user_id;
  std::vector<RawBasket> baskets;  ///< chronological, stable on ties
};

struct RawCorpus {
  std::vector<RawSequence> users;  ///< first-appearance order of user ids

  std::size_t user_count() const { return users.size(); }
  std::size_t basket_count() const;
  std::size_t distinct_item_count() const;
  std::int64_t interaction_count() const;  ///< multiplicity included
};

// Groups records into baskets. Rows sharing (user, basket_key) form one
// basket; rows without a key group by (user, timestamp). Basket timestamp
// is the minimum timestamp among its rows. Baskets are sorted by timestamp
// per user, ties kept in ingestion order, so re-running on the same bytes
// reproduces the same corpus.
RawCorpus assemble_baskets(const std::vector<InteractionRecord>& records);

struct FilterSpec {
  int min_items_per_user = 0;    ///< total interactions per user
  int min_users_per_item = 0;    ///< distinct users per item
  int min_baskets_per_user = 0;  ///< baskets per user
  bool distinct_items = false;   ///< count distinct items instead of multiplicity in step 1
};

struct FilterReport {
  std::size_t users_dropped_by_interactions = 0;
  std::size_t items_dropped = 0;
  std::size_t baskets_emptied = 0;
  std::size_t users_dropped_by_baskets = 0;
};

// Applies the three filtering passes in order, each exactly once (no
// fixpoint iteration): sparse users by interaction count, then sparse
// items by distinct-user count (emptied baskets removed), then users with
// too few baskets. "Fewer than k" is strict.
RawCorpus filter_corpus(const RawCorpus& corpus, const FilterSpec& spec,
                        FilterReport* report = nullptr);

}  // namespace m2rec
