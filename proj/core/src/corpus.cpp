#include "m2rec/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace m2rec {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

// Windows line endings show up when corpora cross machines; strip them.
void chomp(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool parse_int64(const std::string& s, std::int64_t& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && !s.empty();
}

struct ColumnMap {
  int user = -1, item = -1, timestamp = -1, basket = -1, quantity = -1;
  std::size_t width = 0;
};

}  // namespace

ParseResult parse_interactions(std::istream& in, ParseMode mode) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty input, expected a header row");
  chomp(line);

  // Delimiter detection: whichever of tab/comma actually splits the header.
  char delim = line.find('\t') != std::string::npos ? '\t' : ',';
  auto header = split_line(line, delim);

  ColumnMap cols;
  cols.width = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& name = header[i];
    if (name == "user_id") cols.user = static_cast<int>(i);
    else if (name == "item_id") cols.item = static_cast<int>(i);
    else if (name == "timestamp") cols.timestamp = static_cast<int>(i);
    else if (name == "basket_id" || name == "basket_key") cols.basket = static_cast<int>(i);
    else if (name == "quantity") cols.quantity = static_cast<int>(i);
  }
  if (cols.user < 0 || cols.item < 0 || cols.timestamp < 0)
    throw DataError("header must name user_id, item_id and timestamp columns");

  ParseResult result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    ++result.rows_read;

    auto reject = [&](const std::string& why) {
      if (mode == ParseMode::strict)
        throw DataError("line " + std::to_string(line_no) + ": " + why, line_no);
      ++result.rows_skipped;
      result.skip_reasons.push_back("line " + std::to_string(line_no) + ": " + why);
    };

    auto fields = split_line(line, delim);
    if (fields.size() != cols.width) {
      reject("expected " + std::to_string(cols.width) + " fields, got " +
             std::to_string(fields.size()));
      continue;
    }

    InteractionRecord rec;
    rec.user_id = fields[cols.user];
    rec.item_id = fields[cols.item];
    if (rec.user_id.empty() || rec.item_id.empty()) {
      reject("empty user_id or item_id");
      continue;
    }
    if (!parse_int64(fields[cols.timestamp], rec.timestamp) || rec.timestamp < 0) {
      reject("bad timestamp '" + fields[cols.timestamp] + "'");
      continue;
    }
    if (cols.basket >= 0 && !fields[cols.basket].empty())
      rec.basket_key = fields[cols.basket];
    if (cols.quantity >= 0) {
      std::int64_t q = 0;
      if (!parse_int64(fields[cols.quantity], q) || q <= 0) {
        reject("bad quantity '" + fields[cols.quantity] + "'");
        continue;
      }
      rec.quantity = static_cast<int>(q);
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

ParseResult parse_interactions_file(const std::string& path, ParseMode mode) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interaction file: " + path);
  return parse_interactions(in, mode);
}

int RawBasket::total_quantity() const {
  int total = 0;
  for (const auto& [id, q] : items) total += q;
  return total;
}

std::size_t RawCorpus::basket_count() const {
  std::size_t total = 0;
  for (const auto& u : users) total += u.baskets.size();
  return total;
}

std::size_t RawCorpus::distinct_item_count() const {
  std::unordered_set<std::string> seen;
  for (const auto& u : users)
    for (const auto& b : u.baskets)
      for (const auto& [id, q] : b.items) seen.insert(id);
  return seen.size();
}

std::int64_t RawCorpus::interaction_count() const {
  std::int64_t total = 0;
  for (const auto& u : users)
    for (const auto& b : u.baskets) total += b.total_quantity();
  return total;
}

RawCorpus assemble_baskets(const std::vector<InteractionRecord>& records) {
  // Group rows per user first, preserving first-appearance user order.
  std::unordered_map<std::string, std::size_t> user_slot;
  std::vector<std::string> user_order;
  std::vector<std::vector<const InteractionRecord*>> per_user;
  for (const auto& rec : records) {
    auto [it, inserted] = user_slot.try_emplace(rec.user_id, per_user.size());
    if (inserted) {
      user_order.push_back(rec.user_id);
      per_user.emplace_back();
    }
    per_user[it->second].push_back(&rec);
  }

  RawCorpus corpus;
  corpus.users.reserve(user_order.size());
  for (std::size_t u = 0; u < user_order.size(); ++u) {
    // Basket key: explicit basket id when present, otherwise the timestamp.
    // Keyed groups keep the file order of their first row for tie-breaking.
    struct Group {
      RawBasket basket;
      std::size_t first_row;
      std::unordered_map<std::string, std::size_t> item_slot;
    };
    std::unordered_map<std::string, std::size_t> group_slot;
    std::vector<Group> groups;
    std::size_t row_no = 0;
    for (const InteractionRecord* rec : per_user[u]) {
      std::string key = rec->basket_key ? ("k:" + *rec->basket_key)
                                        : ("t:" + std::to_string(rec->timestamp));
      auto [it, inserted] = group_slot.try_emplace(key, groups.size());
      if (inserted) {
        groups.emplace_back();
        groups.back().basket.timestamp = rec->timestamp;
        groups.back().first_row = row_no;
      }
      Group& g = groups[it->second];
      g.basket.timestamp = std::min(g.basket.timestamp, rec->timestamp);
      auto [slot, fresh] = g.item_slot.try_emplace(rec->item_id, g.basket.items.size());
      if (fresh) g.basket.items.emplace_back(rec->item_id, 0);
      g.basket.items[slot->second].second += rec->quantity;
      ++row_no;
    }

    std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
      if (a.basket.timestamp != b.basket.timestamp)
        return a.basket.timestamp < b.basket.timestamp;
      return a.first_row < b.first_row;
    });

    RawSequence seq;
    seq.user_id = user_order[u];
    seq.baskets.reserve(groups.size());
    for (auto& g : groups) seq.baskets.push_back(std::move(g.basket));
    corpus.users.push_back(std::move(seq));
  }
  return corpus;
}

RawCorpus filter_corpus(const RawCorpus& corpus, const FilterSpec& spec,
                        FilterReport* report) {
  FilterReport local;
  RawCorpus out;

  // Pass 1: users with too few interactions (multiplicity or distinct,
  // per spec.distinct_items).
  for (const auto& u : corpus.users) {
    std::int64_t total = 0;
    if (spec.distinct_items) {
      std::unordered_set<std::string> seen;
      for (const auto& b : u.baskets)
        for (const auto& [id, q] : b.items) seen.insert(id);
      total = static_cast<std::int64_t>(seen.size());
    } else {
      for (const auto& b : u.baskets) total += b.total_quantity();
    }
    if (total < spec.min_items_per_user) {
      ++local.users_dropped_by_interactions;
      continue;
    }
    out.users.push_back(u);
  }

  // Pass 2: items supported by too few distinct users.
  std::unordered_map<std::string, std::unordered_set<std::string>> item_users;
  for (const auto& u : out.users)
    for (const auto& b : u.baskets)
      for (const auto& [id, q] : b.items) item_users[id].insert(u.user_id);
  std::unordered_set<std::string> dropped_items;
  for (const auto& [id, users] : item_users)
    if (static_cast<int>(users.size()) < spec.min_users_per_item)
      dropped_items.insert(id);
  local.items_dropped = dropped_items.size();

  if (!dropped_items.empty()) {
    for (auto& u : out.users) {
      std::vector<RawBasket> kept;
      kept.reserve(u.baskets.size());
      for (auto& b : u.baskets) {
        std::erase_if(b.items, [&](const auto& entry) {
          return dropped_items.count(entry.first) > 0;
        });
        if (b.items.empty()) {
          ++local.baskets_emptied;
        } else {
          kept.push_back(std::move(b));
        }
      }
      u.baskets = std::move(kept);
    }
  }

  // Pass 3: users left with too few baskets.
  std::vector<RawSequence> survivors;
  survivors.reserve(out.users.size());
  for (auto& u : out.users) {
    if (static_cast<int>(u.baskets.size()) < spec.min_baskets_per_user) {
      ++local.users_dropped_by_baskets;
      continue;
    }
    survivors.push_back(std::move(u));
  }
  out.users = std::move(survivors);

  if (report) *report = local;
  return out;
}

}  // namespace m2rec
