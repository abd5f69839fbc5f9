#include "m2rec/corpus_io.hpp"

#include <fstream>

#include <json.hpp>

namespace m2rec {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

ordered baskets_to_json(const std::vector<Basket>& baskets) {
  ordered arr = ordered::array();
  for (const auto& b : baskets) {
    ordered items = ordered::array();
    for (const auto& [idx, q] : b.items) items.push_back(ordered::array({idx, q}));
    arr.push_back(ordered::array({b.timestamp, std::move(items)}));
  }
  return arr;
}

std::vector<Basket> baskets_from_json(const json& arr, std::uint32_t total_items,
                                      const std::string& where) {
  if (!arr.is_array()) throw DataError("corpus field '" + where + "' must be an array");
  std::vector<Basket> out;
  out.reserve(arr.size());
  for (const auto& entry : arr) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_integer())
      throw DataError("corpus field '" + where + "': each basket must be [timestamp, items]");
    Basket b;
    b.timestamp = entry[0].get<std::int64_t>();
    for (const auto& pair : entry[1]) {
      if (!pair.is_array() || pair.size() != 2)
        throw DataError("corpus field '" + where + "': item entries must be [index, multiplicity]");
      auto idx = pair[0].get<std::int64_t>();
      auto q = pair[1].get<std::int64_t>();
      if (idx < 0 || idx >= total_items)
        throw DataError("corpus field '" + where + "': item index " + std::to_string(idx) +
                        " outside vocabulary of size " + std::to_string(total_items));
      if (q <= 0)
        throw DataError("corpus field '" + where + "': non-positive multiplicity");
      b.items.emplace_back(static_cast<std::uint32_t>(idx), static_cast<int>(q));
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace

void save_split_corpus(const SplitCorpus& split, const std::string& path) {
  ordered doc;
  doc["format_version"] = kCorpusFormatVersion;
  doc["vocabulary"] = split.vocabulary->train_items();
  doc["cold_items"] = split.vocabulary->cold_items();
  ordered users = ordered::array();
  for (const auto& u : split.users) {
    ordered entry;
    entry["user_id"] = u.user_id;
    entry["train"] = baskets_to_json(u.train);
    entry["validation"] = baskets_to_json(u.validation);
    entry["test"] = baskets_to_json(u.test);
    users.push_back(std::move(entry));
  }
  doc["users"] = std::move(users);

  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path);
  out << doc.dump(2) << '\n';
}

SplitCorpus load_split_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw DataError("corpus file is not valid JSON: " + std::string(e.what()));
  }

  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer())
    throw DataError("corpus field 'format_version' missing or not an integer");
  if (doc["format_version"].get<int>() != kCorpusFormatVersion)
    throw DataError("corpus field 'format_version': unsupported version " +
                    doc["format_version"].dump());
  for (const char* field : {"vocabulary", "cold_items", "users"})
    if (!doc.contains(field))
      throw DataError(std::string("corpus field '") + field + "' missing");

  auto vocab = std::make_shared<Vocabulary>();
  for (const auto& id : doc["vocabulary"]) vocab->intern_train(id.get<std::string>());
  for (const auto& id : doc["cold_items"]) vocab->intern_cold(id.get<std::string>());

  SplitCorpus split;
  split.vocabulary = vocab;
  for (const auto& u : doc["users"]) {
    if (!u.contains("user_id"))
      throw DataError("corpus field 'users[].user_id' missing");
    UserSplit us;
    us.user_id = u["user_id"].get<std::string>();
    us.train = baskets_from_json(u.value("train", json::array()), vocab->total(),
                                 "users[].train");
    us.validation = baskets_from_json(u.value("validation", json::array()), vocab->total(),
                                      "users[].validation");
    us.test = baskets_from_json(u.value("test", json::array()), vocab->total(),
                                "users[].test");
    split.users.push_back(std::move(us));
  }
  return split;
}

}  // namespace m2rec
