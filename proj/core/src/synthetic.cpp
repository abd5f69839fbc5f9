#include "m2rec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace m2rec {

using ordered = nlohmann::ordered_json;

void SyntheticSpec::validate() const {
  if (n_items == 0 || n_users == 0)
    throw std::invalid_argument("synthetic: need at least one item and one user");
  if (baskets_per_user < 1)
    throw std::invalid_argument("synthetic: baskets_per_user must be positive");
  if (basket_size_min < 1 || basket_size_max < basket_size_min)
    throw std::invalid_argument("synthetic: bad basket size range");
  if (w_transition < 0 || w_popularity < 0 || w_preference < 0 ||
      std::fabs(w_transition + w_popularity + w_preference - 1.0) > 1e-9)
    throw std::invalid_argument("synthetic: mixture weights must be non-negative and sum to 1");
  if (kernel == KernelType::noisy_cyclic && (kernel_noise < 0 || kernel_noise > 1))
    throw std::invalid_argument("synthetic: kernel_noise must lie in [0, 1]");
  if (zipf_exponent < 0) throw std::invalid_argument("synthetic: zipf_exponent must be >= 0");
  if (catalog_size == 0 || catalog_size > n_items)
    throw std::invalid_argument("synthetic: catalog_size must lie in [1, n_items]");
  if (catalog_assignment == CatalogAssignment::disjoint &&
      static_cast<std::uint64_t>(catalog_size) * n_users > n_items)
    throw std::invalid_argument(
        "synthetic: disjoint catalogs need n_items >= catalog_size * n_users");
  if (timestamp_start < 0 || timestamp_step <= 0)
    throw std::invalid_argument("synthetic: timestamps must be non-negative, step positive");
}

std::vector<std::pair<std::uint32_t, double>> kernel_row(const SyntheticSpec& spec,
                                                         std::uint32_t item) {
  const std::uint32_t succ = (item + spec.kernel_shift) % spec.n_items;
  if (spec.kernel == KernelType::cyclic_shift) return {{succ, 1.0}};
  // noisy_cyclic: mass 1-noise on the successor, noise spread uniformly.
  std::vector<std::pair<std::uint32_t, double>> row;
  row.reserve(spec.n_items);
  double uniform = spec.kernel_noise / spec.n_items;
  for (std::uint32_t j = 0; j < spec.n_items; ++j) {
    double p = uniform + (j == succ ? 1.0 - spec.kernel_noise : 0.0);
    if (p > 0.0) row.emplace_back(j, p);
  }
  return row;
}

namespace {

std::uint32_t sample_discrete(const std::vector<double>& cumulative, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng) * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  auto idx = static_cast<std::uint32_t>(it - cumulative.begin());
  return std::min<std::uint32_t>(idx, static_cast<std::uint32_t>(cumulative.size() - 1));
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  SyntheticCorpus corpus;

  // Zipf popularity over items in index order: weight (i+1)^-s.
  corpus.zipf.resize(spec.n_items);
  double zipf_total = 0.0;
  for (std::uint32_t i = 0; i < spec.n_items; ++i) {
    corpus.zipf[i] = std::pow(static_cast<double>(i) + 1.0, -spec.zipf_exponent);
    zipf_total += corpus.zipf[i];
  }
  for (double& x : corpus.zipf) x /= zipf_total;
  std::vector<double> zipf_cum(spec.n_items);
  std::partial_sum(corpus.zipf.begin(), corpus.zipf.end(), zipf_cum.begin());

  // Personal catalogs.
  corpus.catalogs.resize(spec.n_users);
  for (std::uint32_t u = 0; u < spec.n_users; ++u) {
    auto& catalog = corpus.catalogs[u];
    if (spec.catalog_assignment == CatalogAssignment::disjoint) {
      for (std::uint32_t j = 0; j < spec.catalog_size; ++j)
        catalog.push_back(u * spec.catalog_size + j);
    } else {
      std::unordered_set<std::uint32_t> picked;
      std::uniform_int_distribution<std::uint32_t> uniform(0, spec.n_items - 1);
      while (picked.size() < spec.catalog_size) picked.insert(uniform(rng));
      catalog.assign(picked.begin(), picked.end());
      std::sort(catalog.begin(), catalog.end());
    }
  }

  const double w_total = spec.w_transition + spec.w_popularity + spec.w_preference;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> basket_size(spec.basket_size_min, spec.basket_size_max);
  std::uniform_int_distribution<std::uint32_t> any_item(0, spec.n_items - 1);

  for (std::uint32_t u = 0; u < spec.n_users; ++u) {
    const auto& catalog = corpus.catalogs[u];
    std::uniform_int_distribution<std::size_t> catalog_pick(0, catalog.size() - 1);
    std::vector<std::uint32_t> previous;  // distinct items of the previous basket

    for (int t = 0; t < spec.baskets_per_user; ++t) {
      int size = basket_size(rng);
      std::vector<std::uint32_t> basket;
      basket.reserve(size);
      for (int slot = 0; slot < size; ++slot) {
        double pick = unit(rng) * w_total;
        std::uint32_t item;
        if (pick < spec.w_transition) {
          if (previous.empty()) {
            // No previous basket to transition from; fall back to the next
            // active behavior so the first basket is still well defined.
            if (spec.w_preference > 0)
              item = catalog[catalog_pick(rng)];
            else if (spec.w_popularity > 0)
              item = sample_discrete(zipf_cum, rng);
            else
              item = any_item(rng);
          } else {
            std::uniform_int_distribution<std::size_t> prev_pick(0, previous.size() - 1);
            std::uint32_t from = previous[prev_pick(rng)];
            auto row = kernel_row(spec, from);
            if (row.size() == 1) {
              item = row.front().first;
            } else {
              std::vector<double> cum(row.size());
              double run = 0.0;
              for (std::size_t i = 0; i < row.size(); ++i) {
                run += row[i].second;
                cum[i] = run;
              }
              item = row[sample_discrete(cum, rng)].first;
            }
          }
        } else if (pick < spec.w_transition + spec.w_popularity) {
          item = sample_discrete(zipf_cum, rng);
        } else {
          item = catalog[catalog_pick(rng)];
        }
        basket.push_back(item);
      }

      std::int64_t ts = spec.timestamp_start + static_cast<std::int64_t>(t) * spec.timestamp_step;
      for (std::uint32_t item : basket) {
        InteractionRecord rec;
        rec.user_id = "u" + std::to_string(u);
        rec.item_id = "i" + std::to_string(item);
        rec.timestamp = ts;
        corpus.records.push_back(std::move(rec));
      }
      previous.clear();
      for (std::uint32_t item : basket)
        if (std::find(previous.begin(), previous.end(), item) == previous.end())
          previous.push_back(item);
      std::sort(previous.begin(), previous.end());
    }
  }
  return corpus;
}

void write_synthetic(const SyntheticCorpus& corpus, const SyntheticSpec& spec,
                     const std::string& csv_path, const std::string& manifest_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("cannot write synthetic corpus: " + csv_path);
  csv << "user_id,item_id,timestamp\n";
  for (const auto& rec : corpus.records)
    csv << rec.user_id << ',' << rec.item_id << ',' << rec.timestamp << '\n';

  ordered doc;
  doc["format_version"] = 1;
  ordered sp;
  sp["n_items"] = spec.n_items;
  sp["n_users"] = spec.n_users;
  sp["baskets_per_user"] = spec.baskets_per_user;
  sp["basket_size_min"] = spec.basket_size_min;
  sp["basket_size_max"] = spec.basket_size_max;
  sp["w_transition"] = spec.w_transition;
  sp["w_popularity"] = spec.w_popularity;
  sp["w_preference"] = spec.w_preference;
  sp["kernel"] = spec.kernel == KernelType::cyclic_shift ? "cyclic_shift" : "noisy_cyclic";
  sp["kernel_shift"] = spec.kernel_shift;
  sp["kernel_noise"] = spec.kernel_noise;
  sp["zipf_exponent"] = spec.zipf_exponent;
  sp["catalog_size"] = spec.catalog_size;
  sp["catalog_assignment"] =
      spec.catalog_assignment == CatalogAssignment::disjoint ? "disjoint" : "random";
  sp["timestamp_start"] = spec.timestamp_start;
  sp["timestamp_step"] = spec.timestamp_step;
  sp["seed"] = spec.seed;
  doc["spec"] = std::move(sp);

  ordered catalogs = ordered::array();
  for (const auto& catalog : corpus.catalogs) {
    ordered c = ordered::array();
    for (std::uint32_t item : catalog) c.push_back(item);
    catalogs.push_back(std::move(c));
  }
  doc["catalogs"] = std::move(catalogs);

  ordered zipf = ordered::array();
  for (double x : corpus.zipf) zipf.push_back(x);
  doc["zipf"] = std::move(zipf);

  // Kernel rows in sparse [col, prob] form; enough to rebuild the exact
  // next-item distribution for any context.
  ordered kernel = ordered::array();
  for (std::uint32_t i = 0; i < spec.n_items; ++i) {
    ordered row = ordered::array();
    for (const auto& [j, p] : kernel_row(spec, i)) row.push_back(ordered::array({j, p}));
    kernel.push_back(std::move(row));
  }
  doc["kernel"] = std::move(kernel);

  std::ofstream manifest(manifest_path);
  if (!manifest) throw DataError("cannot write synthetic manifest: " + manifest_path);
  manifest << doc.dump() << '\n';
}

}  // namespace m2rec
