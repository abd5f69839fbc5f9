#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "m2rec/analysis.hpp"
#include "m2rec/baselines.hpp"
#include "m2rec/corpus_io.hpp"
#include "m2rec/evaluate.hpp"
#include "m2rec/model_io.hpp"
#include "m2rec/synthetic.hpp"
#include "m2rec/train.hpp"

namespace m2rec::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

std::string RunConfig::effective_corpus_path() const {
  return corpus_path.empty() ? output_dir + "/corpus.json" : corpus_path;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------- config

json read_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    json doc;
    in >> doc;
    return doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
  }
}

ordered read_ordered_data(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  try {
    ordered doc;
    in >> doc;
    return doc;
  } catch (const json::parse_error& e) {
    throw DataError(path + " is not valid JSON: " + std::string(e.what()));
  }
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
}

// Applies one --set override of the form section.key=value. The value is
// parsed as JSON when it parses (numbers, booleans, arrays) and treated as
// a plain string otherwise.
void apply_override(json& doc, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like section.key=value, got: " + assignment);
  std::string path = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = path.find('.', start);
    std::string key =
        dot == std::string::npos ? path.substr(start) : path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("override path has an empty segment: " + assignment);
    if (dot == std::string::npos) {
      json parsed = json::parse(value, nullptr, false);
      if (parsed.is_discarded())
        (*node)[key] = value;
      else
        (*node)[key] = std::move(parsed);
      return;
    }
    node = &(*node)[key];
    if (!node->is_object()) *node = json::object();
    start = dot + 1;
  }
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) known = true;
    if (!known)
      throw ConfigError("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <typename T>
T get_field(const json& obj, const std::string& where, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: field '" + (where.empty() ? key : where + "." + key) +
                      "' has the wrong type");
  }
}

std::int64_t get_integer(const json& obj, const std::string& where, const char* key,
                         std::int64_t fallback, std::int64_t lo, std::int64_t hi) {
  if (!obj.contains(key)) return fallback;
  std::int64_t v = get_field<std::int64_t>(obj, where, key, fallback);
  if (v < lo || v > hi)
    throw ConfigError("config: field '" + where + "." + key + "' is out of range");
  return v;
}

RunConfig config_from_json(const json& doc) {
  check_keys(doc, "",
             {"dataset", "filter", "split", "model", "grid", "eval", "output_dir", "seed"});
  RunConfig cfg;
  cfg.output_dir = get_field<std::string>(doc, "", "output_dir", cfg.output_dir);
  cfg.hp.seed = static_cast<std::uint64_t>(get_integer(
      doc, "", "seed", static_cast<std::int64_t>(cfg.hp.seed), 0,
      std::numeric_limits<std::int64_t>::max()));

  if (doc.contains("dataset")) {
    const json& d = doc.at("dataset");
    check_keys(d, "dataset", {"interactions", "corpus", "parse_mode"});
    cfg.interactions_path = get_field<std::string>(d, "dataset", "interactions", "");
    cfg.corpus_path = get_field<std::string>(d, "dataset", "corpus", "");
    std::string mode = get_field<std::string>(d, "dataset", "parse_mode", "strict");
    if (mode == "strict")
      cfg.parse_mode = ParseMode::strict;
    else if (mode == "lenient")
      cfg.parse_mode = ParseMode::lenient;
    else
      throw ConfigError("config: dataset.parse_mode must be 'strict' or 'lenient'");
  }

  if (doc.contains("filter")) {
    const json& f = doc.at("filter");
    check_keys(f, "filter",
               {"min_items_per_user", "min_users_per_item", "min_baskets_per_user",
                "distinct_items"});
    cfg.filter.min_items_per_user =
        static_cast<int>(get_integer(f, "filter", "min_items_per_user", 0, 0, 1 << 30));
    cfg.filter.min_users_per_item =
        static_cast<int>(get_integer(f, "filter", "min_users_per_item", 0, 0, 1 << 30));
    cfg.filter.min_baskets_per_user =
        static_cast<int>(get_integer(f, "filter", "min_baskets_per_user", 0, 0, 1 << 30));
    cfg.filter.distinct_items = get_field<bool>(f, "filter", "distinct_items", false);
  }

  if (doc.contains("split")) {
    const json& s = doc.at("split");
    check_keys(s, "split", {"kind", "cutoff_train_end", "cutoff_valid_end"});
    cfg.split_kind = get_field<std::string>(s, "split", "kind", "time");
    if (cfg.split_kind != "time" && cfg.split_kind != "order")
      throw ConfigError("config: split.kind must be 'time' or 'order'");
    cfg.cutoff_train_end = get_field<std::int64_t>(s, "split", "cutoff_train_end", 0);
    cfg.cutoff_valid_end = get_field<std::int64_t>(s, "split", "cutoff_valid_end", 0);
  }

  if (doc.contains("model")) {
    const json& m = doc.at("model");
    check_keys(m, "model",
               {"variant", "d", "gamma", "lambda", "lr", "epochs", "batch_size", "patience"});
    if (m.contains("variant")) {
      try {
        cfg.hp.variant = variant_from_string(m.at("variant").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
      }
    }
    cfg.hp.d = static_cast<std::uint32_t>(
        get_integer(m, "model", "d", cfg.hp.d, 1, std::numeric_limits<std::uint32_t>::max()));
    cfg.hp.gamma = get_field<double>(m, "model", "gamma", cfg.hp.gamma);
    cfg.hp.lambda = get_field<double>(m, "model", "lambda", cfg.hp.lambda);
    cfg.hp.lr = get_field<double>(m, "model", "lr", cfg.hp.lr);
    cfg.hp.epochs = static_cast<int>(get_integer(m, "model", "epochs", cfg.hp.epochs, 0, 1 << 30));
    cfg.hp.batch_size =
        static_cast<int>(get_integer(m, "model", "batch_size", cfg.hp.batch_size, 1, 1 << 30));
    cfg.hp.patience =
        static_cast<int>(get_integer(m, "model", "patience", cfg.hp.patience, 0, 1 << 30));
  }

  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    check_keys(g, "grid", {"d", "gamma", "lambda"});
    auto read_axis = [&](const char* key, auto& target, auto convert) {
      if (!g.contains(key)) return;
      const json& arr = g.at(key);
      if (!arr.is_array() || arr.empty())
        throw ConfigError("config: grid." + std::string(key) + " must be a non-empty array");
      for (const auto& x : arr) {
        try {
          target.push_back(convert(x));
        } catch (const json::exception&) {
          throw ConfigError("config: grid." + std::string(key) + " holds a non-numeric value");
        }
      }
    };
    read_axis("d", cfg.grid_d, [](const json& x) {
      auto v = x.get<std::int64_t>();
      if (v < 1 || v > std::numeric_limits<std::uint32_t>::max())
        throw ConfigError("config: grid.d value out of range");
      return static_cast<std::uint32_t>(v);
    });
    read_axis("gamma", cfg.grid_gamma, [](const json& x) { return x.get<double>(); });
    read_axis("lambda", cfg.grid_lambda, [](const json& x) { return x.get<double>(); });
  }

  if (doc.contains("eval")) {
    const json& e = doc.at("eval");
    check_keys(e, "eval", {"ks", "max_horizon", "exclude_cold", "include_validation"});
    if (e.contains("ks")) {
      const json& arr = e.at("ks");
      if (!arr.is_array() || arr.empty())
        throw ConfigError("config: eval.ks must be a non-empty array");
      cfg.ks.clear();
      for (const auto& x : arr) {
        std::int64_t k;
        try {
          k = x.get<std::int64_t>();
        } catch (const json::exception&) {
          throw ConfigError("config: eval.ks holds a non-integer value");
        }
        if (k < 1) throw ConfigError("config: eval.ks values must be >= 1");
        cfg.ks.push_back(static_cast<std::size_t>(k));
      }
    }
    cfg.max_horizon = static_cast<int>(get_integer(e, "eval", "max_horizon", cfg.max_horizon, 1, 3));
    cfg.exclude_cold = get_field<bool>(e, "eval", "exclude_cold", false);
    cfg.include_validation = get_field<bool>(e, "eval", "include_validation", true);
  }

  // Hyperparameter ranges, both the scalars and every grid value.
  auto validate_hp = [](Hyperparams hp, const std::string& label) {
    try {
      hp.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config: " + label + e.what());
    }
  };
  validate_hp(cfg.hp, "");
  for (std::uint32_t d : cfg.grid_d) {
    Hyperparams hp = cfg.hp;
    hp.d = d;
    validate_hp(hp, "grid.d: ");
  }
  for (double gamma : cfg.grid_gamma) {
    Hyperparams hp = cfg.hp;
    hp.gamma = gamma;
    validate_hp(hp, "grid.gamma: ");
  }
  for (double lambda : cfg.grid_lambda) {
    Hyperparams hp = cfg.hp;
    hp.lambda = lambda;
    validate_hp(hp, "grid.lambda: ");
  }
  return cfg;
}

ordered config_to_json(const RunConfig& cfg) {
  ordered doc;
  ordered dataset;
  dataset["interactions"] = cfg.interactions_path;
  dataset["corpus"] = cfg.effective_corpus_path();
  dataset["parse_mode"] = cfg.parse_mode == ParseMode::strict ? "strict" : "lenient";
  doc["dataset"] = std::move(dataset);

  ordered filter;
  filter["min_items_per_user"] = cfg.filter.min_items_per_user;
  filter["min_users_per_item"] = cfg.filter.min_users_per_item;
  filter["min_baskets_per_user"] = cfg.filter.min_baskets_per_user;
  filter["distinct_items"] = cfg.filter.distinct_items;
  doc["filter"] = std::move(filter);

  ordered split;
  split["kind"] = cfg.split_kind;
  if (cfg.split_kind == "time") {
    split["cutoff_train_end"] = cfg.cutoff_train_end;
    split["cutoff_valid_end"] = cfg.cutoff_valid_end;
  }
  doc["split"] = std::move(split);

  ordered model;
  model["variant"] = to_string(cfg.hp.variant);
  model["d"] = cfg.hp.d;
  model["gamma"] = cfg.hp.gamma;
  model["lambda"] = cfg.hp.lambda;
  model["lr"] = cfg.hp.lr;
  model["epochs"] = cfg.hp.epochs;
  model["batch_size"] = cfg.hp.batch_size;
  model["patience"] = cfg.hp.patience;
  doc["model"] = std::move(model);

  if (!cfg.grid_d.empty() || !cfg.grid_gamma.empty() || !cfg.grid_lambda.empty()) {
    ordered grid;
    if (!cfg.grid_d.empty()) grid["d"] = cfg.grid_d;
    if (!cfg.grid_gamma.empty()) grid["gamma"] = cfg.grid_gamma;
    if (!cfg.grid_lambda.empty()) grid["lambda"] = cfg.grid_lambda;
    doc["grid"] = std::move(grid);
  }

  ordered eval;
  eval["ks"] = cfg.ks;
  eval["max_horizon"] = cfg.max_horizon;
  eval["exclude_cold"] = cfg.exclude_cold;
  eval["include_validation"] = cfg.include_validation;
  doc["eval"] = std::move(eval);

  doc["output_dir"] = cfg.output_dir;
  doc["seed"] = cfg.hp.seed;
  return doc;
}

// The effective merged config is echoed next to the outputs so every run
// is reconstructible from its artifacts alone.
void echo_config(const RunConfig& cfg) {
  write_text(cfg.output_dir + "/config_used.json", config_to_json(cfg).dump(2) + "\n");
}

SplitCorpus load_corpus_checked(const std::string& path) {
  if (!fs::exists(path))
    throw ConfigError("corpus file not found (run prepare first?): " + path);
  return load_split_corpus(path);
}

// ---------------------------------------------------------------- scorers

std::unique_ptr<Scorer> make_scorer(const std::string& selector, const std::string& model_path,
                                    const SplitCorpus& split, bool include_validation) {
  const std::uint32_t n = split.n();
  if (selector == "pop") {
    PopularityTable table;
    table.counts.assign(n, 0);
    for (const auto& u : split.users) {
      auto add = [&](const std::vector<Basket>& baskets) {
        for (const auto& b : baskets)
          for (const auto& [idx, q] : b.items)
            if (idx < n) table.counts[idx] += q;
      };
      add(u.train);
      if (include_validation) add(u.validation);
    }
    return std::make_unique<PopScorer>(std::move(table));
  }
  if (selector == "poep") return std::make_unique<PoepScorer>(n);
  if (selector == "ugp-only") {
    Hyperparams hp;
    hp.variant = Variant::ugp_only;
    return std::make_unique<ModelScorer>(Params{}, hp, n);
  }
  if (selector == "model" || selector == "tpi-only") {
    if (model_path.empty())
      throw ConfigError("selector '" + selector + "' needs --model");
    if (!fs::exists(model_path)) throw ConfigError("model file not found: " + model_path);
    SavedModel saved = load_model(model_path);
    if (saved.vocabulary->train_items() != split.vocabulary->train_items())
      throw ConfigError("model vocabulary (" + std::to_string(saved.vocabulary->n()) +
                        " items) does not match the corpus vocabulary (" + std::to_string(n) +
                        " items)");
    Hyperparams hp = saved.hp;
    Params params = std::move(saved.params);
    if (selector == "tpi-only") {
      if (!has_transition(hp.variant))
        throw ConfigError("selector tpi-only: model variant '" +
                          std::string(to_string(hp.variant)) + "' has no transition network");
      // Force the gate open: score by the transition network alone.
      hp.variant = Variant::tpi_only;
      params.v.clear();
      params.c.clear();
      params.q.clear();
      params.a = 0.0;
    }
    return std::make_unique<ModelScorer>(std::move(params), hp, n);
  }
  throw ConfigError("unknown scorer selector '" + selector +
                    "' (expected model, pop, poep, ugp-only or tpi-only)");
}

// --------------------------------------------------------------- prepare

int cmd_prepare(const RunConfig& cfg, std::ostream& out) {
  if (cfg.interactions_path.empty())
    throw ConfigError("config: dataset.interactions is required for prepare");
  if (!fs::exists(cfg.interactions_path))
    throw ConfigError("input file not found: " + cfg.interactions_path);

  ParseResult parsed = parse_interactions_file(cfg.interactions_path, cfg.parse_mode);
  RawCorpus raw = assemble_baskets(parsed.records);
  FilterReport freport;
  RawCorpus filtered = filter_corpus(raw, cfg.filter, &freport);

  SplitCorpus split;
  if (cfg.split_kind == "time") {
    if (cfg.cutoff_train_end >= cfg.cutoff_valid_end)
      throw ConfigError("config: split.cutoff_train_end must be below split.cutoff_valid_end");
    split = split_time(filtered, cfg.cutoff_train_end, cfg.cutoff_valid_end);
  } else {
    split = split_order(filtered);
  }

  fs::create_directories(cfg.output_dir);
  const std::string corpus_path = cfg.effective_corpus_path();
  save_split_corpus(split, corpus_path);

  struct SplitStats {
    std::size_t users = 0, baskets = 0;
    std::int64_t interactions = 0;
  };
  auto stats_of = [&](std::vector<Basket> UserSplit::*member) {
    SplitStats st;
    for (const auto& u : split.users) {
      const auto& baskets = u.*member;
      if (baskets.empty()) continue;
      ++st.users;
      st.baskets += baskets.size();
      for (const auto& b : baskets) st.interactions += b.size_with_multiplicity();
    }
    return st;
  };
  SplitStats tr = stats_of(&UserSplit::train);
  SplitStats va = stats_of(&UserSplit::validation);
  SplitStats te = stats_of(&UserSplit::test);
  const std::size_t baskets = tr.baskets + va.baskets + te.baskets;
  const std::int64_t interactions = tr.interactions + va.interactions + te.interactions;
  const std::size_t users = split.users.size();

  ordered stats;
  stats["users"] = users;
  stats["items"] = split.n();
  stats["cold_items"] = split.vocabulary->cold_items().size();
  stats["baskets"] = baskets;
  stats["interactions"] = interactions;
  stats["avg_items_per_basket"] =
      baskets == 0 ? 0.0 : static_cast<double>(interactions) / static_cast<double>(baskets);
  stats["avg_baskets_per_user"] =
      users == 0 ? 0.0 : static_cast<double>(baskets) / static_cast<double>(users);
  ordered splits;
  auto split_block = [](const SplitStats& st) {
    ordered block;
    block["users"] = st.users;
    block["baskets"] = st.baskets;
    block["interactions"] = st.interactions;
    return block;
  };
  splits["train"] = split_block(tr);
  splits["validation"] = split_block(va);
  splits["test"] = split_block(te);
  stats["splits"] = std::move(splits);
  ordered filt;
  filt["users_dropped_by_interactions"] = freport.users_dropped_by_interactions;
  filt["items_dropped"] = freport.items_dropped;
  filt["baskets_emptied"] = freport.baskets_emptied;
  filt["users_dropped_by_baskets"] = freport.users_dropped_by_baskets;
  stats["filter"] = std::move(filt);
  ordered pr;
  pr["rows_read"] = parsed.rows_read;
  pr["rows_skipped"] = parsed.rows_skipped;
  stats["parse"] = std::move(pr);
  write_text(cfg.output_dir + "/statistics.json", stats.dump(2) + "\n");
  echo_config(cfg);

  out << "parsed " << parsed.rows_read << " rows (" << parsed.rows_skipped << " skipped)\n";
  out << "corpus: " << users << " users, " << split.n() << " items (+"
      << split.vocabulary->cold_items().size() << " cold), " << baskets << " baskets, "
      << interactions << " interactions\n";
  out << "splits: train " << tr.users << "/" << tr.baskets << ", validation " << va.users << "/"
      << va.baskets << ", test " << te.users << "/" << te.baskets << " (users/baskets)\n";
  out << "wrote " << corpus_path << ", " << cfg.output_dir << "/statistics.json\n";
  return kExitOk;
}

// ----------------------------------------------------------------- train

int cmd_train(const RunConfig& cfg, bool resume, std::ostream& out, std::ostream& err) {
  const std::string corpus_path = cfg.effective_corpus_path();
  SplitCorpus split = load_corpus_checked(corpus_path);

  const std::vector<std::uint32_t> ds =
      cfg.grid_d.empty() ? std::vector<std::uint32_t>{cfg.hp.d} : cfg.grid_d;
  const std::vector<double> gammas =
      cfg.grid_gamma.empty() ? std::vector<double>{cfg.hp.gamma} : cfg.grid_gamma;
  const std::vector<double> lambdas =
      cfg.grid_lambda.empty() ? std::vector<double>{cfg.hp.lambda} : cfg.grid_lambda;

  fs::create_directories(cfg.output_dir);
  const std::string ledger_path = cfg.output_dir + "/grid_ledger.json";

  std::map<std::string, ordered> cells;
  if (resume && fs::exists(ledger_path)) {
    ordered doc = read_ordered_data(ledger_path);
    if (doc.value("variant", std::string()) != to_string(cfg.hp.variant))
      throw ConfigError("resume: existing ledger at " + ledger_path +
                        " was built for a different variant");
    if (doc.contains("cells"))
      for (const auto& [key, cell] : doc.at("cells").items()) cells[key] = cell;
  }

  auto cell_key = [](std::uint32_t d, double gamma, double lambda) {
    return "d=" + ordered(d).dump() + ",gamma=" + ordered(gamma).dump() +
           ",lambda=" + ordered(lambda).dump();
  };
  auto write_ledger = [&](const std::string& winner_key) {
    ordered doc;
    doc["format_version"] = 1;
    doc["variant"] = to_string(cfg.hp.variant);
    doc["selection_metric"] = "validation_recall@5";
    ordered cell_obj = ordered::object();
    for (const auto& [key, cell] : cells) cell_obj[key] = cell;
    doc["cells"] = std::move(cell_obj);
    if (!winner_key.empty()) {
      ordered winner = cells.at(winner_key);
      winner["key"] = winner_key;
      doc["winner"] = std::move(winner);
    }
    write_text(ledger_path, doc.dump(2) + "\n");
  };

  for (std::uint32_t d : ds)
    for (double gamma : gammas)
      for (double lambda : lambdas) {
        const std::string key = cell_key(d, gamma, lambda);
        if (cells.count(key) != 0) {
          out << "cell " << key << ": reused from ledger\n";
          continue;
        }
        Hyperparams hp = cfg.hp;
        hp.d = d;
        hp.gamma = gamma;
        hp.lambda = lambda;
        auto start = std::chrono::steady_clock::now();
        TrainConfig tc;
        tc.hp = hp;
        TrainResult result = train(split, tc);
        err << "cell " << key << " trained in " << std::fixed << std::setprecision(2)
            << seconds_since(start) << " s\n"
            << std::defaultfloat;
        ordered cell;
        cell["d"] = d;
        cell["gamma"] = gamma;
        cell["lambda"] = lambda;
        cell["best_epoch"] = result.best_epoch;
        cell["best_val_recall5"] = result.best_val_recall5;
        cell["epochs_run"] = result.epochs_run;
        cell["users_trained"] = result.users_trained;
        cell["users_skipped"] = result.users_skipped;
        cells[key] = std::move(cell);
        write_ledger("");  // keep progress on disk between cells
        out << "cell " << key << ": val_recall@5 "
            << cells.at(key).at("best_val_recall5").dump() << " (best epoch "
            << result.best_epoch << ")\n";
      }

  // Winner: best validation recall@5, first cell in grid order on ties.
  std::string winner_key;
  double best_score = -1.0;
  Hyperparams hp_final = cfg.hp;
  int winner_epoch = 0;
  for (std::uint32_t d : ds)
    for (double gamma : gammas)
      for (double lambda : lambdas) {
        const ordered& cell = cells.at(cell_key(d, gamma, lambda));
        double score = cell.at("best_val_recall5").get<double>();
        if (score > best_score) {
          best_score = score;
          winner_key = cell_key(d, gamma, lambda);
          hp_final.d = d;
          hp_final.gamma = gamma;
          hp_final.lambda = lambda;
          winner_epoch = cell.at("best_epoch").get<int>();
        }
      }
  write_ledger(winner_key);
  out << "winner " << winner_key << " (val_recall@5 " << ordered(best_score).dump() << ")\n";

  // Retrain the winner on train+validation for the selection's epoch count.
  TrainConfig final_tc;
  final_tc.hp = hp_final;
  final_tc.include_validation = true;
  if (winner_epoch > 0) final_tc.epochs_override = winner_epoch;
  auto start = std::chrono::steady_clock::now();
  TrainResult final_result = train(split, final_tc);
  err << "final training took " << std::fixed << std::setprecision(2) << seconds_since(start)
      << " s\n"
      << std::defaultfloat;

  SavedModel saved;
  saved.hp = hp_final;
  saved.params = std::move(final_result.params);
  saved.vocabulary = split.vocabulary;
  saved.best_epoch = final_result.best_epoch;
  const std::string model_path = cfg.output_dir + "/model.json";
  save_model(saved, model_path);

  // Per-epoch log of the final run. Wall times stay on stderr so the file
  // is bit-identical across runs of the same config and seed.
  std::ofstream log(cfg.output_dir + "/train_log.jsonl");
  if (!log) throw DataError("cannot write file: " + cfg.output_dir + "/train_log.jsonl");
  for (const EpochRecord& r : final_result.log) {
    ordered line;
    line["epoch"] = r.epoch;
    line["train_loss"] = r.train_loss;
    line["val_recall5"] = r.val_recall5;
    line["improved"] = r.improved;
    log << line.dump() << '\n';
  }
  echo_config(cfg);

  out << "final model: " << model_path << " (" << final_result.epochs_run
      << " epochs on train+validation, " << final_result.users_trained << " users)\n";
  out << "wrote " << ledger_path << ", " << cfg.output_dir << "/train_log.jsonl\n";
  return kExitOk;
}

// -------------------------------------------------------------- evaluate

int cmd_evaluate(const RunConfig& cfg, const std::string& selector, const std::string& model_path,
                 const std::string& out_base, std::ostream& out) {
  SplitCorpus split = load_corpus_checked(cfg.effective_corpus_path());
  std::unique_ptr<Scorer> scorer =
      make_scorer(selector, model_path, split, cfg.include_validation);

  EvalOptions options;
  options.ks = cfg.ks;
  options.max_horizon = cfg.max_horizon;
  options.include_validation_in_context = cfg.include_validation;
  options.exclude_cold = cfg.exclude_cold;
  EvalReport report = evaluate_horizons(split, *scorer, options);

  fs::create_directories(cfg.output_dir);
  const std::string base =
      out_base.empty() ? cfg.output_dir + "/eval_" + selector : out_base;
  save_report_json(report, base + ".json");
  save_report_csv(report, base + ".csv");
  echo_config(cfg);

  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  out << "scorer " << report.scorer << " (selector " << selector << ")\n";
  for (const auto& hr : report.horizons) {
    out << "horizon " << hr.horizon << ": " << hr.users.size() << " users evaluated";
    if (hr.users.empty()) {
      out << " (no user has " << hr.horizon << " test baskets)\n";
      continue;
    }
    out << '\n' << std::fixed << std::setprecision(4);
    for (std::size_t ki = 0; ki < report.ks.size(); ++ki)
      out << "  k=" << report.ks[ki] << "  recall " << hr.mean_recall[ki] << "  precision "
          << hr.mean_precision[ki] << "  ndcg " << hr.mean_ndcg[ki] << '\n';
    out.flags(old_flags);
    out.precision(old_precision);
  }
  out << "wrote " << base << ".json, " << base << ".csv\n";
  return kExitOk;
}

// --------------------------------------------------------------- compare

int cmd_compare(const std::string& a_path, const std::string& b_path, double alpha,
                const std::string& out_path, std::ostream& out) {
  if (!fs::exists(a_path)) throw ConfigError("report file not found: " + a_path);
  if (!fs::exists(b_path)) throw ConfigError("report file not found: " + b_path);
  EvalReport a = load_report_json(a_path);
  EvalReport b = load_report_json(b_path);
  std::vector<MetricComparison> rows;
  try {
    rows = compare_reports(a, b, alpha);
  } catch (const std::invalid_argument& e) {
    // Incompatible report contents are a data problem, not a flag problem.
    throw DataError(e.what());
  }

  out << "A: " << a_path << " (scorer " << a.scorer << ")\n";
  out << "B: " << b_path << " (scorer " << b.scorer << ")\n";
  std::ostringstream table;
  table << std::left << std::setw(8) << "horizon" << std::setw(11) << "metric" << std::setw(5)
        << "k" << std::setw(11) << "mean_A" << std::setw(11) << "mean_B" << std::setw(11)
        << "improve%" << std::setw(11) << "t" << std::setw(11) << "p" << "sig\n";
  for (const auto& row : rows) {
    table << std::left << std::setw(8) << row.horizon << std::setw(11) << row.metric
          << std::setw(5) << row.k;
    table << std::fixed << std::setprecision(4) << std::setw(11) << row.mean_a << std::setw(11)
          << row.mean_b;
    if (std::isnan(row.improvement_pct))
      table << std::setw(11) << "n/a";
    else
      table << std::setprecision(2) << std::setw(11) << row.improvement_pct;
    table << std::setprecision(4) << std::setw(11) << row.t << std::setw(11) << row.p
          << std::defaultfloat;
    table << (row.significant ? "*" : "") << '\n';
  }
  out << table.str();

  if (!out_path.empty()) {
    ordered arr = ordered::array();
    for (const auto& row : rows) {
      ordered r;
      r["horizon"] = row.horizon;
      r["metric"] = row.metric;
      r["k"] = row.k;
      r["mean_a"] = row.mean_a;
      r["mean_b"] = row.mean_b;
      if (std::isnan(row.improvement_pct))
        r["improvement_pct"] = nullptr;
      else
        r["improvement_pct"] = row.improvement_pct;
      if (std::isinf(row.t))
        r["t"] = row.t > 0 ? "inf" : "-inf";
      else
        r["t"] = row.t;
      r["p"] = row.p;
      r["significant"] = row.significant;
      arr.push_back(std::move(r));
    }
    ordered doc;
    doc["report_a"] = a_path;
    doc["report_b"] = b_path;
    doc["alpha"] = alpha;
    doc["rows"] = std::move(arr);
    write_text(out_path, doc.dump(2) + "\n");
    out << "wrote " << out_path << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------- generate-synthetic

SyntheticSpec spec_from_json(const json& doc) {
  // A full manifest can be fed back in; only its spec block matters then.
  const json& s = doc.contains("spec") ? doc.at("spec") : doc;
  if (!doc.contains("spec"))
    check_keys(s, "",
               {"n_items", "n_users", "baskets_per_user", "basket_size_min", "basket_size_max",
                "w_transition", "w_popularity", "w_preference", "kernel", "kernel_shift",
                "kernel_noise", "zipf_exponent", "catalog_size", "catalog_assignment",
                "timestamp_start", "timestamp_step", "seed"});
  SyntheticSpec spec;
  spec.n_items = static_cast<std::uint32_t>(
      get_integer(s, "", "n_items", spec.n_items, 1, std::numeric_limits<std::uint32_t>::max()));
  spec.n_users = static_cast<std::uint32_t>(
      get_integer(s, "", "n_users", spec.n_users, 1, std::numeric_limits<std::uint32_t>::max()));
  spec.baskets_per_user =
      static_cast<int>(get_integer(s, "", "baskets_per_user", spec.baskets_per_user, 1, 1 << 30));
  spec.basket_size_min =
      static_cast<int>(get_integer(s, "", "basket_size_min", spec.basket_size_min, 1, 1 << 30));
  spec.basket_size_max =
      static_cast<int>(get_integer(s, "", "basket_size_max", spec.basket_size_max, 1, 1 << 30));
  spec.w_transition = get_field<double>(s, "", "w_transition", spec.w_transition);
  spec.w_popularity = get_field<double>(s, "", "w_popularity", spec.w_popularity);
  spec.w_preference = get_field<double>(s, "", "w_preference", spec.w_preference);
  if (s.contains("kernel")) {
    std::string kernel = get_field<std::string>(s, "", "kernel", "cyclic_shift");
    if (kernel == "cyclic_shift")
      spec.kernel = KernelType::cyclic_shift;
    else if (kernel == "noisy_cyclic")
      spec.kernel = KernelType::noisy_cyclic;
    else
      throw ConfigError("config: kernel must be 'cyclic_shift' or 'noisy_cyclic'");
  }
  spec.kernel_shift = static_cast<std::uint32_t>(get_integer(
      s, "", "kernel_shift", spec.kernel_shift, 0, std::numeric_limits<std::uint32_t>::max()));
  spec.kernel_noise = get_field<double>(s, "", "kernel_noise", spec.kernel_noise);
  spec.zipf_exponent = get_field<double>(s, "", "zipf_exponent", spec.zipf_exponent);
  spec.catalog_size = static_cast<std::uint32_t>(get_integer(
      s, "", "catalog_size", spec.catalog_size, 1, std::numeric_limits<std::uint32_t>::max()));
  if (s.contains("catalog_assignment")) {
    std::string assignment = get_field<std::string>(s, "", "catalog_assignment", "random");
    if (assignment == "disjoint")
      spec.catalog_assignment = CatalogAssignment::disjoint;
    else if (assignment == "random")
      spec.catalog_assignment = CatalogAssignment::random;
    else
      throw ConfigError("config: catalog_assignment must be 'disjoint' or 'random'");
  }
  spec.timestamp_start = get_field<std::int64_t>(s, "", "timestamp_start", spec.timestamp_start);
  spec.timestamp_step = get_field<std::int64_t>(s, "", "timestamp_step", spec.timestamp_step);
  spec.seed = static_cast<std::uint64_t>(get_integer(
      s, "", "seed", static_cast<std::int64_t>(spec.seed), 0,
      std::numeric_limits<std::int64_t>::max()));
  return spec;
}

int cmd_generate_synthetic(const std::string& spec_path,
                           const std::vector<std::string>& overrides, const std::string& csv_path,
                           const std::string& manifest_path, std::ostream& out,
                           std::ostream& err) {
  json doc = json::object();
  if (!spec_path.empty()) {
    if (!fs::exists(spec_path)) throw ConfigError("spec file not found: " + spec_path);
    doc = read_config_json(spec_path);
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  SyntheticSpec spec = spec_from_json(doc);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  auto start = std::chrono::steady_clock::now();
  SyntheticCorpus corpus = generate_synthetic(spec);
  write_synthetic(corpus, spec, csv_path, manifest_path);
  err << "generated in " << std::fixed << std::setprecision(2) << seconds_since(start) << " s\n"
      << std::defaultfloat;

  out << "generated " << corpus.records.size() << " interactions: " << spec.n_users
      << " users, " << spec.n_items << " items, " << spec.baskets_per_user
      << " baskets each\n";
  out << "wrote " << csv_path << ", " << manifest_path << '\n';
  return kExitOk;
}

// ------------------------------------------------------------- analyses

int cmd_analyze_transitions(const std::string& corpus_path, int lookback,
                            const std::vector<std::string>& cluster_ids,
                            const std::string& out_path, std::ostream& out) {
  SplitCorpus split = load_corpus_checked(corpus_path);
  Matrix T = transition_matrix(split, lookback);
  double total = 0.0;
  std::size_t nonzero = 0;
  for (double x : T.data()) {
    total += x;
    if (x != 0.0) ++nonzero;
  }

  ordered doc;
  doc["lookback"] = lookback;
  doc["items"] = split.n();
  doc["total_transitions"] = total;
  doc["nonzero_entries"] = nonzero;
  out << "transition matrix over " << split.n() << " items (lookback " << lookback << "): "
      << total << " transitions, " << nonzero << " nonzero entries\n";

  if (!cluster_ids.empty()) {
    std::vector<std::uint32_t> cluster;
    for (const std::string& id : cluster_ids) {
      std::uint32_t idx = split.vocabulary->lookup(id);
      if (idx == Vocabulary::npos || split.vocabulary->is_cold(idx))
        throw ConfigError("cluster item '" + id + "' is not in the training vocabulary");
      cluster.push_back(idx);
    }
    SimilarityReport sim = row_similarity(T, cluster);
    ordered c;
    c["items"] = cluster_ids;
    c["cluster_mean_cosine"] = sim.cluster_mean;
    c["global_mean_cosine"] = sim.global_mean;
    if (std::isnan(sim.ratio))
      c["ratio"] = nullptr;
    else
      c["ratio"] = sim.ratio;
    doc["cluster"] = std::move(c);
    out << "cluster mean cosine " << sim.cluster_mean << ", global mean " << sim.global_mean;
    if (!std::isnan(sim.ratio)) out << ", ratio " << sim.ratio;
    out << '\n';
  }

  if (!out_path.empty()) {
    write_text(out_path, doc.dump(2) + "\n");
    out << "wrote " << out_path << '\n';
  }
  return kExitOk;
}

int cmd_analyze_diversity(const std::string& corpus_path, const std::string& selector,
                          const std::string& model_path, std::size_t top_k,
                          bool include_validation, const std::string& out_path,
                          std::ostream& out) {
  SplitCorpus split = load_corpus_checked(corpus_path);
  std::unique_ptr<Scorer> scorer = make_scorer(selector, model_path, split, include_validation);
  DiversityReport report = diversity_report(split, *scorer, top_k, include_validation);

  ordered doc;
  doc["scorer"] = scorer->name();
  doc["top_k"] = top_k;
  doc["users"] = report.users;
  doc["total_slots"] = report.total_slots;
  doc["slot_share_pct"] = report.slot_share;
  doc["slot_count"] = report.slot_count;

  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  out << "top-" << top_k << " recommendations for " << report.users << " users ("
      << report.total_slots << " slots)\n"
      << std::fixed << std::setprecision(1);
  for (std::size_t decile = 0; decile < 10; ++decile)
    out << "  decile " << decile << " (top " << (decile + 1) * 10 << "%): "
        << report.slot_share[decile] << "%\n";
  out.flags(old_flags);
  out.precision(old_precision);

  if (!out_path.empty()) {
    write_text(out_path, doc.dump(2) + "\n");
    out << "wrote " << out_path << '\n';
  }
  return kExitOk;
}

int cmd_export_embeddings(const std::string& model_path, const std::string& out_path,
                          std::ostream& out) {
  if (!fs::exists(model_path)) throw ConfigError("model file not found: " + model_path);
  SavedModel saved = load_model(model_path);
  if (!has_transition(saved.hp.variant))
    throw ConfigError("model variant '" + std::string(to_string(saved.hp.variant)) +
                      "' owns no item embedding matrix (need gp2t or tpi_only)");
  export_embeddings(saved.params.W, *saved.vocabulary, out_path);
  out << "wrote " << out_path << " (" << saved.params.W.rows() << " items x "
      << saved.params.W.cols() << " dims)\n";
  return kExitOk;
}

}  // namespace

// ------------------------------------------------------------ dispatcher

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides) {
  json doc = read_config_json(path);
  for (const std::string& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"m2rec: mixed-model next-basket recommendation toolkit"};
  app.require_subcommand(1);

  std::string config_path, selector, model_path, out_base;
  std::string report_a, report_b, compare_out;
  std::string spec_path, csv_path = "synthetic.csv", manifest_path = "synthetic_manifest.json";
  std::string corpus_path, analysis_out, embeddings_out = "embeddings.csv";
  std::string output_dir_flag;
  std::vector<std::string> overrides, cluster_ids;
  bool resume = false, train_only = false;
  int lookback = 1;
  std::size_t top_k = 20;
  double alpha = 0.05;

  auto add_config_options = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration JSON")->required();
    sub->add_option("--set", overrides,
                    "override a config entry (section.key=value), repeatable");
    sub->add_option("--output-dir", output_dir_flag, "override the configured output directory");
  };

  CLI::App* prepare = app.add_subcommand("prepare", "parse, filter and split an interaction log");
  add_config_options(prepare);

  CLI::App* train_cmd =
      app.add_subcommand("train", "grid-search hyperparameters and train the final model");
  add_config_options(train_cmd);
  train_cmd->add_flag("--resume", resume, "reuse finished grid cells from an existing ledger");

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "score a model or baseline across test horizons");
  add_config_options(evaluate);
  evaluate->add_option("--scorer", selector, "model, pop, poep, ugp-only or tpi-only")
      ->required();
  evaluate->add_option("--model", model_path,
                       "model file for selectors model/tpi-only (default <output_dir>/model.json)");
  evaluate->add_option("--out", out_base, "report base path (writes <base>.json and <base>.csv)");

  CLI::App* compare =
      app.add_subcommand("compare", "paired significance comparison of two evaluation reports");
  compare->add_option("--a", report_a, "first report JSON")->required();
  compare->add_option("--b", report_b, "second report JSON")->required();
  compare->add_option("--alpha", alpha, "significance level (default 0.05)");
  compare->add_option("--out", compare_out, "write the comparison table as JSON");

  CLI::App* synth =
      app.add_subcommand("generate-synthetic", "sample a corpus with planted structure");
  synth->add_option("--spec", spec_path, "synthetic spec JSON (defaults apply when omitted)");
  synth->add_option("--set", overrides, "override a spec entry (key=value), repeatable");
  synth->add_option("--csv", csv_path, "output interaction CSV");
  synth->add_option("--manifest", manifest_path, "output ground-truth manifest JSON");

  CLI::App* transitions = app.add_subcommand(
      "analyze-transitions", "item-to-item transition counts and cosine structure");
  transitions->add_option("--corpus", corpus_path, "prepared corpus JSON")->required();
  transitions->add_option("--lookback", lookback, "how many baskets ahead to count (default 1)");
  transitions->add_option("--cluster", cluster_ids,
                          "item ids whose pairwise similarity is compared against the global mean");
  transitions->add_option("--out", analysis_out, "write the analysis as JSON");

  CLI::App* diversity = app.add_subcommand(
      "analyze-diversity", "popularity-decile distribution of recommended items");
  diversity->add_option("--corpus", corpus_path, "prepared corpus JSON")->required();
  diversity->add_option("--scorer", selector, "model, pop, poep, ugp-only or tpi-only")
      ->required();
  diversity->add_option("--model", model_path, "model file for selectors model/tpi-only");
  diversity->add_option("--top-k", top_k, "recommendation list length (default 20)");
  diversity->add_flag("--train-only", train_only,
                      "exclude validation baskets from contexts and frequencies");
  diversity->add_option("--out", analysis_out, "write the report as JSON");

  CLI::App* embeddings =
      app.add_subcommand("export-embeddings", "write encoder rows as an item-embedding CSV");
  embeddings->add_option("--model", model_path, "trained model file")->required();
  embeddings->add_option("--out", embeddings_out, "output CSV path (default embeddings.csv)");

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("m2rec");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  argv.reserve(argv_store.size());
  for (std::string& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (app.got_subcommand(prepare) || app.got_subcommand(train_cmd) ||
        app.got_subcommand(evaluate)) {
      RunConfig cfg = load_run_config(config_path, overrides);
      if (!output_dir_flag.empty()) cfg.output_dir = output_dir_flag;
      if (app.got_subcommand(prepare)) return cmd_prepare(cfg, out);
      if (app.got_subcommand(train_cmd)) return cmd_train(cfg, resume, out, err);
      std::string mp = model_path;
      if (mp.empty() && (selector == "model" || selector == "tpi-only"))
        mp = cfg.output_dir + "/model.json";
      return cmd_evaluate(cfg, selector, mp, out_base, out);
    }
    if (app.got_subcommand(compare))
      return cmd_compare(report_a, report_b, alpha, compare_out, out);
    if (app.got_subcommand(synth))
      return cmd_generate_synthetic(spec_path, overrides, csv_path, manifest_path, out, err);
    if (app.got_subcommand(transitions))
      return cmd_analyze_transitions(corpus_path, lookback, cluster_ids, analysis_out, out);
    if (app.got_subcommand(diversity))
      return cmd_analyze_diversity(corpus_path, selector, model_path, top_k, !train_only,
                                   analysis_out, out);
    if (app.got_subcommand(embeddings))
      return cmd_export_embeddings(model_path, embeddings_out, out);
    return kExitConfig;  // unreachable: require_subcommand(1)
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace m2rec::cli
