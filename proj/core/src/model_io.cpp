#include "m2rec/model_io.hpp"

#include <fstream>

#include <json.hpp>

#include "m2rec/corpus.hpp"

namespace m2rec {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

ordered flat_array(const std::vector<double>& data) {
  ordered arr = ordered::array();
  for (double x : data) arr.push_back(x);
  return arr;
}

std::vector<double> read_flat(const json& doc, const std::string& field, std::size_t expected) {
  if (!doc.contains(field)) throw DataError("model field '" + field + "' missing");
  const json& arr = doc[field];
  if (!arr.is_array()) throw DataError("model field '" + field + "' must be an array");
  if (arr.size() != expected)
    throw DataError("model field '" + field + "': expected " + std::to_string(expected) +
                    " values, found " + std::to_string(arr.size()));
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& x : arr) {
    if (!x.is_number()) throw DataError("model field '" + field + "' holds a non-number");
    out.push_back(x.get<double>());
  }
  return out;
}

double read_double(const json& doc, const std::string& field) {
  if (!doc.contains(field) || !doc[field].is_number())
    throw DataError("model field '" + field + "' missing or not a number");
  return doc[field].get<double>();
}

std::int64_t read_int(const json& doc, const std::string& field) {
  if (!doc.contains(field) || !doc[field].is_number_integer())
    throw DataError("model field '" + field + "' missing or not an integer");
  return doc[field].get<std::int64_t>();
}

}  // namespace

void save_model(const SavedModel& model, const std::string& path) {
  const Params& p = model.params;
  ordered doc;
  doc["format_version"] = kModelFormatVersion;
  doc["variant"] = to_string(model.hp.variant);
  ordered hp;
  hp["d"] = model.hp.d;
  hp["gamma"] = model.hp.gamma;
  hp["lambda"] = model.hp.lambda;
  hp["lr"] = model.hp.lr;
  hp["epochs"] = model.hp.epochs;
  hp["batch_size"] = model.hp.batch_size;
  hp["patience"] = model.hp.patience;
  hp["seed"] = model.hp.seed;
  doc["hyperparams"] = std::move(hp);
  doc["best_epoch"] = model.best_epoch;
  doc["vocabulary"] = model.vocabulary->train_items();
  doc["cold_items"] = model.vocabulary->cold_items();

  ordered params;
  // Row-major flat arrays with explicit shapes; empty blocks are omitted.
  if (!p.W.empty()) {
    params["W"] = flat_array(p.W.data());
    params["W_shape"] = ordered::array({p.W.rows(), p.W.cols()});
    params["A"] = flat_array(p.A.data());
    params["A_shape"] = ordered::array({p.A.rows(), p.A.cols()});
    params["b"] = flat_array(p.b);
  }
  if (!p.v.empty()) params["v"] = flat_array(p.v);
  if (!p.c.empty()) {
    params["c"] = flat_array(p.c);
    params["q"] = flat_array(p.q);
  }
  if (model.hp.variant == Variant::p2) params["a"] = p.a;
  doc["params"] = std::move(params);

  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  out << doc.dump(2) << '\n';
}

SavedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw DataError("model file is not valid JSON: " + std::string(e.what()));
  }

  if (read_int(doc, "format_version") != kModelFormatVersion)
    throw DataError("model field 'format_version': unsupported version " +
                    doc["format_version"].dump());
  if (!doc.contains("variant") || !doc["variant"].is_string())
    throw DataError("model field 'variant' missing or not a string");

  SavedModel model;
  model.hp.variant = variant_from_string(doc["variant"].get<std::string>());
  if (!doc.contains("hyperparams")) throw DataError("model field 'hyperparams' missing");
  const json& hp = doc["hyperparams"];
  model.hp.d = static_cast<std::uint32_t>(read_int(hp, "d"));
  model.hp.gamma = read_double(hp, "gamma");
  model.hp.lambda = read_double(hp, "lambda");
  model.hp.lr = read_double(hp, "lr");
  model.hp.epochs = static_cast<int>(read_int(hp, "epochs"));
  model.hp.batch_size = static_cast<int>(read_int(hp, "batch_size"));
  model.hp.patience = static_cast<int>(read_int(hp, "patience"));
  model.hp.seed = static_cast<std::uint64_t>(read_int(hp, "seed"));
  model.hp.validate();
  model.best_epoch = static_cast<int>(read_int(doc, "best_epoch"));

  if (!doc.contains("vocabulary") || !doc["vocabulary"].is_array())
    throw DataError("model field 'vocabulary' missing or not an array");
  auto vocab = std::make_shared<Vocabulary>();
  for (const auto& id : doc["vocabulary"]) vocab->intern_train(id.get<std::string>());
  if (doc.contains("cold_items"))
    for (const auto& id : doc["cold_items"]) vocab->intern_cold(id.get<std::string>());
  model.vocabulary = vocab;
  const std::uint32_t n = vocab->n();
  if (n == 0) throw DataError("model field 'vocabulary' is empty");

  if (!doc.contains("params")) throw DataError("model field 'params' missing");
  const json& params = doc["params"];
  Variant variant = model.hp.variant;
  const std::uint32_t d = model.hp.d;

  if (has_transition(variant)) {
    auto w = read_flat(params, "W", static_cast<std::size_t>(n) * d);
    model.params.W = Matrix(n, d);
    model.params.W.data() = std::move(w);
    auto a = read_flat(params, "A", static_cast<std::size_t>(n) * d);
    model.params.A = Matrix(d, n);
    model.params.A.data() = std::move(a);
    model.params.b = read_flat(params, "b", n);
  }
  if (has_popularity(variant)) model.params.v = read_flat(params, "v", n);
  if (variant == Variant::gp2 || variant == Variant::gp2t) {
    model.params.c = read_flat(params, "c", n);
    model.params.q = read_flat(params, "q", variant == Variant::gp2 ? n : d);
  }
  if (variant == Variant::p2) model.params.a = read_double(params, "a");
  return model;
}

}  // namespace m2rec
