#include "m2rec/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "m2rec/corpus.hpp"
#include "m2rec/metrics.hpp"

namespace m2rec {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

ModelScorer::ModelScorer(Params params, Hyperparams hp, std::uint32_t n)
    : params_(std::move(params)), hp_(hp), n_(n) {}

RankedList ModelScorer::rank(std::span<const Basket> context, std::size_t k) const {
  UserState state = build_user_state(context, n_, hp_.gamma);
  return predict_topk(params_, hp_, state, k);
}

RankedList PopScorer::rank(std::span<const Basket> context, std::size_t k) const {
  RankedList out;
  out.truncated = k > table_.counts.size();
  out.items = pop_topk(table_, k);
  return out;
}

RankedList PoepScorer::rank(std::span<const Basket> context, std::size_t k) const {
  RankedList out;
  out.truncated = k > n_;
  out.items = poep_topk(context, n_, k);
  out.empty_context = out.items.empty();
  return out;
}

EvalReport evaluate_horizons(const SplitCorpus& split, const Scorer& scorer,
                             const EvalOptions& options) {
  if (options.max_horizon < 1 || options.max_horizon > 3)
    throw std::invalid_argument("evaluate: horizon must lie in 1..3");
  if (options.ks.empty()) throw std::invalid_argument("evaluate: no k values given");

  const std::uint32_t n = split.n();
  const std::size_t k_max = *std::max_element(options.ks.begin(), options.ks.end());

  EvalReport report;
  report.scorer = scorer.name();
  report.ks = options.ks;
  report.exclude_cold = options.exclude_cold;

  for (int horizon = 1; horizon <= options.max_horizon; ++horizon) {
    HorizonReport hr;
    hr.horizon = horizon;
    hr.mean_recall.assign(options.ks.size(), 0.0);
    hr.mean_precision.assign(options.ks.size(), 0.0);
    hr.mean_ndcg.assign(options.ks.size(), 0.0);

    for (const auto& u : split.users) {
      if (u.test.size() < static_cast<std::size_t>(horizon)) continue;
      const Basket& target = u.test[horizon - 1];

      TruthSet truth;
      bool cold = false;
      for (const auto& [idx, q] : target.items) {
        if (idx >= n) {
          cold = true;
          if (options.exclude_cold) continue;
        }
        truth.insert(idx);
      }
      if (truth.empty()) continue;  // all-cold target under exclude_cold

      // Context: everything the model may know at horizon h. Earlier test
      // baskets update the user state only; parameters stay frozen.
      std::vector<Basket> context = u.train;
      if (options.include_validation_in_context)
        context.insert(context.end(), u.validation.begin(), u.validation.end());
      context.insert(context.end(), u.test.begin(), u.test.begin() + (horizon - 1));

      RankedList ranked = scorer.rank(context, k_max);

      UserEval ue;
      ue.user_id = u.user_id;
      ue.cold_in_target = cold;
      ue.empty_context = ranked.empty_context;
      for (std::size_t ki = 0; ki < options.ks.size(); ++ki) {
        std::size_t k = options.ks[ki];
        ue.recall.push_back(recall_at_k(ranked.items, truth, k));
        ue.precision.push_back(precision_at_k(ranked.items, truth, k));
        ue.ndcg.push_back(ndcg_at_k(ranked.items, truth, k));
      }
      for (std::size_t ki = 0; ki < options.ks.size(); ++ki) {
        hr.mean_recall[ki] += ue.recall[ki];
        hr.mean_precision[ki] += ue.precision[ki];
        hr.mean_ndcg[ki] += ue.ndcg[ki];
      }
      hr.users.push_back(std::move(ue));
    }

    if (!hr.users.empty()) {
      const auto count = static_cast<double>(hr.users.size());
      for (std::size_t ki = 0; ki < options.ks.size(); ++ki) {
        hr.mean_recall[ki] /= count;
        hr.mean_precision[ki] /= count;
        hr.mean_ndcg[ki] /= count;
      }
    }
    report.horizons.push_back(std::move(hr));
  }
  return report;
}

namespace {

ordered metric_values(const std::vector<double>& vals) {
  ordered arr = ordered::array();
  for (double v : vals) arr.push_back(v);
  return arr;
}

std::vector<double> read_doubles(const json& arr) {
  std::vector<double> out;
  for (const auto& x : arr) out.push_back(x.get<double>());
  return out;
}

}  // namespace

void save_report_json(const EvalReport& report, const std::string& path) {
  ordered doc;
  doc["scorer"] = report.scorer;
  doc["ks"] = metric_values(std::vector<double>(report.ks.begin(), report.ks.end()));
  doc["exclude_cold"] = report.exclude_cold;
  ordered horizons = ordered::array();
  for (const auto& hr : report.horizons) {
    ordered h;
    h["horizon"] = hr.horizon;
    h["evaluated_users"] = hr.users.size();
    h["mean_recall"] = metric_values(hr.mean_recall);
    h["mean_precision"] = metric_values(hr.mean_precision);
    h["mean_ndcg"] = metric_values(hr.mean_ndcg);
    ordered users = ordered::array();
    for (const auto& ue : hr.users) {
      ordered u;
      u["user_id"] = ue.user_id;
      u["cold_in_target"] = ue.cold_in_target;
      u["empty_context"] = ue.empty_context;
      u["recall"] = metric_values(ue.recall);
      u["precision"] = metric_values(ue.precision);
      u["ndcg"] = metric_values(ue.ndcg);
      users.push_back(std::move(u));
    }
    h["users"] = std::move(users);
    horizons.push_back(std::move(h));
  }
  doc["horizons"] = std::move(horizons);

  std::ofstream out(path);
  if (!out) throw DataError("cannot write report file: " + path);
  out << doc.dump(2) << '\n';
}

EvalReport load_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw DataError("report file is not valid JSON: " + std::string(e.what()));
  }

  EvalReport report;
  try {
    report.scorer = doc.at("scorer").get<std::string>();
    for (const auto& k : doc.at("ks")) report.ks.push_back(k.get<std::size_t>());
    report.exclude_cold = doc.value("exclude_cold", false);
    for (const auto& h : doc.at("horizons")) {
      HorizonReport hr;
      hr.horizon = h.at("horizon").get<int>();
      hr.mean_recall = read_doubles(h.at("mean_recall"));
      hr.mean_precision = read_doubles(h.at("mean_precision"));
      hr.mean_ndcg = read_doubles(h.at("mean_ndcg"));
      for (const auto& u : h.at("users")) {
        UserEval ue;
        ue.user_id = u.at("user_id").get<std::string>();
        ue.cold_in_target = u.value("cold_in_target", false);
        ue.empty_context = u.value("empty_context", false);
        ue.recall = read_doubles(u.at("recall"));
        ue.precision = read_doubles(u.at("precision"));
        ue.ndcg = read_doubles(u.at("ndcg"));
        hr.users.push_back(std::move(ue));
      }
      report.horizons.push_back(std::move(hr));
    }
  } catch (const json::exception& e) {
    throw DataError("report file malformed: " + std::string(e.what()));
  }
  return report;
}

void save_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report file: " + path);
  out << "user_id,horizon";
  for (std::size_t k : report.ks) out << ",recall@" << k;
  for (std::size_t k : report.ks) out << ",precision@" << k;
  for (std::size_t k : report.ks) out << ",ndcg@" << k;
  out << ",cold_in_target,empty_context\n";
  for (const auto& hr : report.horizons) {
    for (const auto& ue : hr.users) {
      out << ue.user_id << ',' << hr.horizon;
      for (double v : ue.recall) out << ',' << v;
      for (double v : ue.precision) out << ',' << v;
      for (double v : ue.ndcg) out << ',' << v;
      out << ',' << (ue.cold_in_target ? 1 : 0) << ',' << (ue.empty_context ? 1 : 0) << '\n';
    }
  }
}

std::vector<MetricComparison> compare_reports(const EvalReport& a, const EvalReport& b,
                                              double alpha) {
  if (a.ks != b.ks)
    throw std::invalid_argument("compare: reports use different k lists");
  if (a.horizons.size() != b.horizons.size())
    throw std::invalid_argument("compare: reports cover different horizon ranges");

  std::vector<MetricComparison> rows;
  for (std::size_t hi = 0; hi < a.horizons.size(); ++hi) {
    const HorizonReport& ha = a.horizons[hi];
    const HorizonReport& hb = b.horizons[hi];

    // Pair users by id; both reports must cover exactly the same set.
    std::set<std::string> ids_a, ids_b;
    for (const auto& u : ha.users) ids_a.insert(u.user_id);
    for (const auto& u : hb.users) ids_b.insert(u.user_id);
    if (ids_a != ids_b) {
      std::vector<std::string> diff;
      std::set_symmetric_difference(ids_a.begin(), ids_a.end(), ids_b.begin(), ids_b.end(),
                                    std::back_inserter(diff));
      throw std::invalid_argument(
          "compare: user sets differ at horizon " + std::to_string(ha.horizon) +
          " (symmetric difference of " + std::to_string(diff.size()) + " users)");
    }

    std::vector<const UserEval*> ua(ha.users.size()), ub(hb.users.size());
    for (std::size_t i = 0; i < ha.users.size(); ++i) ua[i] = &ha.users[i];
    for (std::size_t i = 0; i < hb.users.size(); ++i) ub[i] = &hb.users[i];
    auto by_id = [](const UserEval* x, const UserEval* y) { return x->user_id < y->user_id; };
    std::sort(ua.begin(), ua.end(), by_id);
    std::sort(ub.begin(), ub.end(), by_id);

    struct MetricRef {
      const char* name;
      std::vector<double> UserEval::*member;
    };
    const MetricRef metrics[] = {{"recall", &UserEval::recall},
                                 {"precision", &UserEval::precision},
                                 {"ndcg", &UserEval::ndcg}};
    for (const auto& metric : metrics) {
      for (std::size_t ki = 0; ki < a.ks.size(); ++ki) {
        std::vector<double> va, vb;
        va.reserve(ua.size());
        vb.reserve(ub.size());
        for (std::size_t i = 0; i < ua.size(); ++i) {
          va.push_back((ua[i]->*(metric.member))[ki]);
          vb.push_back((ub[i]->*(metric.member))[ki]);
        }
        MetricComparison row;
        row.horizon = ha.horizon;
        row.metric = metric.name;
        row.k = a.ks[ki];
        for (double v : va) row.mean_a += v;
        for (double v : vb) row.mean_b += v;
        if (!va.empty()) {
          row.mean_a /= static_cast<double>(va.size());
          row.mean_b /= static_cast<double>(vb.size());
        }
        row.improvement_pct = row.mean_b == 0.0
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : (row.mean_a - row.mean_b) / row.mean_b * 100.0;
        if (va.size() >= 2) {
          TTestResult tt = paired_t_test(va, vb, alpha);
          row.t = tt.t;
          row.p = tt.p;
          row.significant = tt.significant;
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace m2rec
