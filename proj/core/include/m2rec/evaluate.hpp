// Multi-horizon next-basket evaluation. Horizon h scores the h-th test
// basket of every user who has at least h of them; the context grows by
// the preceding test baskets (the user model state updates, the learned
// parameters do not). Includes paired comparison of two result sets.
#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "m2rec/baselines.hpp"
#include "m2rec/model.hpp"
#include "m2rec/split.hpp"

namespace m2rec {

// Anything that can turn a context into a ranked list.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual RankedList rank(std::span<const Basket> context, std::size_t k) const = 0;
  virtual std::string name() const = 0;
};

class ModelScorer : public Scorer {
 public:
  ModelScorer(Params params, Hyperparams hp, std::uint32_t n);
  RankedList rank(std::span<const Basket> context, std::size_t k) const override;
  std::string name() const override { return to_string(hp_.variant); }

 private:
  Params params_;
  Hyperparams hp_;
  std::uint32_t n_;
};

class PopScorer : public Scorer {
 public:
  explicit PopScorer(PopularityTable table) : table_(std::move(table)) {}
  RankedList rank(std::span<const Basket> context, std::size_t k) const override;
  std::string name() const override { return "pop"; }

 private:
  PopularityTable table_;
};

class PoepScorer : public Scorer {
 public:
  explicit PoepScorer(std::uint32_t n) : n_(n) {}
  RankedList rank(std::span<const Basket> context, std::size_t k) const override;
  std::string name() const override { return "poep"; }

 private:
  std::uint32_t n_;
};

struct EvalOptions {
  std::vector<std::size_t> ks = {5, 10, 20};
  int max_horizon = 3;  ///< 1..3
  bool include_validation_in_context = false;  ///< final-test protocol
  bool exclude_cold = false;  ///< drop cold items from ground truth
};

struct UserEval {
  std::string user_id;
  bool cold_in_target = false;
  bool empty_context = false;
  std::vector<double> recall;     ///< one value per options.ks entry
  std::vector<double> precision;
  std::vector<double> ndcg;
};

struct HorizonReport {
  int horizon = 0;
  std::vector<UserEval> users;
  std::vector<double> mean_recall;
  std::vector<double> mean_precision;
  std::vector<double> mean_ndcg;
};

struct EvalReport {
  std::string scorer;
  std::vector<std::size_t> ks;
  bool exclude_cold = false;
  std::vector<HorizonReport> horizons;
};

EvalReport evaluate_horizons(const SplitCorpus& split, const Scorer& scorer,
                             const EvalOptions& options);

void save_report_json(const EvalReport& report, const std::string& path);
EvalReport load_report_json(const std::string& path);

// Flat CSV, one row per user per horizon, for plotting.
void save_report_csv(const EvalReport& report, const std::string& path);

struct MetricComparison {
  int horizon = 0;
  std::string metric;  ///< "recall", "precision", "ndcg"
  std::size_t k = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double improvement_pct = 0.0;  ///< (a-b)/b * 100; NaN when b's mean is 0
  double t = 0.0;
  double p = 1.0;
  bool significant = false;
};

// Paired per-user comparison of two reports over identical user sets.
// Throws std::invalid_argument naming the symmetric-difference size if the
// user populations disagree at any horizon.
std::vector<MetricComparison> compare_reports(const EvalReport& a, const EvalReport& b,
                                              double alpha = 0.05);

}  // namespace m2rec
