#include "m2rec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "m2rec/baselines.hpp"
#include "m2rec/corpus.hpp"

namespace m2rec {

Matrix transition_matrix(const SplitCorpus& split, int lookback) {
  if (lookback < 1) throw std::invalid_argument("transition_matrix: lookback must be >= 1");
  const std::uint32_t n = split.n();
  Matrix T(n, n);
  for (const auto& u : split.users) {
    std::vector<const Basket*> sequence;
    sequence.reserve(u.train.size() + u.validation.size());
    for (const auto& b : u.train) sequence.push_back(&b);
    for (const auto& b : u.validation) sequence.push_back(&b);
    for (std::size_t t = 0; t + 1 < sequence.size(); ++t) {
      std::vector<std::uint32_t> from = unique_vocab_items(*sequence[t], n);
      for (std::size_t step = 1; step <= static_cast<std::size_t>(lookback); ++step) {
        if (t + step >= sequence.size()) break;
        for (std::uint32_t j : unique_vocab_items(*sequence[t + step], n))
          for (std::uint32_t i : from) T(i, j) += 1.0;
      }
    }
  }
  return T;
}

namespace {

double row_norm(const Matrix& m, std::uint32_t r) {
  double total = 0.0;
  for (double x : m.row(r)) total += x * x;
  return std::sqrt(total);
}

double row_cosine(const Matrix& m, std::uint32_t a, std::uint32_t b) {
  double na = row_norm(m, a), nb = row_norm(m, b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  double dot = 0.0;
  auto ra = m.row(a), rb = m.row(b);
  for (std::size_t i = 0; i < ra.size(); ++i) dot += ra[i] * rb[i];
  return dot / (na * nb);
}

}  // namespace

SimilarityReport row_similarity(const Matrix& transitions,
                                std::span<const std::uint32_t> cluster) {
  const std::size_t n = transitions.rows();
  {
    std::unordered_set<std::uint32_t> seen(cluster.begin(), cluster.end());
    if (seen.size() < 2)
      throw std::invalid_argument("row_similarity: cluster needs at least 2 distinct items");
    for (std::uint32_t idx : cluster)
      if (idx >= n)
        throw std::invalid_argument("row_similarity: cluster index outside vocabulary");
  }

  SimilarityReport report;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < cluster.size(); ++i)
    for (std::size_t j = i + 1; j < cluster.size(); ++j) {
      report.cluster_mean += row_cosine(transitions, cluster[i], cluster[j]);
      ++pairs;
    }
  report.cluster_mean /= static_cast<double>(pairs);

  // Mean pairwise cosine over all n rows without the O(n^2) pair loop:
  // with unit rows u_i (zero rows staying zero vectors),
  //   sum_{i<j} u_i . u_j = (||sum_i u_i||^2 - sum_i ||u_i||^2) / 2.
  std::vector<double> accum(transitions.cols(), 0.0);
  double self = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double norm = row_norm(transitions, static_cast<std::uint32_t>(i));
    if (norm == 0.0) continue;
    auto row = transitions.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) accum[c] += row[c] / norm;
    self += 1.0;
  }
  double total = 0.0;
  for (double x : accum) total += x * x;
  double pair_sum = (total - self) / 2.0;
  double all_pairs = static_cast<double>(n) * (static_cast<double>(n) - 1.0) / 2.0;
  report.global_mean = all_pairs > 0.0 ? pair_sum / all_pairs : 0.0;

  report.ratio = report.global_mean != 0.0
                     ? report.cluster_mean / report.global_mean
                     : std::numeric_limits<double>::quiet_NaN();
  return report;
}

std::size_t rank_decile(std::size_t rank, std::size_t n) {
  return std::min<std::size_t>(9, rank * 10 / n);
}

DiversityReport diversity_report(const SplitCorpus& split, const Scorer& scorer,
                                 std::size_t top_k, bool include_validation_in_context) {
  const std::uint32_t n = split.n();
  if (n == 0) throw std::invalid_argument("diversity_report: empty vocabulary");

  // Popularity rank of every item, most popular first.
  std::vector<std::int64_t> counts(n, 0);
  for (const auto& u : split.users) {
    for (const auto& b : u.train)
      for (const auto& [idx, q] : b.items)
        if (idx < n) counts[idx] += q;
    for (const auto& b : u.validation)
      for (const auto& [idx, q] : b.items)
        if (idx < n) counts[idx] += q;
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return a < b;
  });
  std::vector<std::size_t> decile_of(n);
  for (std::size_t rank = 0; rank < n; ++rank) decile_of[order[rank]] = rank_decile(rank, n);

  DiversityReport report;
  for (const auto& u : split.users) {
    if (u.test.empty()) continue;
    std::vector<Basket> context = u.train;
    if (include_validation_in_context)
      context.insert(context.end(), u.validation.begin(), u.validation.end());
    RankedList ranked = scorer.rank(context, top_k);
    if (ranked.items.empty()) continue;
    ++report.users;
    for (std::uint32_t item : ranked.items) {
      ++report.slot_count[decile_of[item]];
      ++report.total_slots;
    }
  }
  if (report.total_slots > 0)
    for (std::size_t i = 0; i < 10; ++i)
      report.slot_share[i] =
          100.0 * static_cast<double>(report.slot_count[i]) / static_cast<double>(report.total_slots);
  return report;
}

void export_embeddings(const Matrix& W, const Vocabulary& vocabulary,
                       const std::string& path) {
  if (W.rows() != vocabulary.n())
    throw std::invalid_argument("export_embeddings: W row count does not match vocabulary");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write embeddings file: " + path);
  out << "id";
  for (std::size_t j = 0; j < W.cols(); ++j) out << ",dim_" << j;
  out << '\n';
  out.precision(17);
  for (std::uint32_t i = 0; i < W.rows(); ++i) {
    out << vocabulary.id_of(i);
    for (double x : W.row(i)) out << ',' << x;
    out << '\n';
  }
}

}  // namespace m2rec
