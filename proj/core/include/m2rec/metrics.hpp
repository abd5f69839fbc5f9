// Top-k ranking metrics and the paired significance test used when two
// scorers are compared over the same user population.
#pragma once

#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

namespace m2rec {

// Ground truth for one user and horizon: the deduplicated target basket.
// May contain cold indices (>= n), which count in the denominator but can
// never be hit by a ranked list drawn from the vocabulary.
using TruthSet = std::unordered_set<std::uint32_t>;

// recall@k = |top-k hits| / |truth|. Requires non-empty truth.
double recall_at_k(std::span<const std::uint32_t> ranked, const TruthSet& truth, std::size_t k);

// precision@k = |top-k hits| / k. The divisor stays k even when fewer than
// k items were rankable.
double precision_at_k(std::span<const std::uint32_t> ranked, const TruthSet& truth, std::size_t k);

// Binary-gain NDCG: DCG sums 1/log2(rank+1) over hit ranks (1-based),
// ideal DCG places min(k, |truth|) hits at the top.
double ndcg_at_k(std::span<const std::uint32_t> ranked, const TruthSet& truth, std::size_t k);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  bool significant = false;  ///< p < alpha, two-sided
};

// Two-sided paired t-test on per-user metric differences a[i] - b[i].
// All-zero differences give t=0, p=1. Zero variance with non-zero mean is
// a degenerate certainty: t=+/-inf, p=0, significant.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b,
                          double alpha = 0.05);

namespace detail {

// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p-value for a t statistic with the given degrees of freedom.
double student_t_two_sided_p(double t, double df);

}  // namespace detail

}  // namespace m2rec
