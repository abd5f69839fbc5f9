#include "m2rec/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace m2rec {

namespace {

std::size_t hits_in_top_k(std::span<const std::uint32_t> ranked, const TruthSet& truth,
                          std::size_t k) {
  std::size_t hits = 0;
  std::size_t depth = std::min(k, ranked.size());
  for (std::size_t i = 0; i < depth; ++i)
    if (truth.count(ranked[i])) ++hits;
  return hits;
}

}  // namespace

double recall_at_k(std::span<const std::uint32_t> ranked, const TruthSet& truth, std::size_t k) {
  if (truth.empty()) throw std::invalid_argument("recall_at_k: empty ground truth");
  return static_cast<double>(hits_in_top_k(ranked, truth, k)) / static_cast<double>(truth.size());
}

double precision_at_k(std::span<const std::uint32_t> ranked, const TruthSet& truth, std::size_t k) {
  if (truth.empty()) throw std::invalid_argument("precision_at_k: empty ground truth");
  if (k == 0) throw std::invalid_argument("precision_at_k: k must be positive");
  return static_cast<double>(hits_in_top_k(ranked, truth, k)) / static_cast<double>(k);
}

double ndcg_at_k(std::span<const std::uint32_t> ranked, const TruthSet& truth, std::size_t k) {
  if (truth.empty()) throw std::invalid_argument("ndcg_at_k: empty ground truth");
  double dcg = 0.0;
  std::size_t depth = std::min(k, ranked.size());
  for (std::size_t i = 0; i < depth; ++i)
    if (truth.count(ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  double idcg = 0.0;
  std::size_t ideal = std::min(k, truth.size());
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

namespace detail {

namespace {

// Continued-fraction core of the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double result = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    result *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double delta = d * c;
    result *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return result;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  // The continued fraction converges fast only for x below the mean; use
  // the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the other side.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  // P(|T| >= t) = I_{df/(df+t^2)}(df/2, 1/2)
  double x = df / (df + t * t);
  return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

}  // namespace detail

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.size() != b.size())
    throw std::invalid_argument("paired_t_test: samples differ in length");
  if (a.size() < 2)
    throw std::invalid_argument("paired_t_test: need at least 2 paired observations");

  const auto n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double dev = (a[i] - b[i]) - mean;
    ss += dev * dev;
  }
  double var = ss / (n - 1.0);

  TTestResult result;
  if (var == 0.0) {
    if (mean == 0.0) return {0.0, 1.0, false};
    double inf = std::numeric_limits<double>::infinity();
    return {mean > 0 ? inf : -inf, 0.0, true};
  }
  result.t = mean / std::sqrt(var / n);
  result.p = detail::student_t_two_sided_p(result.t, n - 1.0);
  result.significant = result.p < alpha;
  return result;
}

}  // namespace m2rec
