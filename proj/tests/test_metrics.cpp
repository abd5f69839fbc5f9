#include <doctest.h>

#include <random>

#include "m2rec/metrics.hpp"
#include "test_support.hpp"

using namespace m2rec;

TEST_SUITE_BEGIN("metrics");

TEST_CASE("worked example: R=[3,1,4], S={1,2}, k=3") {
  std::vector<std::uint32_t> ranked = {3, 1, 4};
  TruthSet truth = {1, 2};
  CHECK(recall_at_k(ranked, truth, 3) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(precision_at_k(ranked, truth, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  // One hit at rank 2, ideal has hits at ranks 1 and 2:
  // ndcg = (1/log2(3)) / (1 + 1/log2(3)) = 0.38705...
  double hit = 1.0 / std::log2(3.0);
  CHECK(ndcg_at_k(ranked, truth, 3) == doctest::Approx(hit / (1.0 + hit)).epsilon(1e-12));
}

TEST_CASE("single relevant item at rank 2 gives ndcg 1/log2(3)") {
  std::vector<std::uint32_t> ranked = {9, 4, 7};
  TruthSet truth = {4};
  CHECK(ndcg_at_k(ranked, truth, 3) == doctest::Approx(0.6309297535714575).epsilon(1e-12));
}

TEST_CASE("perfect and disjoint rankings hit the metric extremes") {
  std::vector<std::uint32_t> ranked = {1, 2, 3};
  CHECK(recall_at_k(ranked, {1, 2, 3}, 3) == 1.0);
  CHECK(ndcg_at_k(ranked, {1, 2, 3}, 3) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(recall_at_k(ranked, {7, 8}, 3) == 0.0);
  CHECK(ndcg_at_k(ranked, {7, 8}, 3) == 0.0);
  CHECK(precision_at_k(ranked, {7, 8}, 3) == 0.0);
}

TEST_CASE("precision divides by k even with short rankings") {
  std::vector<std::uint32_t> ranked = {1};
  CHECK(precision_at_k(ranked, {1}, 5) == doctest::Approx(0.2).epsilon(1e-15));
  // A 2-hit example: R has 2 of S in the top 10 -> 0.2; matches the
  // usual sanity figure for these protocols.
  std::vector<std::uint32_t> r10 = {1, 2, 90, 91, 92, 93, 94, 95, 96, 97};
  CHECK(precision_at_k(r10, {1, 2, 50}, 10) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("empty ground truth is rejected") {
  std::vector<std::uint32_t> ranked = {1};
  CHECK_THROWS_AS(recall_at_k(ranked, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(precision_at_k(ranked, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(ndcg_at_k(ranked, {}, 1), std::invalid_argument);
}

TEST_CASE("1000 random cases agree with brute force to 1e-12") {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<std::uint32_t> item(0, 49);
  std::uniform_int_distribution<int> k_dist(1, 25);
  std::uniform_int_distribution<int> len_dist(0, 30);
  std::uniform_int_distribution<int> truth_dist(1, 8);

  for (int iter = 0; iter < 1000; ++iter) {
    // Ranked list: distinct items; truth: distinct items, may overlap.
    std::vector<std::uint32_t> ranked;
    int len = len_dist(rng);
    while (static_cast<int>(ranked.size()) < len) {
      std::uint32_t x = item(rng);
      if (std::find(ranked.begin(), ranked.end(), x) == ranked.end()) ranked.push_back(x);
    }
    std::vector<std::uint32_t> truth_list;
    int ts = truth_dist(rng);
    while (static_cast<int>(truth_list.size()) < ts) {
      std::uint32_t x = item(rng);
      if (std::find(truth_list.begin(), truth_list.end(), x) == truth_list.end())
        truth_list.push_back(x);
    }
    TruthSet truth(truth_list.begin(), truth_list.end());
    std::size_t k = static_cast<std::size_t>(k_dist(rng));

    CHECK(recall_at_k(ranked, truth, k) ==
          doctest::Approx(m2test::brute_recall(ranked, truth_list, k)).epsilon(1e-12));
    CHECK(precision_at_k(ranked, truth, k) ==
          doctest::Approx(m2test::brute_precision(ranked, truth_list, k)).epsilon(1e-12));
    CHECK(ndcg_at_k(ranked, truth, k) ==
          doctest::Approx(m2test::brute_ndcg(ranked, truth_list, k)).epsilon(1e-12));
  }
}

TEST_CASE("paired t-test on the worked sample") {
  // differences [1,-1,2,0,1]: mean 0.6, sample var 1.3,
  // t = 0.6 / sqrt(1.3/5) = 1.176696810829104.
  std::vector<double> a = {2, 1, 3, 2, 4};
  std::vector<double> b = {1, 2, 1, 2, 3};
  TTestResult r = paired_t_test(a, b);
  CHECK(r.t == doctest::Approx(1.176696810829104).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.304558784680535).epsilon(1e-9));
  CHECK_FALSE(r.significant);

  // Cross-check the p-value against an independent quadrature of the
  // t density.
  double p_quad = m2test::quadrature_t_two_sided_p(r.t, 4.0);
  CHECK(r.p == doctest::Approx(p_quad).epsilon(1e-9));
}

TEST_CASE("identical samples give t=0, p=1") {
  std::vector<double> a = {0.5, 0.25, 0.75};
  TTestResult r = paired_t_test(a, a);
  CHECK(r.t == 0.0);
  CHECK(r.p == 1.0);
  CHECK_FALSE(r.significant);
}

TEST_CASE("constant non-zero differences are degenerate certainty") {
  std::vector<double> a = {2, 3, 4, 5};
  std::vector<double> b = {1, 2, 3, 4};
  TTestResult r = paired_t_test(a, b);
  CHECK(std::isinf(r.t));
  CHECK(r.t > 0);
  CHECK(r.p == 0.0);
  CHECK(r.significant);

  TTestResult neg = paired_t_test(b, a);
  CHECK(neg.t < 0);
  CHECK(neg.significant);
}

TEST_CASE("t-test input validation") {
  std::vector<double> one = {1.0};
  std::vector<double> two = {1.0, 2.0};
  CHECK_THROWS_AS(paired_t_test(one, one), std::invalid_argument);
  CHECK_THROWS_AS(paired_t_test(one, two), std::invalid_argument);
}

TEST_CASE("t CDF route matches quadrature across statistics and dfs") {
  for (double df : {1.0, 2.0, 4.0, 9.0, 30.0, 199.0}) {
    for (double t : {0.1, 0.5, 1.0, 1.5, 2.5, 4.0}) {
      double lib = detail::student_t_two_sided_p(t, df);
      double quad = m2test::quadrature_t_two_sided_p(t, df);
      CHECK(lib == doctest::Approx(quad).epsilon(1e-8));
    }
  }
}

TEST_CASE("incomplete beta basics") {
  CHECK(detail::regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(detail::regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  // I_x(1,1) = x.
  CHECK(detail::regularized_incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
  // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
  double lhs = detail::regularized_incomplete_beta(2.5, 4.5, 0.3);
  double rhs = 1.0 - detail::regularized_incomplete_beta(4.5, 2.5, 0.7);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_SUITE_END();
