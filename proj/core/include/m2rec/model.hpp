// The mixed next-basket model family. A user's next basket is scored by
// blending up to three signals: their own repeat-purchase distribution p,
// a global popularity distribution, and a learned basket-to-basket
// transition network fed by a recency-decayed history vector g. Variants
// differ in which signals exist and how the blending gate alpha is formed:
//
//   p2        r = (1-a)p + a*softmax(v),  a = sigmoid(scalar)
//   gp2       r = (1-a)p + a*softmax(v),  a = sigmoid(p.c + v.q)
//   gp2t      r = (1-a)p + a*s,           a = sigmoid(p.c + h.q)
//   ugp_only  r = p                       (ablation, gate forced 0)
//   tpi_only  r = s                       (ablation, gate forced 1)
//
// where s = softmax(tanh(gW)A + b) is the transition network's output.
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "m2rec/matrix.hpp"
#include "m2rec/split.hpp"

namespace m2rec {

enum class Variant { p2, gp2, gp2t, ugp_only, tpi_only };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& name);
bool has_transition(Variant v);  ///< owns W, A, b
bool has_popularity(Variant v);  ///< owns v
bool has_gate(Variant v);        ///< alpha is learned, not forced

struct Hyperparams {
  Variant variant = Variant::gp2t;
  std::uint32_t d = 32;       ///< hidden width of the transition encoder
  double gamma = 0.6;         ///< history decay in (0, 1]
  double lambda = 1e-4;       ///< L2 strength
  double lr = 1e-2;           ///< Adagrad learning rate
  int epochs = 100;
  int batch_size = 256;
  int patience = 10;          ///< early-stop patience in epochs
  std::uint64_t seed = 42;

  void validate() const;  ///< throws std::invalid_argument on bad ranges
};

// Learnable parameters. Only the blocks the variant owns are allocated;
// the rest stay empty.
struct Params {
  Matrix W;               ///< n x d encoder weights     (gp2t, tpi_only)
  Matrix A;               ///< d x n decoder weights     (gp2t, tpi_only)
  std::vector<double> b;  ///< n decoder bias            (gp2t, tpi_only)
  std::vector<double> v;  ///< n popularity logits       (p2, gp2)
  std::vector<double> c;  ///< n gate weights on p       (gp2, gp2t)
  std::vector<double> q;  ///< gate weights on v (n, gp2) or on h (d, gp2t)
  double a = 0.0;         ///< scalar gate logit         (p2)

  double squared_norm() const;
};

// Matrix blocks start uniform in +/- 1/sqrt(fan_in) (fan-in n for W, d for
// A); vectors and the scalar gate start at zero. Draw order is fixed, so a
// given seed always produces the same parameters.
Params init_params(const Hyperparams& hp, std::uint32_t n, std::mt19937_64& rng);

// Everything the model derives from a user's context baskets.
struct UserState {
  std::vector<double> p;  ///< repeat-purchase distribution, sums to 1 or all-zero
  std::vector<double> g;  ///< decayed history, one weight sum per item
  std::vector<std::uint32_t> active;  ///< indices with g[i] != 0, ascending
  bool has_history = false;
};

// p counts context interactions with multiplicity and normalizes; g sums
// gamma^(T-t) over the baskets containing each item (presence only, no
// multiplicity). Cold indices are skipped: the model's universe is the
// training vocabulary.
UserState build_user_state(std::span<const Basket> context, std::uint32_t n, double gamma);

struct ForwardTrace {
  std::vector<double> h;      ///< tanh(gW), empty unless variant has a transition net
  std::vector<double> s;      ///< softmax decoder output, same condition
  std::vector<double> w_pop;  ///< softmax(v), empty unless variant has v
  double alpha = 0.0;
  std::vector<double> r_hat;  ///< final scores over the n vocabulary items
};

ForwardTrace forward(const Params& params, const Hyperparams& hp, const UserState& state);

// Negative log-likelihood of the unique target items under r_hat, plus
// lambda * ||params||^2. Scores are floored at 1e-12 inside the log.
double loss(const ForwardTrace& trace, std::span<const std::uint32_t> target_unique,
            double lambda, const Params& params);

struct Gradients {
  Matrix W;
  Matrix A;
  std::vector<double> b;
  std::vector<double> v;
  std::vector<double> c;
  std::vector<double> q;
  double a = 0.0;

  static Gradients zeros_like(const Params& params);
  void add_l2(const Params& params, double lambda);  ///< += 2*lambda*theta
};

// Analytic gradient of `loss` (data term plus L2) with respect to every
// parameter the variant owns. Verified against central finite differences
// in the test suite.
Gradients backward(const Params& params, const Hyperparams& hp, const UserState& state,
                   std::span<const std::uint32_t> target_unique);

// Same, but without the 2*lambda*theta term, accumulated into `sink`.
// This is the trainer's workhorse: per-user data gradients are summed over
// a minibatch and the regularizer is applied once per optimizer step.
void accumulate_data_gradients(const Params& params, const Hyperparams& hp,
                               const UserState& state,
                               std::span<const std::uint32_t> target_unique, Gradients& sink);

struct AdagradState {
  Gradients acc;  ///< per-coordinate sums of squared gradients

  static AdagradState zeros_like(const Params& params);
};

// theta -= lr * grad / (sqrt(acc) + 1e-10), acc += grad^2, elementwise.
// Zero-gradient coordinates are untouched, accumulator included.
void adagrad_step(Params& params, const Gradients& grads, AdagradState& state, double lr);

struct RankedList {
  std::vector<std::uint32_t> items;
  bool empty_context = false;  ///< scored without history (or not at all, ugp_only)
  bool truncated = false;      ///< k exceeded the vocabulary size
};

// Top-k by r_hat, ties toward the lower index. Users with no history are
// scored on the popularity/transition path alone (gate forced to 1);
// ugp_only has no such path and returns an empty list instead.
RankedList predict_topk(const Params& params, const Hyperparams& hp, const UserState& state,
                        std::size_t k);

// Shared by every ranker in the toolkit: indices sorted by score
// descending, index ascending, truncated to k.
std::vector<std::uint32_t> rank_scores(std::span<const double> scores, std::size_t k);

}  // namespace m2rec
