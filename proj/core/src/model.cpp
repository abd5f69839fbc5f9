#include "m2rec/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace m2rec {

namespace {

constexpr double kLogFloor = 1e-12;
constexpr double kAdagradEps = 1e-10;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

void softmax_inplace(std::vector<double>& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& x : logits) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : logits) x /= sum;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

// Backprop through softmax: given dL/ds and s, returns dL/dlogits via
// dL/dy_k = s_k * (dL/ds_k - sum_j dL/ds_j * s_j).
void softmax_backward(const std::vector<double>& s, const std::vector<double>& ds,
                      std::vector<double>& dy) {
  double inner = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) inner += ds[j] * s[j];
  dy.resize(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) dy[k] = s[k] * (ds[k] - inner);
}

}  // namespace

const char* to_string(Variant v) {
  switch (v) {
    case Variant::p2: return "p2";
    case Variant::gp2: return "gp2";
    case Variant::gp2t: return "gp2t";
    case Variant::ugp_only: return "ugp_only";
    case Variant::tpi_only: return "tpi_only";
  }
  return "?";
}

Variant variant_from_string(const std::string& name) {
  if (name == "p2") return Variant::p2;
  if (name == "gp2") return Variant::gp2;
  if (name == "gp2t") return Variant::gp2t;
  if (name == "ugp_only" || name == "ugp-only") return Variant::ugp_only;
  if (name == "tpi_only" || name == "tpi-only") return Variant::tpi_only;
  throw std::invalid_argument("unknown model variant: " + name);
}

bool has_transition(Variant v) { return v == Variant::gp2t || v == Variant::tpi_only; }
bool has_popularity(Variant v) { return v == Variant::p2 || v == Variant::gp2; }
bool has_gate(Variant v) {
  return v == Variant::p2 || v == Variant::gp2 || v == Variant::gp2t;
}

void Hyperparams::validate() const {
  if (d == 0) throw std::invalid_argument("hyperparams: d must be positive");
  if (!(gamma > 0.0) || gamma > 1.0)
    throw std::invalid_argument("hyperparams: gamma must lie in (0, 1]");
  if (lambda < 0.0) throw std::invalid_argument("hyperparams: lambda must be non-negative");
  if (!(lr > 0.0)) throw std::invalid_argument("hyperparams: lr must be positive");
  if (epochs < 0) throw std::invalid_argument("hyperparams: epochs must be non-negative");
  if (batch_size <= 0) throw std::invalid_argument("hyperparams: batch_size must be positive");
  if (patience < 0) throw std::invalid_argument("hyperparams: patience must be non-negative");
}

double Params::squared_norm() const {
  double total = a * a;
  for (const auto* vec : {&b, &v, &c, &q})
    for (double x : *vec) total += x * x;
  for (const auto* mat : {&W, &A})
    for (double x : mat->data()) total += x * x;
  return total;
}

Params init_params(const Hyperparams& hp, std::uint32_t n, std::mt19937_64& rng) {
  Params params;
  if (has_transition(hp.variant)) {
    params.W = Matrix(n, hp.d);
    params.A = Matrix(hp.d, n);
    params.b.assign(n, 0.0);
    double bw = 1.0 / std::sqrt(static_cast<double>(n));
    std::uniform_real_distribution<double> uw(-bw, bw);
    for (double& x : params.W.data()) x = uw(rng);
    double ba = 1.0 / std::sqrt(static_cast<double>(hp.d));
    std::uniform_real_distribution<double> ua(-ba, ba);
    for (double& x : params.A.data()) x = ua(rng);
  }
  if (has_popularity(hp.variant)) params.v.assign(n, 0.0);
  if (hp.variant == Variant::gp2 || hp.variant == Variant::gp2t) {
    params.c.assign(n, 0.0);
    params.q.assign(hp.variant == Variant::gp2 ? n : hp.d, 0.0);
  }
  return params;
}

UserState build_user_state(std::span<const Basket> context, std::uint32_t n, double gamma) {
  UserState state;
  state.p.assign(n, 0.0);
  state.g.assign(n, 0.0);

  double total = 0.0;
  const auto T = static_cast<std::int64_t>(context.size());
  for (std::int64_t t = 0; t < T; ++t) {
    // Decay counts baskets from the most recent backwards; presence in a
    // basket contributes one decayed unit regardless of multiplicity.
    double decay = std::pow(gamma, static_cast<double>(T - 1 - t));
    for (const auto& [idx, q] : context[t].items) {
      if (idx >= n) continue;
      state.p[idx] += q;
      total += q;
      state.g[idx] += decay;
    }
  }
  if (total > 0.0) {
    state.has_history = true;
    for (double& x : state.p) x /= total;
  }
  state.active.reserve(64);
  for (std::uint32_t i = 0; i < n; ++i)
    if (state.g[i] != 0.0) state.active.push_back(i);
  return state;
}

ForwardTrace forward(const Params& params, const Hyperparams& hp, const UserState& state) {
  ForwardTrace trace;
  const std::uint32_t n = static_cast<std::uint32_t>(state.p.size());

  if (has_transition(hp.variant)) {
    const std::uint32_t d = hp.d;
    trace.h.assign(d, 0.0);
    // g is sparse in practice; only touched rows of W contribute.
    for (std::uint32_t i : state.active) {
      double gi = state.g[i];
      auto row = params.W.row(i);
      for (std::uint32_t j = 0; j < d; ++j) trace.h[j] += gi * row[j];
    }
    for (double& x : trace.h) x = std::tanh(x);
    trace.s.assign(params.b.begin(), params.b.end());
    for (std::uint32_t j = 0; j < d; ++j) {
      double hj = trace.h[j];
      auto row = params.A.row(j);
      for (std::uint32_t i = 0; i < n; ++i) trace.s[i] += hj * row[i];
    }
    softmax_inplace(trace.s);
  }
  if (has_popularity(hp.variant)) {
    trace.w_pop = params.v;
    softmax_inplace(trace.w_pop);
  }

  switch (hp.variant) {
    case Variant::ugp_only:
      trace.alpha = 0.0;
      trace.r_hat = state.p;
      return trace;
    case Variant::tpi_only:
      trace.alpha = 1.0;
      trace.r_hat = trace.s;
      return trace;
    case Variant::p2:
      trace.alpha = sigmoid(params.a);
      break;
    case Variant::gp2:
      trace.alpha = sigmoid(dot(state.p, params.c) + dot(params.v, params.q));
      break;
    case Variant::gp2t:
      trace.alpha = sigmoid(dot(state.p, params.c) + dot(trace.h, params.q));
      break;
  }
  if (!state.has_history) trace.alpha = 1.0;  // nothing personal to blend in

  const std::vector<double>& mix = has_transition(hp.variant) ? trace.s : trace.w_pop;
  trace.r_hat.resize(n);
  for (std::uint32_t i = 0; i < n; ++i)
    trace.r_hat[i] = (1.0 - trace.alpha) * state.p[i] + trace.alpha * mix[i];
  return trace;
}

double loss(const ForwardTrace& trace, std::span<const std::uint32_t> target_unique,
            double lambda, const Params& params) {
  if (target_unique.empty()) throw std::invalid_argument("loss: empty target basket");
  double nll = 0.0;
  for (std::uint32_t j : target_unique) {
    if (j >= trace.r_hat.size())
      throw std::invalid_argument("loss: target index outside vocabulary");
    nll -= std::log(std::max(trace.r_hat[j], kLogFloor));
  }
  return nll + lambda * params.squared_norm();
}

Gradients Gradients::zeros_like(const Params& params) {
  Gradients g;
  g.W = Matrix(params.W.rows(), params.W.cols());
  g.A = Matrix(params.A.rows(), params.A.cols());
  g.b.assign(params.b.size(), 0.0);
  g.v.assign(params.v.size(), 0.0);
  g.c.assign(params.c.size(), 0.0);
  g.q.assign(params.q.size(), 0.0);
  return g;
}

void Gradients::add_l2(const Params& params, double lambda) {
  if (lambda == 0.0) return;
  const double two_lambda = 2.0 * lambda;
  for (std::size_t i = 0; i < W.data().size(); ++i) W.data()[i] += two_lambda * params.W.data()[i];
  for (std::size_t i = 0; i < A.data().size(); ++i) A.data()[i] += two_lambda * params.A.data()[i];
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += two_lambda * params.b[i];
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += two_lambda * params.v[i];
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += two_lambda * params.c[i];
  for (std::size_t i = 0; i < q.size(); ++i) q[i] += two_lambda * params.q[i];
  a += two_lambda * params.a;
}

void accumulate_data_gradients(const Params& params, const Hyperparams& hp,
                               const UserState& state,
                               std::span<const std::uint32_t> target_unique, Gradients& sink) {
  if (hp.variant == Variant::ugp_only) return;  // nothing learnable

  ForwardTrace trace = forward(params, hp, state);
  const std::uint32_t n = static_cast<std::uint32_t>(state.p.size());
  const double alpha = trace.alpha;

  // dL/dr_hat is non-zero only at target items. Scores at or below the log
  // floor contribute a clamped, constant loss there, hence zero gradient.
  std::vector<double> dr(n, 0.0);
  for (std::uint32_t j : target_unique)
    if (trace.r_hat[j] > kLogFloor) dr[j] = -1.0 / trace.r_hat[j];

  const bool gated = has_gate(hp.variant) && state.has_history;
  const std::vector<double>& mix = has_transition(hp.variant) ? trace.s : trace.w_pop;

  // Gate path: alpha = sigmoid(z), dL/dz = dL/dalpha * alpha * (1 - alpha).
  double dz = 0.0;
  if (gated) {
    double dalpha = 0.0;
    for (std::uint32_t j : target_unique)
      dalpha += dr[j] * (mix[j] - state.p[j]);
    dz = dalpha * alpha * (1.0 - alpha);
  }

  if (has_popularity(hp.variant)) {
    // Popularity softmax path: dL/dw_pop = alpha * dr at targets.
    std::vector<double> dw(n, 0.0);
    for (std::uint32_t j : target_unique) dw[j] = alpha * dr[j];
    std::vector<double> dv;
    softmax_backward(trace.w_pop, dw, dv);
    if (hp.variant == Variant::gp2 && gated) {
      // v also feeds the gate through z = p.c + v.q.
      for (std::uint32_t i = 0; i < n; ++i) dv[i] += dz * params.q[i];
    }
    for (std::uint32_t i = 0; i < n; ++i) sink.v[i] += dv[i];
    if (hp.variant == Variant::p2) sink.a += dz;
    if (hp.variant == Variant::gp2 && gated) {
      for (std::uint32_t i = 0; i < n; ++i) {
        sink.c[i] += dz * state.p[i];
        sink.q[i] += dz * params.v[i];  // the gate reads raw v, not softmax(v)
      }
    }
    return;
  }

  // Transition path (gp2t, tpi_only).
  const std::uint32_t d = hp.d;
  std::vector<double> ds(n, 0.0);
  for (std::uint32_t j : target_unique) ds[j] = alpha * dr[j];
  std::vector<double> dy;
  softmax_backward(trace.s, ds, dy);

  // Decoder: y = hA + b.
  for (std::uint32_t i = 0; i < n; ++i) sink.b[i] += dy[i];
  std::vector<double> dh(d, 0.0);
  for (std::uint32_t j = 0; j < d; ++j) {
    double hj = trace.h[j];
    auto arow = params.A.row(j);
    auto grow = sink.A.row(j);
    double acc = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      grow[i] += hj * dy[i];
      acc += arow[i] * dy[i];
    }
    dh[j] = acc;
  }

  if (hp.variant == Variant::gp2t && gated) {
    for (std::uint32_t i = 0; i < n; ++i) sink.c[i] += dz * state.p[i];
    for (std::uint32_t j = 0; j < d; ++j) {
      sink.q[j] += dz * trace.h[j];
      dh[j] += dz * params.q[j];  // h feeds the gate as well as the decoder
    }
  }

  // Encoder: h = tanh(gW); only rows with g != 0 receive gradient.
  for (std::uint32_t j = 0; j < d; ++j) dh[j] *= 1.0 - trace.h[j] * trace.h[j];
  for (std::uint32_t i : state.active) {
    double gi = state.g[i];
    auto grow = sink.W.row(i);
    for (std::uint32_t j = 0; j < d; ++j) grow[j] += gi * dh[j];
  }
}

Gradients backward(const Params& params, const Hyperparams& hp, const UserState& state,
                   std::span<const std::uint32_t> target_unique) {
  Gradients grads = Gradients::zeros_like(params);
  accumulate_data_gradients(params, hp, state, target_unique, grads);
  grads.add_l2(params, hp.lambda);
  return grads;
}

AdagradState AdagradState::zeros_like(const Params& params) {
  AdagradState state;
  state.acc = Gradients::zeros_like(params);
  return state;
}

namespace {

void adagrad_block(std::span<double> theta, std::span<const double> grad,
                   std::span<double> acc, double lr) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double g = grad[i];
    if (g == 0.0) continue;
    acc[i] += g * g;
    theta[i] -= lr * g / (std::sqrt(acc[i]) + kAdagradEps);
  }
}

}  // namespace

void adagrad_step(Params& params, const Gradients& grads, AdagradState& state, double lr) {
  adagrad_block(params.W.data(), grads.W.data(), state.acc.W.data(), lr);
  adagrad_block(params.A.data(), grads.A.data(), state.acc.A.data(), lr);
  adagrad_block(params.b, grads.b, state.acc.b, lr);
  adagrad_block(params.v, grads.v, state.acc.v, lr);
  adagrad_block(params.c, grads.c, state.acc.c, lr);
  adagrad_block(params.q, grads.q, state.acc.q, lr);
  if (grads.a != 0.0) {
    state.acc.a += grads.a * grads.a;
    params.a -= lr * grads.a / (std::sqrt(state.acc.a) + kAdagradEps);
  }
}

std::vector<std::uint32_t> rank_scores(std::span<const double> scores, std::size_t k) {
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::size_t depth = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + depth, order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  order.resize(depth);
  return order;
}

RankedList predict_topk(const Params& params, const Hyperparams& hp, const UserState& state,
                        std::size_t k) {
  RankedList out;
  out.truncated = k > state.p.size();
  out.empty_context = !state.has_history;
  if (hp.variant == Variant::ugp_only && !state.has_history) return out;
  ForwardTrace trace = forward(params, hp, state);
  out.items = rank_scores(trace.r_hat, k);
  return out;
}

}  // namespace m2rec
