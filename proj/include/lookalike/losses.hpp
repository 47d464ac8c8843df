// Copyright 2026 The Lookalike Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <limits>

#include "lookalike/core.hpp"
#include "lookalike/encoders.hpp"

namespace lookalike {

// ||h + r - t||_1; lower is more plausible.
inline double transe_score(std::span<const double> h, std::span<const double> r,
                           std::span<const double> t) {
  if (h.size() != r.size() || h.size() != t.size()) fail("transe_score: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) s += std::abs(h[i] + r[i] - t[i]);
  return s;
}

inline double kge_margin_loss(double pos_score, double neg_score, double gamma) {
  return std::max(0.0, gamma + pos_score - neg_score);
}

// Scaled margin on the literal scores f = ||u + r - phi(a)||_1.
inline double demography_margin(double pos_score, double neg_score, double gamma,
                                double alpha) {
  return std::max(0.0, gamma + alpha * (pos_score - neg_score));
}

inline double demography_loss(std::span<const double> u, std::span<const double> r,
                              std::span<const double> phi_pos, std::span<const double> u_neg,
                              std::span<const double> r_neg, std::span<const double> phi_neg,
                              double gamma, double alpha) {
  return demography_margin(transe_score(u, r, phi_pos), transe_score(u_neg, r_neg, phi_neg),
                           gamma, alpha);
}

// log(1 + exp(x)) for x >= 0; returns x itself once exp(-x) is negligible.
inline double softplus_distance(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

inline double loyalty_loss(std::span<const double> user, std::span<const double> cnn_out) {
  if (user.size() != cnn_out.size()) fail("loyalty_loss: dimension mismatch");
  double dist = 0.0;
  for (std::size_t i = 0; i < user.size(); ++i) dist += std::abs(user[i] - cnn_out[i]);
  return softplus_distance(dist);
}

struct KgeGradient {
  double loss = 0.0;
  Vec head, relation, tail, neg_head, neg_tail;
};

// Subgradients of the margin loss for one (positive, negative) pair sharing
// the relation vector.
inline KgeGradient kge_loss_grad(std::span<const double> h, std::span<const double> r,
                                 std::span<const double> t, std::span<const double> neg_h,
                                 std::span<const double> neg_t, double gamma) {
  const std::size_t d = h.size();
  KgeGradient g{0.0, Vec(d, 0.0), Vec(d, 0.0), Vec(d, 0.0), Vec(d, 0.0), Vec(d, 0.0)};
  g.loss = kge_margin_loss(transe_score(h, r, t), transe_score(neg_h, r, neg_t), gamma);
  if (g.loss <= 0.0) return g;
  for (std::size_t i = 0; i < d; ++i) {
    const double sp = sign(h[i] + r[i] - t[i]);
    const double sn = sign(neg_h[i] + r[i] - neg_t[i]);
    g.head[i] = sp;
    g.tail[i] = -sp;
    g.relation[i] = sp - sn;
    g.neg_head[i] = -sn;
    g.neg_tail[i] = sn;
  }
  return g;
}

struct DemographyGradient {
  double loss = 0.0;
  Vec user, relation, phi_pos, neg_user, phi_neg;
};

inline DemographyGradient demography_loss_grad(std::span<const double> u,
                                               std::span<const double> r,
                                               std::span<const double> phi_pos,
                                               std::span<const double> neg_u,
                                               std::span<const double> phi_neg, double gamma,
                                               double alpha) {
  const std::size_t d = u.size();
  DemographyGradient g{0.0, Vec(d, 0.0), Vec(d, 0.0), Vec(d, 0.0), Vec(d, 0.0), Vec(d, 0.0)};
  g.loss = demography_loss(u, r, phi_pos, neg_u, r, phi_neg, gamma, alpha);
  if (g.loss <= 0.0) return g;
  for (std::size_t i = 0; i < d; ++i) {
    const double sp = alpha * sign(u[i] + r[i] - phi_pos[i]);
    const double sn = alpha * sign(neg_u[i] + r[i] - phi_neg[i]);
    g.user[i] = sp;
    g.phi_pos[i] = -sp;
    g.relation[i] = sp - sn;
    g.neg_user[i] = -sn;
    g.phi_neg[i] = sn;
  }
  return g;
}

struct LoyaltyGradient {
  double loss = 0.0;
  Vec user, cnn_out;
};

inline LoyaltyGradient loyalty_loss_grad(std::span<const double> u,
                                         std::span<const double> cnn_out) {
  const std::size_t d = u.size();
  LoyaltyGradient g{0.0, Vec(d, 0.0), Vec(d, 0.0)};
  double dist = 0.0;
  for (std::size_t i = 0; i < d; ++i) dist += std::abs(u[i] - cnn_out[i]);
  g.loss = softplus_distance(dist);
  // d/dx log(1 + e^x) = logistic(x); exactly 1 on the asymptote branch.
  const double slope = dist > 30.0 ? 1.0 : 1.0 / (1.0 + std::exp(-dist));
  for (std::size_t i = 0; i < d; ++i) {
    const double s = slope * sign(u[i] - cnn_out[i]);
    g.user[i] = s;
    g.cnn_out[i] = -s;
  }
  return g;
}

enum class LossKind { kKge, kDemography, kLoyalty };

struct GradCheckOptions {
  std::size_t dim = 4;
  std::size_t literal_length = 3;
  std::size_t char_vocab = 6;
  int ngram_order = kDefaultNgramOrder;
  std::size_t cnn_filters = 2;
  std::size_t cnn_width = 2;
  double step = 1e-5;
  // Instances with an inactive hinge, or a hinge or L1 argument (or a
  // max-pool gap) closer than this to its kink, are redrawn, so the central
  // difference never straddles a non-differentiable point.
  double kink_tolerance = 1e-3;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  double loss = 0.0;
  std::size_t redraws = 0;
  std::size_t parameters = 0;
};

namespace detail {

using Blocks = std::vector<Vec>;

inline Vec random_vec(std::size_t n, Rng& rng, double bound = 1.0) {
  Vec v(n);
  for (double& x : v) x = uniform(rng, -bound, bound);
  return v;
}

inline bool near_zero_coordinate(std::span<const double> a, std::span<const double> b,
                                 std::span<const double> c, double sign_b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] + sign_b * b[i] - c[i]) < tol) return true;
  }
  return false;
}

struct Instance {
  Blocks blocks;
  std::function<double(const Blocks&)> loss;
  std::function<Blocks(const Blocks&)> gradient;
  std::function<bool(const Blocks&)> near_kink;
};

inline Instance make_kge_instance(const GradCheckOptions& o, Rng& rng) {
  const double gamma = uniform(rng, 0.5, 3.0);
  Instance inst;
  for (int i = 0; i < 5; ++i) inst.blocks.push_back(random_vec(o.dim, rng));
  // blocks: h, r, t, neg_h, neg_t
  inst.loss = [gamma](const Blocks& b) {
    return kge_margin_loss(transe_score(b[0], b[1], b[2]), transe_score(b[3], b[1], b[4]),
                           gamma);
  };
  inst.gradient = [gamma](const Blocks& b) {
    auto g = kge_loss_grad(b[0], b[1], b[2], b[3], b[4], gamma);
    return Blocks{g.head, g.relation, g.tail, g.neg_head, g.neg_tail};
  };
  inst.near_kink = [gamma, tol = o.kink_tolerance](const Blocks& b) {
    const double margin = gamma + transe_score(b[0], b[1], b[2]) - transe_score(b[3], b[1], b[4]);
    return margin < tol || near_zero_coordinate(b[0], b[1], b[2], 1.0, tol) ||
           near_zero_coordinate(b[3], b[1], b[4], 1.0, tol);
  };
  return inst;
}

inline Instance make_demography_instance(const GradCheckOptions& o, Rng& rng) {
  const double gamma = uniform(rng, 0.5, 3.0);
  const double alpha = uniform(rng, 0.5, 2.0);
  const int order = o.ngram_order;
  const std::size_t d = o.dim;
  std::vector<CharId> pos(o.literal_length), neg(o.literal_length);
  for (auto& c : pos) c = CharId{static_cast<std::uint32_t>(uniform_index(rng, o.char_vocab))};
  for (auto& c : neg) c = CharId{static_cast<std::uint32_t>(uniform_index(rng, o.char_vocab))};

  Instance inst;
  // blocks: u, r, neg_u, char table (row-major char_vocab x d)
  inst.blocks = {random_vec(d, rng), random_vec(d, rng), random_vec(d, rng),
                 random_vec(o.char_vocab * d, rng, 0.5)};
  const std::size_t vocab = o.char_vocab;
  auto table_of = [vocab, d](const Vec& flat) {
    Matrix m(vocab, d);
    m.data() = flat;
    return m;
  };
  auto phis = [=](const Blocks& b) {
    const Matrix table = table_of(b[3]);
    return std::pair{ngram_encode(pos, table, order), ngram_encode(neg, table, order)};
  };
  inst.loss = [=](const Blocks& b) {
    auto [phi_pos, phi_neg] = phis(b);
    return demography_loss(b[0], b[1], phi_pos, b[2], b[1], phi_neg, gamma, alpha);
  };
  inst.gradient = [=](const Blocks& b) {
    auto [phi_pos, phi_neg] = phis(b);
    const Matrix table = table_of(b[3]);
    auto g = demography_loss_grad(b[0], b[1], phi_pos, b[2], phi_neg, gamma, alpha);
    Vec table_grad(vocab * d, 0.0);
    for (const auto& rg : ngram_encode_grad(pos, table, order, g.phi_pos)) {
      axpy(1.0, rg.grad, std::span<double>(table_grad).subspan(rg.row * d, d));
    }
    for (const auto& rg : ngram_encode_grad(neg, table, order, g.phi_neg)) {
      axpy(1.0, rg.grad, std::span<double>(table_grad).subspan(rg.row * d, d));
    }
    return Blocks{g.user, g.relation, g.neg_user, table_grad};
  };
  inst.near_kink = [=, tol = o.kink_tolerance](const Blocks& b) {
    auto [phi_pos, phi_neg] = phis(b);
    const double margin =
        gamma + alpha * (transe_score(b[0], b[1], phi_pos) - transe_score(b[2], b[1], phi_neg));
    return margin < tol || near_zero_coordinate(b[0], b[1], phi_pos, 1.0, tol) ||
           near_zero_coordinate(b[2], b[1], phi_neg, 1.0, tol);
  };
  return inst;
}

inline CnnParams cnn_from_blocks(const Blocks& b, std::size_t first, std::size_t d,
                                 std::size_t filters, std::size_t width) {
  CnnParams p = CnnParams::zeros(d, filters, width);
  p.kernels.data() = b[first];
  p.filter_bias = b[first + 1];
  p.projection.data() = b[first + 2];
  p.projection_bias = b[first + 3];
  return p;
}

inline Instance make_loyalty_instance(const GradCheckOptions& o, Rng& rng) {
  const std::size_t d = o.dim, filters = o.cnn_filters, width = o.cnn_width;
  CnnParams init = CnnParams::random(d, filters, width, rng);
  for (double& x : init.filter_bias) x = uniform(rng, -0.5, 0.5);
  for (double& x : init.projection_bias) x = uniform(rng, -0.5, 0.5);

  Instance inst;
  // blocks: u, r, v, kernels, filter bias, projection, projection bias
  inst.blocks = {random_vec(d, rng), random_vec(d, rng), random_vec(d, rng),
                 init.kernels.data(), init.filter_bias, init.projection.data(),
                 init.projection_bias};
  inst.loss = [=](const Blocks& b) {
    const CnnParams p = cnn_from_blocks(b, 3, d, filters, width);
    return loyalty_loss(b[0], cnn_forward(b[1], b[2], p));
  };
  inst.gradient = [=](const Blocks& b) {
    const CnnParams p = cnn_from_blocks(b, 3, d, filters, width);
    const Vec out = cnn_forward(b[1], b[2], p);
    const auto lg = loyalty_loss_grad(b[0], out);
    const auto cg = cnn_backward(b[1], b[2], p, lg.cnn_out);
    return Blocks{lg.user,
                  cg.rel,
                  cg.val,
                  cg.params.kernels.data(),
                  cg.params.filter_bias,
                  cg.params.projection.data(),
                  cg.params.projection_bias};
  };
  inst.near_kink = [=, tol = o.kink_tolerance](const Blocks& b) {
    const CnnParams p = cnn_from_blocks(b, 3, d, filters, width);
    const Vec out = cnn_forward(b[1], b[2], p);
    for (std::size_t i = 0; i < d; ++i) {
      if (std::abs(b[0][i] - out[i]) < tol) return true;
    }
    // Max-pool switch: the two largest activations of a filter must be apart.
    for (std::size_t f = 0; f < filters; ++f) {
      Vec acts;
      for (std::size_t pos = 0; pos < p.positions(); ++pos) {
        double z = p.filter_bias[f];
        for (std::size_t c = 0; c < width; ++c) {
          z += p.kernels(f, c) * b[1][pos + c] + p.kernels(f, width + c) * b[2][pos + c];
        }
        acts.push_back(std::tanh(z));
      }
      std::sort(acts.begin(), acts.end(), std::greater<>());
      if (acts.size() > 1 && acts[0] - acts[1] < tol) return true;
    }
    return false;
  };
  return inst;
}

}  // namespace detail

// Draws a random instance of the given loss (redrawing near kinks) and
// compares the analytic gradient with central finite differences. The
// relative error of a coordinate is max(0, |a - n| - e) / max(|a|, |n|, 1e-6),
// where e = 8 * eps * max(|L+|, |L-|, 1) / (2h) bounds the rounding error of
// the difference quotient itself.
inline GradCheckResult grad_check(LossKind kind, Rng& rng, const GradCheckOptions& options = {}) {
  GradCheckResult result;
  detail::Instance inst;
  for (;; ++result.redraws) {
    switch (kind) {
      case LossKind::kKge: inst = detail::make_kge_instance(options, rng); break;
      case LossKind::kDemography: inst = detail::make_demography_instance(options, rng); break;
      case LossKind::kLoyalty: inst = detail::make_loyalty_instance(options, rng); break;
    }
    if (!inst.near_kink(inst.blocks)) break;
    if (result.redraws > 10000) fail("grad_check: could not draw a kink-free instance");
  }
  result.loss = inst.loss(inst.blocks);
  const detail::Blocks analytic = inst.gradient(inst.blocks);
  detail::Blocks probe = inst.blocks;
  for (std::size_t b = 0; b < probe.size(); ++b) {
    for (std::size_t i = 0; i < probe[b].size(); ++i) {
      const double saved = probe[b][i];
      probe[b][i] = saved + options.step;
      const double up = inst.loss(probe);
      probe[b][i] = saved - options.step;
      const double down = inst.loss(probe);
      probe[b][i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[b][i];
      const double rounding = 8.0 * std::numeric_limits<double>::epsilon() *
                              std::max({std::abs(up), std::abs(down), 1.0}) / (2.0 * options.step);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      result.max_relative_error =
          std::max(result.max_relative_error, std::max(0.0, std::abs(a - numeric) - rounding) / denom);
      ++result.parameters;
    }
  }
  return result;
}

}  // namespace lookalike
