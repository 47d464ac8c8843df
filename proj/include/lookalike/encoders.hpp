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

// Differentiable encoders with hand-written gradients:
//
//  * the character n-gram compositional encoder, which maps a literal
//    c_1..c_k to  sum_{n=1..N} mean over windows i of (c_i + ... + c_{i+n-1}),
//    where orders with n > k contribute nothing;
//  * the loyalty CNN over the 2 x d matrix [relation; value]: full-height
//    filters of width w slide over the d columns, tanh, max-pool per filter,
//    then an affine projection back to d.

#pragma once

#include <map>

#include "lookalike/core.hpp"
#include "lookalike/kg_store.hpp"

namespace lookalike {

// |char_vocab| x d.
using CharEmbeddingTable = Matrix;

inline constexpr int kDefaultNgramOrder = 3;

inline Vec ngram_encode(std::span<const CharId> chars, const CharEmbeddingTable& table,
                        int max_order) {
  const std::size_t k = chars.size();
  if (k == 0) fail("ngram_encode: empty literal");
  if (max_order < 1) fail("ngram_encode: n-gram order must be >= 1");
  const std::size_t d = table.cols();
  Vec out(d, 0.0);
  Vec window_sum(d);
  for (std::size_t n = 1; n <= std::min<std::size_t>(max_order, k); ++n) {
    const std::size_t windows = k - n + 1;
    std::fill(window_sum.begin(), window_sum.end(), 0.0);
    for (std::size_t i = 0; i < windows; ++i) {
      for (std::size_t j = i; j < i + n; ++j) {
        axpy(1.0, table.row(chars[j].index()), window_sum);
      }
    }
    axpy(1.0 / static_cast<double>(windows), window_sum, out);
  }
  return out;
}

// Weight of position j in the encoding: sum over orders n of
// (#windows of order n covering j) / (#windows of order n).
inline Vec ngram_coefficients(std::size_t k, int max_order) {
  Vec coef(k, 0.0);
  for (std::size_t n = 1; n <= std::min<std::size_t>(max_order, k); ++n) {
    const double windows = static_cast<double>(k - n + 1);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t first = j + 1 >= n ? j + 1 - n : 0;
      const std::size_t last = std::min(j, k - n);
      coef[j] += static_cast<double>(last - first + 1) / windows;
    }
  }
  return coef;
}

struct RowGradient {
  std::size_t row;
  Vec grad;
};

// Gradient of <ngram_encode(chars), upstream> w.r.t. the character rows,
// one entry per distinct character, ordered by character id.
inline std::vector<RowGradient> ngram_encode_grad(std::span<const CharId> chars,
                                                  const CharEmbeddingTable& table,
                                                  int max_order,
                                                  std::span<const double> upstream) {
  if (chars.empty()) fail("ngram_encode_grad: empty literal");
  if (upstream.size() != table.cols()) fail("ngram_encode_grad: dimension mismatch");
  const Vec coef = ngram_coefficients(chars.size(), max_order);
  std::map<std::size_t, double> merged;
  for (std::size_t j = 0; j < chars.size(); ++j) merged[chars[j].index()] += coef[j];
  std::vector<RowGradient> out;
  out.reserve(merged.size());
  for (const auto& [row, c] : merged) {
    Vec g(upstream.begin(), upstream.end());
    for (double& x : g) x *= c;
    out.push_back({row, std::move(g)});
  }
  return out;
}

struct CnnParams {
  std::size_t dim = 0;
  std::size_t filters = 0;
  std::size_t width = 0;
  Matrix kernels;          // filters x (2 * width): relation taps, then value taps
  Vec filter_bias;         // filters
  Matrix projection;       // dim x filters
  Vec projection_bias;     // dim

  static CnnParams zeros(std::size_t dim, std::size_t filters, std::size_t width) {
    if (width == 0 || filters == 0) fail("cnn: filters and width must be positive");
    if (width > dim) fail("cnn: filter width ", width, " exceeds dimension ", dim);
    CnnParams p;
    p.dim = dim;
    p.filters = filters;
    p.width = width;
    p.kernels = Matrix(filters, 2 * width);
    p.filter_bias.assign(filters, 0.0);
    p.projection = Matrix(dim, filters);
    p.projection_bias.assign(dim, 0.0);
    return p;
  }

  static CnnParams random(std::size_t dim, std::size_t filters, std::size_t width, Rng& rng) {
    CnnParams p = zeros(dim, filters, width);
    const double kernel_bound = 1.0 / std::sqrt(2.0 * static_cast<double>(width));
    const double proj_bound = 1.0 / std::sqrt(static_cast<double>(filters));
    for (double& x : p.kernels.data()) x = uniform(rng, -kernel_bound, kernel_bound);
    for (double& x : p.projection.data()) x = uniform(rng, -proj_bound, proj_bound);
    return p;
  }

  std::size_t positions() const { return dim - width + 1; }

  // Views over every parameter block, in a fixed order.
  std::vector<std::span<double>> blocks() {
    return {kernels.data(), filter_bias, projection.data(), projection_bias};
  }
  std::vector<std::span<const double>> blocks() const {
    return {kernels.data(), filter_bias, projection.data(), projection_bias};
  }

  bool operator==(const CnnParams&) const = default;
};

struct CnnTrace {
  Vec pooled;                    // per filter
  std::vector<std::size_t> argmax;  // per filter, lowest index on ties
  Vec output;
};

inline CnnTrace cnn_forward_trace(std::span<const double> rel, std::span<const double> val,
                                  const CnnParams& p) {
  if (rel.size() != p.dim || val.size() != p.dim) fail("cnn: input dimension mismatch");
  CnnTrace trace;
  trace.pooled.assign(p.filters, 0.0);
  trace.argmax.assign(p.filters, 0);
  const std::size_t w = p.width;
  for (std::size_t f = 0; f < p.filters; ++f) {
    const auto kernel = p.kernels.row(f);
    double best = 0.0;
    for (std::size_t pos = 0; pos < p.positions(); ++pos) {
      double z = p.filter_bias[f];
      for (std::size_t c = 0; c < w; ++c) {
        z += kernel[c] * rel[pos + c] + kernel[w + c] * val[pos + c];
      }
      const double a = std::tanh(z);
      if (pos == 0 || a > best) {
        best = a;
        trace.argmax[f] = pos;
      }
    }
    trace.pooled[f] = best;
  }
  trace.output = p.projection_bias;
  for (std::size_t i = 0; i < p.dim; ++i) {
    trace.output[i] += dot(p.projection.row(i), trace.pooled);
  }
  return trace;
}

inline Vec cnn_forward(std::span<const double> rel, std::span<const double> val,
                       const CnnParams& p) {
  return cnn_forward_trace(rel, val, p).output;
}

struct CnnGradients {
  CnnParams params;
  Vec rel;
  Vec val;
};

// Exact gradient of <cnn_forward(rel, val), upstream>. Max-pool routes each
// filter's gradient to its recorded argmax position only.
inline CnnGradients cnn_backward(std::span<const double> rel, std::span<const double> val,
                                 const CnnParams& p, std::span<const double> upstream) {
  if (upstream.size() != p.dim) fail("cnn: upstream dimension mismatch");
  const CnnTrace trace = cnn_forward_trace(rel, val, p);
  CnnGradients g{CnnParams::zeros(p.dim, p.filters, p.width), Vec(p.dim, 0.0),
                 Vec(p.dim, 0.0)};
  g.params.projection_bias.assign(upstream.begin(), upstream.end());
  const std::size_t w = p.width;
  for (std::size_t f = 0; f < p.filters; ++f) {
    double d_pool = 0.0;
    for (std::size_t i = 0; i < p.dim; ++i) {
      g.params.projection(i, f) = upstream[i] * trace.pooled[f];
      d_pool += p.projection(i, f) * upstream[i];
    }
    const double a = trace.pooled[f];
    const double dz = d_pool * (1.0 - a * a);
    if (dz == 0.0) continue;
    const std::size_t pos = trace.argmax[f];
    const auto kernel = p.kernels.row(f);
    auto d_kernel = g.params.kernels.row(f);
    g.params.filter_bias[f] = dz;
    for (std::size_t c = 0; c < w; ++c) {
      d_kernel[c] = dz * rel[pos + c];
      d_kernel[w + c] = dz * val[pos + c];
      g.rel[pos + c] += dz * kernel[c];
      g.val[pos + c] += dz * kernel[w + c];
    }
  }
  return g;
}

}  // namespace lookalike
