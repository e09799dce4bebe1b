// SPDX-License-Identifier: Apache-2.0
// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the code under test except for plain data types.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vidlm/features.hpp"
#include "vidlm/nn.hpp"
#include "vidlm/rng.hpp"
#include "vidlm/tensor.hpp"

namespace oracle {

using vidlm::Index;
using vidlm::Matrix;
using vidlm::Vector;

inline constexpr double kFdStep = 1e-5;

// |a - f| / max(|a|, |f|, floor)
inline double rel_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central difference of f with respect to the scalar x, restored afterwards.
inline double central_difference(const std::function<double()>& f, double& x, double h = kFdStep) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

// Central difference along a direction over a set of coordinates.
inline double directional_difference(const std::function<double()>& f, std::span<double* const> coords,
                                     std::span<const double> direction, double h = kFdStep) {
  std::vector<double> saved(coords.size());
  for (std::size_t k = 0; k < coords.size(); ++k) saved[k] = *coords[k];
  for (std::size_t k = 0; k < coords.size(); ++k) *coords[k] = saved[k] + h * direction[k];
  const double up = f();
  for (std::size_t k = 0; k < coords.size(); ++k) *coords[k] = saved[k] - h * direction[k];
  const double down = f();
  for (std::size_t k = 0; k < coords.size(); ++k) *coords[k] = saved[k];
  return (up - down) / (2.0 * h);
}

inline double frobenius_dot(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (Index r = 0; r < a.rows(); ++r)
    for (Index c = 0; c < a.cols(); ++c) s += a(r, c) * b(r, c);
  return s;
}

inline Matrix random_matrix(Index rows, Index cols, vidlm::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = vidlm::uniform(rng, lo, hi);
  return m;
}

inline vidlm::VideoFeatures random_video(std::size_t frames, std::size_t dim, vidlm::Rng& rng) {
  vidlm::VideoFeatures v;
  v.dim = dim;
  for (std::size_t t = 0; t < frames; ++t) {
    vidlm::FrameFeatures f;
    f.cls = random_matrix(1, static_cast<Index>(dim), rng).row(0).transpose();
    f.patches = random_matrix(static_cast<Index>(vidlm::kPatchCount), static_cast<Index>(dim), rng);
    v.frames.push_back(std::move(f));
  }
  return v;
}

// Per-patch arithmetic mean over frames, one scalar at a time.
inline Matrix mean_over_frames(const vidlm::VideoFeatures& v) {
  const Index rows = static_cast<Index>(vidlm::kPatchCount);
  const Index dim = static_cast<Index>(v.dim);
  Matrix out(rows, dim);
  for (Index i = 0; i < rows; ++i) {
    for (Index d = 0; d < dim; ++d) {
      double s = 0.0;
      for (const auto& f : v.frames) s += f.patches(i, d);
      out(i, d) = s / static_cast<double>(v.frames.size());
    }
  }
  return out;
}

// Per-patch softmax over frames of w . V_t^i + b, then the weighted sum.
inline Matrix softmax_weighted(const vidlm::VideoFeatures& v, const Vector& w, double b) {
  const Index rows = static_cast<Index>(vidlm::kPatchCount);
  const Index dim = static_cast<Index>(v.dim);
  const std::size_t frames = v.frames.size();
  Matrix out = Matrix::Zero(rows, dim);
  for (Index i = 0; i < rows; ++i) {
    std::vector<double> score(frames);
    for (std::size_t t = 0; t < frames; ++t) {
      double s = b;
      for (Index d = 0; d < dim; ++d) s += w(d) * v.frames[t].patches(i, d);
      score[t] = s;
    }
    const double peak = *std::max_element(score.begin(), score.end());
    double z = 0.0;
    for (double& s : score) z += (s = std::exp(s - peak));
    for (std::size_t t = 0; t < frames; ++t)
      for (Index d = 0; d < dim; ++d) out(i, d) += score[t] / z * v.frames[t].patches(i, d);
  }
  return out;
}

// Scalar triple-loop x * w + bias.
inline Matrix affine_loops(const Matrix& x, const Matrix& w, const Vector& bias) {
  Matrix out(x.rows(), w.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    for (Index c = 0; c < w.cols(); ++c) {
      double s = bias(c);
      for (Index k = 0; k < x.cols(); ++k) s += x(r, k) * w(k, c);
      out(r, c) = s;
    }
  }
  return out;
}

// Lowercase, every character other than letters, digits, apostrophes and
// hyphens becomes a space, surrounded by single spaces.
inline std::string padded_words(const std::string& text) {
  std::string out = " ";
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    const bool word = std::isalnum(u) || c == '\'' || c == '-' || u >= 0x80;
    const char mapped = word ? static_cast<char>(std::tolower(u)) : ' ';
    if (mapped == ' ' && out.back() == ' ') continue;
    out += mapped;
  }
  if (out.back() != ' ') out += ' ';
  return out;
}

// Number of captions containing phrase as whole words, by substring search.
inline std::size_t count_captions(std::span<const std::string> captions, const std::string& phrase) {
  const std::string needle = " " + phrase + " ";
  std::size_t n = 0;
  for (const auto& c : captions) {
    if (padded_words(c).find(needle) != std::string::npos) ++n;
  }
  return n;
}

inline std::size_t count_substring(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
  return n;
}

inline std::size_t whitespace_token_count(const std::string& text) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Straight-line scalar transformer layer (pre-norm, single head, exact GELU).

using Seq = std::vector<std::vector<double>>;

inline std::vector<double> scalar_layer_norm(const std::vector<double>& x, const Vector& gain, const Vector& shift) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  std::vector<double> out(n);
  for (std::size_t d = 0; d < n; ++d) {
    out[d] = (x[d] - mean) / std::sqrt(var + 1e-5) * gain(static_cast<Index>(d)) + shift(static_cast<Index>(d));
  }
  return out;
}

inline std::vector<double> scalar_linear(const std::vector<double>& x, const vidlm::nn::LinearParams& p) {
  std::vector<double> out(static_cast<std::size_t>(p.weight.cols()));
  for (std::size_t c = 0; c < out.size(); ++c) {
    double s = p.bias(static_cast<Index>(c));
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * p.weight(static_cast<Index>(k), static_cast<Index>(c));
    out[c] = s;
  }
  return out;
}

inline Seq scalar_transformer_layer(const vidlm::nn::TransformerLayerParams& p, const Seq& x, bool causal) {
  const std::size_t len = x.size();
  const std::size_t dim = x.front().size();
  Seq q(len), k(len), v(len);
  for (std::size_t t = 0; t < len; ++t) {
    const auto n = scalar_layer_norm(x[t], p.norm1.gain, p.norm1.shift);
    q[t] = scalar_linear(n, p.query);
    k[t] = scalar_linear(n, p.key);
    v[t] = scalar_linear(n, p.value);
  }
  Seq out(len);
  for (std::size_t a = 0; a < len; ++a) {
    const std::size_t visible = causal ? a + 1 : len;
    std::vector<double> w(visible);
    double peak = -INFINITY;
    for (std::size_t b = 0; b < visible; ++b) {
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) s += q[a][d] * k[b][d];
      w[b] = s / std::sqrt(static_cast<double>(dim));
      peak = std::max(peak, w[b]);
    }
    double z = 0.0;
    for (double& e : w) z += (e = std::exp(e - peak));
    std::vector<double> attended(dim, 0.0);
    for (std::size_t b = 0; b < visible; ++b)
      for (std::size_t d = 0; d < dim; ++d) attended[d] += w[b] / z * v[b][d];
    const auto proj = scalar_linear(attended, p.output);
    std::vector<double> h(dim);
    for (std::size_t d = 0; d < dim; ++d) h[d] = x[a][d] + proj[d];
    auto inner = scalar_linear(scalar_layer_norm(h, p.norm2.gain, p.norm2.shift), p.ff_in);
    for (double& u : inner) u = 0.5 * u * (1.0 + std::erf(u / std::sqrt(2.0)));
    const auto ff = scalar_linear(inner, p.ff_out);
    out[a].resize(dim);
    for (std::size_t d = 0; d < dim; ++d) out[a][d] = h[d] + ff[d];
  }
  return out;
}

// Per patch: frames plus positional rows through the layer, last position
// taken, frame mean added.
inline Matrix v3_aggregate(const vidlm::VideoFeatures& v, const vidlm::nn::TransformerLayerParams& layer,
                           const Matrix& positional) {
  const Matrix mean = mean_over_frames(v);
  Matrix out(mean.rows(), mean.cols());
  for (Index i = 0; i < mean.rows(); ++i) {
    Seq seq;
    for (std::size_t t = 0; t < v.frames.size(); ++t) {
      std::vector<double> row(v.dim);
      for (std::size_t d = 0; d < v.dim; ++d) {
        row[d] = v.frames[t].patches(i, static_cast<Index>(d)) + positional(static_cast<Index>(t), static_cast<Index>(d));
      }
      seq.push_back(std::move(row));
    }
    const Seq y = scalar_transformer_layer(layer, seq, false);
    for (std::size_t d = 0; d < v.dim; ++d) out(i, static_cast<Index>(d)) = y.back()[d] + mean(i, static_cast<Index>(d));
  }
  return out;
}

}  // namespace oracle
