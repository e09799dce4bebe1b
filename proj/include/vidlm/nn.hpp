// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vidlm/param_io.hpp"
#include "vidlm/rng.hpp"
#include "vidlm/tensor.hpp"

// Dense layers with explicit forward caches and analytic backward passes.
// Activations are row-major: one token per row. A batch of independent
// sequences of equal length L is stacked sequence-major, so rows
// [s*L, (s+1)*L) belong to sequence s.
namespace vidlm::nn {

inline constexpr double kLayerNormEps = 1e-5;

// y = x * weight + bias, weight is in_dim x out_dim.
struct LinearParams {
  Matrix weight;
  Vector bias;

  static LinearParams zeros(std::size_t in_dim, std::size_t out_dim);
  void collect(const std::string& prefix, std::vector<ParamView>& out);
  void collect(const std::string& prefix, std::vector<ConstParamView>& out) const;
};

struct LayerNormParams {
  Vector gain;
  Vector shift;

  static LayerNormParams identity(std::size_t dim);
  void collect(const std::string& prefix, std::vector<ParamView>& out);
  void collect(const std::string& prefix, std::vector<ConstParamView>& out) const;
};

// Pre-norm layer, single attention head:
//   h = x + Attn(LN1(x));  y = h + FFN(LN2(h));  FFN(z) = GELU(z W1 + b1) W2 + b2
struct TransformerLayerParams {
  LinearParams query;
  LinearParams key;
  LinearParams value;
  LinearParams output;
  LinearParams ff_in;
  LinearParams ff_out;
  LayerNormParams norm1;
  LayerNormParams norm2;

  static TransformerLayerParams zeros(std::size_t dim, std::size_t ff_dim);
  std::size_t dim() const { return static_cast<std::size_t>(query.weight.rows()); }
  void collect(const std::string& prefix, std::vector<ParamView>& out);
  void collect(const std::string& prefix, std::vector<ConstParamView>& out) const;
};

// Matrices uniform(-bound, bound), biases zero, norms identity.
TransformerLayerParams init_transformer_layer(std::size_t dim, std::size_t ff_dim, double bound, Rng& rng);

struct LayerNormCache {
  Matrix normalized;
  Vector inv_std;
};

Matrix linear_forward(const LinearParams& p, const Matrix& x);
// Accumulates weight/bias gradients into grads; returns dL/dx.
Matrix linear_backward(const LinearParams& p, const Matrix& x, const Matrix& dy, LinearParams& grads);

Matrix layer_norm_forward(const LayerNormParams& p, const Matrix& x, LayerNormCache* cache);
Matrix layer_norm_backward(const LayerNormParams& p, const LayerNormCache& cache, const Matrix& dy,
                           LayerNormParams& grads);

double gelu(double x);
double gelu_derivative(double x);

struct TransformerLayerCache {
  std::size_t seq_len = 0;
  bool causal = false;
  Matrix input;
  LayerNormCache ln1;
  Matrix normed1;
  Matrix q, k, v;
  Matrix probs;  // stacked per sequence, (num_seq * L) x L
  Matrix attended;
  Matrix hidden;
  LayerNormCache ln2;
  Matrix normed2;
  Matrix pre_act;
  Matrix activated;
};

Matrix transformer_layer_forward(const TransformerLayerParams& p, const Matrix& x, std::size_t seq_len,
                                 bool causal, TransformerLayerCache* cache);

// Accumulates parameter gradients into grads; returns dL/dx.
Matrix transformer_layer_backward(const TransformerLayerParams& p, const TransformerLayerCache& cache,
                                  const Matrix& dy, TransformerLayerParams& grads);

// Standard sin/cos table: even columns sin(pos / 10000^(2i/d)), odd columns cos.
Matrix sinusoidal_table(std::size_t rows, std::size_t dim);

}  // namespace vidlm::nn
