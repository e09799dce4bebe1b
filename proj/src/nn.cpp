// SPDX-License-Identifier: Apache-2.0
#include "vidlm/nn.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace vidlm::nn {

namespace {

template <typename Self, typename Views>
void collect_linear(Self& p, const std::string& prefix, Views& out) {
  out.push_back(view_of(prefix + ".weight", p.weight));
  out.push_back(view_of(prefix + ".bias", p.bias));
}

template <typename Self, typename Views>
void collect_norm(Self& p, const std::string& prefix, Views& out) {
  out.push_back(view_of(prefix + ".gain", p.gain));
  out.push_back(view_of(prefix + ".shift", p.shift));
}

template <typename Self, typename Views>
void collect_layer(Self& p, const std::string& prefix, Views& out) {
  p.query.collect(prefix + ".attn.query", out);
  p.key.collect(prefix + ".attn.key", out);
  p.value.collect(prefix + ".attn.value", out);
  p.output.collect(prefix + ".attn.output", out);
  p.norm1.collect(prefix + ".norm1", out);
  p.ff_in.collect(prefix + ".ffn.in", out);
  p.ff_out.collect(prefix + ".ffn.out", out);
  p.norm2.collect(prefix + ".norm2", out);
}

void fill_uniform(Matrix& m, double bound, Rng& rng) {
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = uniform(rng, -bound, bound);
}

}  // namespace

LinearParams LinearParams::zeros(std::size_t in_dim, std::size_t out_dim) {
  return {Matrix::Zero(static_cast<Index>(in_dim), static_cast<Index>(out_dim)),
          Vector::Zero(static_cast<Index>(out_dim))};
}
void LinearParams::collect(const std::string& prefix, std::vector<ParamView>& out) {
  collect_linear(*this, prefix, out);
}
void LinearParams::collect(const std::string& prefix, std::vector<ConstParamView>& out) const {
  collect_linear(*this, prefix, out);
}

LayerNormParams LayerNormParams::identity(std::size_t dim) {
  return {Vector::Ones(static_cast<Index>(dim)), Vector::Zero(static_cast<Index>(dim))};
}
void LayerNormParams::collect(const std::string& prefix, std::vector<ParamView>& out) {
  collect_norm(*this, prefix, out);
}
void LayerNormParams::collect(const std::string& prefix, std::vector<ConstParamView>& out) const {
  collect_norm(*this, prefix, out);
}

TransformerLayerParams TransformerLayerParams::zeros(std::size_t dim, std::size_t ff_dim) {
  TransformerLayerParams p;
  p.query = LinearParams::zeros(dim, dim);
  p.key = LinearParams::zeros(dim, dim);
  p.value = LinearParams::zeros(dim, dim);
  p.output = LinearParams::zeros(dim, dim);
  p.ff_in = LinearParams::zeros(dim, ff_dim);
  p.ff_out = LinearParams::zeros(ff_dim, dim);
  p.norm1 = LayerNormParams::identity(dim);
  p.norm2 = LayerNormParams::identity(dim);
  return p;
}
void TransformerLayerParams::collect(const std::string& prefix, std::vector<ParamView>& out) {
  collect_layer(*this, prefix, out);
}
void TransformerLayerParams::collect(const std::string& prefix, std::vector<ConstParamView>& out) const {
  collect_layer(*this, prefix, out);
}

TransformerLayerParams init_transformer_layer(std::size_t dim, std::size_t ff_dim, double bound, Rng& rng) {
  TransformerLayerParams p = TransformerLayerParams::zeros(dim, ff_dim);
  for (LinearParams* lin : {&p.query, &p.key, &p.value, &p.output, &p.ff_in, &p.ff_out}) {
    fill_uniform(lin->weight, bound, rng);
  }
  return p;
}

Matrix linear_forward(const LinearParams& p, const Matrix& x) {
  Matrix y = x * p.weight;
  y.rowwise() += p.bias.transpose();
  return y;
}

Matrix linear_backward(const LinearParams& p, const Matrix& x, const Matrix& dy, LinearParams& grads) {
  grads.weight.noalias() += x.transpose() * dy;
  grads.bias += dy.colwise().sum().transpose();
  return dy * p.weight.transpose();
}

Matrix layer_norm_forward(const LayerNormParams& p, const Matrix& x, LayerNormCache* cache) {
  const Index rows = x.rows();
  const Index dim = x.cols();
  Matrix normalized(rows, dim);
  Vector inv_std(rows);
  for (Index r = 0; r < rows; ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + kLayerNormEps);
    normalized.row(r) = (x.row(r).array() - mean) * inv_std(r);
  }
  Matrix y = (normalized.array().rowwise() * p.gain.transpose().array()).matrix();
  y.rowwise() += p.shift.transpose();
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix layer_norm_backward(const LayerNormParams& p, const LayerNormCache& cache, const Matrix& dy,
                           LayerNormParams& grads) {
  const Matrix& xhat = cache.normalized;
  grads.gain += (dy.array() * xhat.array()).colwise().sum().transpose().matrix();
  grads.shift += dy.colwise().sum().transpose();

  const Matrix dxhat = (dy.array().rowwise() * p.gain.transpose().array()).matrix();
  Matrix dx(dy.rows(), dy.cols());
  for (Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).mean();
    const double mean_dx = (dxhat.row(r).array() * xhat.row(r).array()).mean();
    dx.row(r) = cache.inv_std(r) * (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx);
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

Matrix transformer_layer_forward(const TransformerLayerParams& p, const Matrix& x, std::size_t seq_len,
                                 bool causal, TransformerLayerCache* cache) {
  const Index dim = x.cols();
  const auto len = static_cast<Index>(seq_len);
  if (len == 0 || x.rows() % len != 0) throw std::invalid_argument("rows are not a whole number of sequences");
  if (static_cast<std::size_t>(dim) != p.dim()) throw std::invalid_argument("layer dimension mismatch");
  const Index num_seq = x.rows() / len;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));

  TransformerLayerCache local;
  TransformerLayerCache& c = cache ? *cache : local;
  c.seq_len = seq_len;
  c.causal = causal;
  c.input = x;
  c.normed1 = layer_norm_forward(p.norm1, x, &c.ln1);
  c.q = linear_forward(p.query, c.normed1);
  c.k = linear_forward(p.key, c.normed1);
  c.v = linear_forward(p.value, c.normed1);

  c.probs.resize(num_seq * len, len);
  c.attended.resize(x.rows(), dim);
  for (Index s = 0; s < num_seq; ++s) {
    const Index r0 = s * len;
    Matrix scores = c.q.middleRows(r0, len) * c.k.middleRows(r0, len).transpose() * scale;
    for (Index i = 0; i < len; ++i) {
      const Index visible = causal ? i + 1 : len;
      const double peak = scores.row(i).head(visible).maxCoeff();
      double total = 0.0;
      for (Index j = 0; j < len; ++j) {
        const double e = j < visible ? std::exp(scores(i, j) - peak) : 0.0;
        scores(i, j) = e;
        total += e;
      }
      scores.row(i) /= total;
    }
    c.attended.middleRows(r0, len).noalias() = scores * c.v.middleRows(r0, len);
    c.probs.middleRows(r0, len) = scores;
  }

  c.hidden = x + linear_forward(p.output, c.attended);
  c.normed2 = layer_norm_forward(p.norm2, c.hidden, &c.ln2);
  c.pre_act = linear_forward(p.ff_in, c.normed2);
  c.activated = c.pre_act.unaryExpr([](double u) { return gelu(u); });
  return c.hidden + linear_forward(p.ff_out, c.activated);
}

Matrix transformer_layer_backward(const TransformerLayerParams& p, const TransformerLayerCache& c,
                                  const Matrix& dy, TransformerLayerParams& grads) {
  const auto len = static_cast<Index>(c.seq_len);
  const Index num_seq = dy.rows() / len;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dy.cols()));

  // Feed-forward branch.
  Matrix d_act = linear_backward(p.ff_out, c.activated, dy, grads.ff_out);
  Matrix d_pre = (d_act.array() * c.pre_act.unaryExpr([](double u) { return gelu_derivative(u); }).array()).matrix();
  Matrix d_normed2 = linear_backward(p.ff_in, c.normed2, d_pre, grads.ff_in);
  Matrix d_hidden = dy + layer_norm_backward(p.norm2, c.ln2, d_normed2, grads.norm2);

  // Attention branch.
  Matrix d_attended = linear_backward(p.output, c.attended, d_hidden, grads.output);
  Matrix dq(dy.rows(), dy.cols());
  Matrix dk(dy.rows(), dy.cols());
  Matrix dv(dy.rows(), dy.cols());
  for (Index s = 0; s < num_seq; ++s) {
    const Index r0 = s * len;
    const auto probs = c.probs.middleRows(r0, len);
    const auto da = d_attended.middleRows(r0, len);
    Matrix dprobs = da * c.v.middleRows(r0, len).transpose();
    dv.middleRows(r0, len).noalias() = probs.transpose() * da;
    Matrix dscores(len, len);
    for (Index i = 0; i < len; ++i) {
      const double dot = (dprobs.row(i).array() * probs.row(i).array()).sum();
      dscores.row(i) = probs.row(i).array() * (dprobs.row(i).array() - dot);
    }
    dscores *= scale;
    dq.middleRows(r0, len).noalias() = dscores * c.k.middleRows(r0, len);
    dk.middleRows(r0, len).noalias() = dscores.transpose() * c.q.middleRows(r0, len);
  }
  Matrix d_normed1 = linear_backward(p.query, c.normed1, dq, grads.query);
  d_normed1 += linear_backward(p.key, c.normed1, dk, grads.key);
  d_normed1 += linear_backward(p.value, c.normed1, dv, grads.value);
  return d_hidden + layer_norm_backward(p.norm1, c.ln1, d_normed1, grads.norm1);
}

Matrix sinusoidal_table(std::size_t rows, std::size_t dim) {
  Matrix table(static_cast<Index>(rows), static_cast<Index>(dim));
  for (Index pos = 0; pos < table.rows(); ++pos) {
    for (Index j = 0; j < table.cols(); ++j) {
      const double exponent = static_cast<double>(2 * (j / 2)) / static_cast<double>(dim);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      table(pos, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return table;
}

}  // namespace vidlm::nn
