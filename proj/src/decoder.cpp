// SPDX-License-Identifier: Apache-2.0
#include "vidlm/decoder.hpp"

#include <cmath>
#include <stdexcept>

#include "vidlm/rng.hpp"

namespace vidlm {

namespace {

template <typename Self, typename Views>
void collect_decoder(Self& p, const std::string& prefix, Views& out) {
  out.push_back(view_of(prefix + ".embedding", p.embedding));
  for (std::size_t b = 0; b < p.blocks.size(); ++b) p.blocks[b].collect(prefix + ".blocks." + std::to_string(b), out);
  p.final_norm.collect(prefix + ".final_norm", out);
}

}  // namespace

void TinyDecoderParams::collect(const std::string& prefix, std::vector<ParamView>& out) {
  collect_decoder(*this, prefix, out);
}
void TinyDecoderParams::collect(const std::string& prefix, std::vector<ConstParamView>& out) const {
  collect_decoder(*this, prefix, out);
}

TinyDecoderParams init_tiny_decoder(std::size_t vocab, std::size_t dim, std::uint64_t seed) {
  if (vocab < kMinVocab) throw std::invalid_argument("vocabulary must hold at least 8 tokens");
  if (dim == 0) throw std::invalid_argument("decoder dimension must be positive");
  Rng rng(seed);
  TinyDecoderParams p;
  p.embedding.resize(static_cast<Index>(vocab), static_cast<Index>(dim));
  for (Index k = 0; k < p.embedding.size(); ++k) p.embedding.data()[k] = uniform(rng, -0.5, 0.5);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t b = 0; b < kDecoderBlocks; ++b) p.blocks.push_back(nn::init_transformer_layer(dim, 4 * dim, bound, rng));
  p.final_norm = nn::LayerNormParams::identity(dim);
  return p;
}

TinyDecoderParams zeros_like(const TinyDecoderParams& params) {
  TinyDecoderParams z;
  z.embedding = Matrix::Zero(params.embedding.rows(), params.embedding.cols());
  for (const auto& b : params.blocks) {
    z.blocks.push_back(nn::TransformerLayerParams::zeros(b.dim(), static_cast<std::size_t>(b.ff_in.weight.cols())));
  }
  for (auto& b : z.blocks) {
    b.norm1.gain.setZero();
    b.norm2.gain.setZero();
  }
  z.final_norm = {Vector::Zero(params.final_norm.gain.size()), Vector::Zero(params.final_norm.shift.size())};
  return z;
}

Matrix embed_tokens(const TinyDecoderParams& params, std::span<const std::int64_t> tokens) {
  Matrix out(static_cast<Index>(tokens.size()), params.embedding.cols());
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    if (tokens[j] < 0 || static_cast<std::size_t>(tokens[j]) >= params.vocab()) {
      throw std::invalid_argument("token id out of vocabulary: " + std::to_string(tokens[j]));
    }
    out.row(static_cast<Index>(j)) = params.embedding.row(tokens[j]);
  }
  return out;
}

Matrix decoder_forward(const TinyDecoderParams& params, const Matrix& inputs, DecoderCache* cache) {
  if (inputs.cols() != params.embedding.cols()) throw std::invalid_argument("decoder input width mismatch");
  const auto len = static_cast<std::size_t>(inputs.rows());
  Matrix h = inputs + nn::sinusoidal_table(len, params.dim());
  if (cache) cache->blocks.assign(params.blocks.size(), {});
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    h = nn::transformer_layer_forward(params.blocks[b], h, len, true, cache ? &cache->blocks[b] : nullptr);
  }
  Matrix normed = nn::layer_norm_forward(params.final_norm, h, cache ? &cache->final_norm : nullptr);
  Matrix logits = normed * params.embedding.transpose();
  if (cache) cache->normed = std::move(normed);
  return logits;
}

Matrix decoder_backward(const TinyDecoderParams& params, const DecoderCache& cache, const Matrix& dlogits,
                        TinyDecoderParams& grads) {
  grads.embedding.noalias() += dlogits.transpose() * cache.normed;
  Matrix dh = dlogits * params.embedding;
  dh = nn::layer_norm_backward(params.final_norm, cache.final_norm, dh, grads.final_norm);
  for (std::size_t b = params.blocks.size(); b-- > 0;) {
    dh = nn::transformer_layer_backward(params.blocks[b], cache.blocks[b], dh, grads.blocks[b]);
  }
  return dh;
}

}  // namespace vidlm
