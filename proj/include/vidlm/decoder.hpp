// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vidlm/nn.hpp"
#include "vidlm/param_io.hpp"
#include "vidlm/tensor.hpp"

// A deliberately small causal language model used to exercise gradient flow
// through the projector and temporal module. Input rows are embeddings; the
// caller decides which rows come from tokens and which from video features.
namespace vidlm {

inline constexpr std::size_t kDecoderBlocks = 2;
inline constexpr std::size_t kMinVocab = 8;

struct TinyDecoderParams {
  Matrix embedding;  // vocab x dim, also the output head
  std::vector<nn::TransformerLayerParams> blocks;
  nn::LayerNormParams final_norm;

  std::size_t vocab() const { return static_cast<std::size_t>(embedding.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(embedding.cols()); }
  void collect(const std::string& prefix, std::vector<ParamView>& out);
  void collect(const std::string& prefix, std::vector<ConstParamView>& out) const;
};

TinyDecoderParams init_tiny_decoder(std::size_t vocab, std::size_t dim, std::uint64_t seed);
TinyDecoderParams zeros_like(const TinyDecoderParams& params);

Matrix embed_tokens(const TinyDecoderParams& params, std::span<const std::int64_t> tokens);

struct DecoderCache {
  std::vector<nn::TransformerLayerCache> blocks;
  nn::LayerNormCache final_norm;
  Matrix normed;
};

// One sequence of inputs.rows() positions. Sinusoidal positions are added
// inside; returns logits, positions x vocab.
Matrix decoder_forward(const TinyDecoderParams& params, const Matrix& inputs, DecoderCache* cache);

// Accumulates into grads; returns d loss / d inputs.
Matrix decoder_backward(const TinyDecoderParams& params, const DecoderCache& cache, const Matrix& dlogits,
                        TinyDecoderParams& grads);

}  // namespace vidlm
