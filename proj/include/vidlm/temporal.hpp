// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vidlm/features.hpp"
#include "vidlm/nn.hpp"
#include "vidlm/param_io.hpp"
#include "vidlm/tensor.hpp"

// Temporal aggregation: T frames of 256 patch tokens -> one set of 256 tokens.
//   v1  per-patch mean over frames
//   v2  per-patch softmax-weighted sum, scores from a shared linear layer
//   v3  per-patch one-layer transformer over time; the last position's output
//       is added to the v1 mean
namespace vidlm {

enum class TemporalVariant { v1, v2, v3 };

TemporalVariant parse_temporal_variant(std::string_view name);
std::string_view to_string(TemporalVariant variant);

struct AggregatedPatches {
  Matrix patches;  // kPatchCount x dim
};

struct TemporalParamsV2 {
  Vector score_weights;
  double score_bias = 0.0;

  void collect(const std::string& prefix, std::vector<ParamView>& out);
  void collect(const std::string& prefix, std::vector<ConstParamView>& out) const;
};

struct TemporalParamsV3 {
  nn::TransformerLayerParams layer;
  Matrix positional;  // max_frames x dim, fixed (not trained)

  std::size_t max_frames() const { return static_cast<std::size_t>(positional.rows()); }
  void collect(const std::string& prefix, std::vector<ParamView>& out);
  void collect(const std::string& prefix, std::vector<ConstParamView>& out) const;
};

// v1 carries no parameters.
using TemporalParams = std::variant<std::monostate, TemporalParamsV2, TemporalParamsV3>;

TemporalVariant variant_of(const TemporalParams& params);
void collect(TemporalParams& params, const std::string& prefix, std::vector<ParamView>& out);
void collect(const TemporalParams& params, const std::string& prefix, std::vector<ConstParamView>& out);

// v1: empty; v2: zeros (so v2 == v1 at init); v3: uniform(-1/sqrt(D), 1/sqrt(D))
// matrices, zero biases, identity norms, sinusoidal positions.
TemporalParams init_temporal_params(TemporalVariant variant, std::size_t dim, std::size_t max_frames,
                                    std::uint64_t seed);

AggregatedPatches aggregate_v1(const VideoFeatures& features);
AggregatedPatches aggregate_v2(const VideoFeatures& features, const TemporalParamsV2& params);
AggregatedPatches aggregate_v3(const VideoFeatures& features, const TemporalParamsV3& params);
AggregatedPatches aggregate(const VideoFeatures& features, const TemporalParams& params);

// Softmax frame weights of v2, kPatchCount x T.
Matrix v2_frame_weights(const VideoFeatures& features, const TemporalParamsV2& params);

struct TemporalGradients {
  TemporalParams params;      // same alternative and shapes as the input params
  std::vector<Matrix> frames;  // d/d patches of each input frame
};

// Gradients of <upstream, aggregate(features, params)>.
TemporalGradients temporal_backward(const VideoFeatures& features, const TemporalParams& params,
                                    const Matrix& upstream);

// Same alternative and shapes as params, all zeros.
TemporalParams zeros_like(const TemporalParams& params);

}  // namespace vidlm
