// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vidlm/features.hpp"
#include "vidlm/param_io.hpp"
#include "vidlm/temporal.hpp"
#include "vidlm/tensor.hpp"

namespace vidlm {

// Aggregated patch rows followed by one global token per frame.
struct VideoTokenSequence {
  Matrix tokens;  // (kPatchCount + frames) x dim
  std::size_t frames = 0;

  Index patch_rows() const { return static_cast<Index>(kPatchCount); }
  Index row_count() const { return tokens.rows(); }
};

// Affine map from vision feature space to the language embedding space.
struct ProjectionParams {
  Matrix weight;  // dim x llm_dim
  Vector bias;    // llm_dim

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.rows()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.cols()); }
  void collect(const std::string& prefix, std::vector<ParamView>& out);
  void collect(const std::string& prefix, std::vector<ConstParamView>& out) const;
};

// Uniform(-1/sqrt(dim), 1/sqrt(dim)) weight, zero bias.
ProjectionParams init_projection(std::size_t dim, std::size_t llm_dim, std::uint64_t seed);

VideoTokenSequence assemble_video_tokens(const AggregatedPatches& aggregated, const VideoFeatures& features);

Matrix project_tokens(const VideoTokenSequence& sequence, const ProjectionParams& params);

struct ProjectionGradients {
  ProjectionParams params;
  Matrix input;  // same shape as sequence.tokens
};

// Gradients of <upstream, project_tokens(sequence, params)>.
ProjectionGradients projection_backward(const VideoTokenSequence& sequence, const ProjectionParams& params,
                                        const Matrix& upstream);

}  // namespace vidlm
