// SPDX-License-Identifier: Apache-2.0
#include "vidlm/assembly.hpp"

#include <cmath>
#include <stdexcept>

#include "vidlm/rng.hpp"

namespace vidlm {

namespace {

template <typename Self, typename Views>
void collect_projection(Self& p, const std::string& prefix, Views& out) {
  out.push_back(view_of(prefix + ".weight", p.weight));
  out.push_back(view_of(prefix + ".bias", p.bias));
}

void check_projection(const VideoTokenSequence& sequence, const ProjectionParams& params) {
  if (params.weight.rows() != sequence.tokens.cols()) {
    throw std::invalid_argument("projector input dimension does not match token dimension");
  }
  if (params.bias.size() != params.weight.cols()) {
    throw std::invalid_argument("projector bias does not match output dimension");
  }
  if (sequence.tokens.rows() != static_cast<Index>(kPatchCount + sequence.frames)) {
    throw std::invalid_argument("token sequence must have 256 + T rows");
  }
}

}  // namespace

void ProjectionParams::collect(const std::string& prefix, std::vector<ParamView>& out) {
  collect_projection(*this, prefix, out);
}
void ProjectionParams::collect(const std::string& prefix, std::vector<ConstParamView>& out) const {
  collect_projection(*this, prefix, out);
}

ProjectionParams init_projection(std::size_t dim, std::size_t llm_dim, std::uint64_t seed) {
  if (dim == 0 || llm_dim == 0) throw std::invalid_argument("projection dimensions must be positive");
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  ProjectionParams p{Matrix(static_cast<Index>(dim), static_cast<Index>(llm_dim)),
                     Vector::Zero(static_cast<Index>(llm_dim))};
  for (Index k = 0; k < p.weight.size(); ++k) p.weight.data()[k] = uniform(rng, -bound, bound);
  return p;
}

VideoTokenSequence assemble_video_tokens(const AggregatedPatches& aggregated, const VideoFeatures& features) {
  features.validate();
  const auto dim = static_cast<Index>(features.dim);
  if (aggregated.patches.rows() != static_cast<Index>(kPatchCount) || aggregated.patches.cols() != dim) {
    throw std::invalid_argument("aggregated patches must be 256 x D with the features' D");
  }
  VideoTokenSequence out;
  out.frames = features.frames.size();
  out.tokens.resize(static_cast<Index>(kPatchCount + out.frames), dim);
  out.tokens.topRows(static_cast<Index>(kPatchCount)) = aggregated.patches;
  for (std::size_t t = 0; t < out.frames; ++t) {
    out.tokens.row(static_cast<Index>(kPatchCount + t)) = features.frames[t].cls.transpose();
  }
  return out;
}

Matrix project_tokens(const VideoTokenSequence& sequence, const ProjectionParams& params) {
  check_projection(sequence, params);
  Matrix out = sequence.tokens * params.weight;
  out.rowwise() += params.bias.transpose();
  return out;
}

ProjectionGradients projection_backward(const VideoTokenSequence& sequence, const ProjectionParams& params,
                                        const Matrix& upstream) {
  check_projection(sequence, params);
  if (upstream.rows() != sequence.tokens.rows() || upstream.cols() != params.weight.cols()) {
    throw std::invalid_argument("upstream gradient must be (256 + T) x llm_dim");
  }
  ProjectionGradients g;
  g.params.weight = sequence.tokens.transpose() * upstream;
  g.params.bias = upstream.colwise().sum().transpose();
  g.input = upstream * params.weight.transpose();
  return g;
}

}  // namespace vidlm
