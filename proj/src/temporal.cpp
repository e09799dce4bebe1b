// SPDX-License-Identifier: Apache-2.0
#include "vidlm/temporal.hpp"

#include <cmath>
#include <stdexcept>

#include "vidlm/errors.hpp"
#include "vidlm/rng.hpp"

namespace vidlm {

namespace {

constexpr auto kPatches = static_cast<Index>(kPatchCount);

void check_features(const VideoFeatures& features) {
  if (features.frames.empty()) throw std::invalid_argument("temporal aggregation needs at least one frame");
  features.validate();
}

void check_upstream(const VideoFeatures& features, const Matrix& upstream) {
  if (upstream.rows() != kPatches || upstream.cols() != static_cast<Index>(features.dim)) {
    throw std::invalid_argument("upstream gradient must be 256 x D");
  }
}

// Uniform-weight sum, shared by v1 and the mean branch of v3. Written as a
// weighted sum so zero-score v2 reproduces it bit for bit.
Matrix uniform_mean(const VideoFeatures& features) {
  const double w = 1.0 / static_cast<double>(features.frames.size());
  Matrix out = Matrix::Zero(kPatches, static_cast<Index>(features.dim));
  for (const auto& f : features.frames) out += w * f.patches;
  return out;
}

// Rows ordered patch-major: row i*T + t holds frame t of patch i, plus pos_t.
Matrix time_sequences(const VideoFeatures& features, const Matrix& positional) {
  const auto frames = static_cast<Index>(features.frames.size());
  Matrix x(kPatches * frames, static_cast<Index>(features.dim));
  for (Index i = 0; i < kPatches; ++i) {
    for (Index t = 0; t < frames; ++t) {
      x.row(i * frames + t) = features.frames[static_cast<std::size_t>(t)].patches.row(i) + positional.row(t);
    }
  }
  return x;
}

void check_v3(const VideoFeatures& features, const TemporalParamsV3& params) {
  if (params.layer.dim() != features.dim || static_cast<std::size_t>(params.positional.cols()) != features.dim) {
    throw std::invalid_argument("v3 parameter dimension does not match features");
  }
  if (features.frames.size() > params.max_frames()) {
    throw CapacityError("video has " + std::to_string(features.frames.size()) +
                        " frames, positional table holds " + std::to_string(params.max_frames()));
  }
}

template <typename Self, typename Views>
void collect_v2(Self& p, const std::string& prefix, Views& out) {
  out.push_back(view_of(prefix + ".score_weights", p.score_weights));
  out.push_back(view_of(prefix + ".score_bias", p.score_bias));
}

template <typename Self, typename Views>
void collect_v3(Self& p, const std::string& prefix, Views& out) {
  p.layer.collect(prefix + ".encoder", out);
  out.push_back(view_of(prefix + ".positional", p.positional, false));
}

}  // namespace

TemporalVariant parse_temporal_variant(std::string_view name) {
  if (name == "v1") return TemporalVariant::v1;
  if (name == "v2") return TemporalVariant::v2;
  if (name == "v3") return TemporalVariant::v3;
  throw std::invalid_argument("unknown temporal variant: " + std::string(name));
}

std::string_view to_string(TemporalVariant variant) {
  switch (variant) {
    case TemporalVariant::v1: return "v1";
    case TemporalVariant::v2: return "v2";
    case TemporalVariant::v3: return "v3";
  }
  throw std::invalid_argument("unknown temporal variant");
}

void TemporalParamsV2::collect(const std::string& prefix, std::vector<ParamView>& out) {
  collect_v2(*this, prefix, out);
}
void TemporalParamsV2::collect(const std::string& prefix, std::vector<ConstParamView>& out) const {
  collect_v2(*this, prefix, out);
}
void TemporalParamsV3::collect(const std::string& prefix, std::vector<ParamView>& out) {
  collect_v3(*this, prefix, out);
}
void TemporalParamsV3::collect(const std::string& prefix, std::vector<ConstParamView>& out) const {
  collect_v3(*this, prefix, out);
}

TemporalVariant variant_of(const TemporalParams& params) {
  return static_cast<TemporalVariant>(params.index());
}

void collect(TemporalParams& params, const std::string& prefix, std::vector<ParamView>& out) {
  if (auto* v2 = std::get_if<TemporalParamsV2>(&params)) v2->collect(prefix, out);
  if (auto* v3 = std::get_if<TemporalParamsV3>(&params)) v3->collect(prefix, out);
}

void collect(const TemporalParams& params, const std::string& prefix, std::vector<ConstParamView>& out) {
  if (const auto* v2 = std::get_if<TemporalParamsV2>(&params)) v2->collect(prefix, out);
  if (const auto* v3 = std::get_if<TemporalParamsV3>(&params)) v3->collect(prefix, out);
}

TemporalParams init_temporal_params(TemporalVariant variant, std::size_t dim, std::size_t max_frames,
                                    std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("temporal dimension must be positive");
  switch (variant) {
    case TemporalVariant::v1:
      return std::monostate{};
    case TemporalVariant::v2:
      return TemporalParamsV2{Vector::Zero(static_cast<Index>(dim)), 0.0};
    case TemporalVariant::v3: {
      if (max_frames == 0) throw std::invalid_argument("positional table needs at least one row");
      Rng rng(seed);
      const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
      return TemporalParamsV3{nn::init_transformer_layer(dim, 4 * dim, bound, rng),
                              nn::sinusoidal_table(max_frames, dim)};
    }
  }
  throw std::invalid_argument("unknown temporal variant");
}

TemporalParams zeros_like(const TemporalParams& params) {
  TemporalParams out = params;
  std::vector<ParamView> views;
  collect(out, "", views);
  for (auto& v : views) std::fill(v.data.begin(), v.data.end(), 0.0);
  return out;
}

AggregatedPatches aggregate_v1(const VideoFeatures& features) {
  check_features(features);
  return {uniform_mean(features)};
}

Matrix v2_frame_weights(const VideoFeatures& features, const TemporalParamsV2& params) {
  check_features(features);
  if (static_cast<std::size_t>(params.score_weights.size()) != features.dim) {
    throw std::invalid_argument("v2 score weights do not match feature dimension");
  }
  const auto frames = static_cast<Index>(features.frames.size());
  Matrix weights(kPatches, frames);
  for (Index t = 0; t < frames; ++t) {
    weights.col(t) = features.frames[static_cast<std::size_t>(t)].patches * params.score_weights;
  }
  weights.array() += params.score_bias;
  for (Index i = 0; i < kPatches; ++i) {
    const double peak = weights.row(i).maxCoeff();
    weights.row(i) = (weights.row(i).array() - peak).exp();
    weights.row(i) /= weights.row(i).sum();
  }
  return weights;
}

AggregatedPatches aggregate_v2(const VideoFeatures& features, const TemporalParamsV2& params) {
  const Matrix weights = v2_frame_weights(features, params);
  Matrix out = Matrix::Zero(kPatches, static_cast<Index>(features.dim));
  for (std::size_t t = 0; t < features.frames.size(); ++t) {
    out += (features.frames[t].patches.array().colwise() * weights.col(static_cast<Index>(t)).array()).matrix();
  }
  return {out};
}

AggregatedPatches aggregate_v3(const VideoFeatures& features, const TemporalParamsV3& params) {
  check_features(features);
  check_v3(features, params);
  const auto frames = static_cast<Index>(features.frames.size());
  const Matrix y = nn::transformer_layer_forward(params.layer, time_sequences(features, params.positional),
                                                 features.frames.size(), false, nullptr);
  Matrix out = uniform_mean(features);
  for (Index i = 0; i < kPatches; ++i) out.row(i) += y.row(i * frames + frames - 1);
  return {out};
}

AggregatedPatches aggregate(const VideoFeatures& features, const TemporalParams& params) {
  if (const auto* v2 = std::get_if<TemporalParamsV2>(&params)) return aggregate_v2(features, *v2);
  if (const auto* v3 = std::get_if<TemporalParamsV3>(&params)) return aggregate_v3(features, *v3);
  return aggregate_v1(features);
}

TemporalGradients temporal_backward(const VideoFeatures& features, const TemporalParams& params,
                                    const Matrix& upstream) {
  check_features(features);
  check_upstream(features, upstream);
  const auto frames = static_cast<Index>(features.frames.size());
  const double inv_t = 1.0 / static_cast<double>(frames);

  TemporalGradients grads{zeros_like(params), {}};
  grads.frames.assign(features.frames.size(), Matrix::Zero(kPatches, static_cast<Index>(features.dim)));

  if (std::holds_alternative<std::monostate>(params)) {
    for (auto& g : grads.frames) g = inv_t * upstream;
    return grads;
  }

  if (const auto* v2 = std::get_if<TemporalParamsV2>(&params)) {
    const Matrix weights = v2_frame_weights(features, *v2);
    auto& g2 = std::get<TemporalParamsV2>(grads.params);
    // d<g, sum_t a_t x_t>/da_t = g . x_t, then through the softmax.
    Matrix d_weights(kPatches, frames);
    for (Index t = 0; t < frames; ++t) {
      d_weights.col(t) = (upstream.array() * features.frames[static_cast<std::size_t>(t)].patches.array()).rowwise().sum();
    }
    const Vector expected = (d_weights.array() * weights.array()).rowwise().sum();
    const Matrix d_scores = (weights.array() * (d_weights.colwise() - expected).array()).matrix();
    for (Index t = 0; t < frames; ++t) {
      const Matrix& x = features.frames[static_cast<std::size_t>(t)].patches;
      g2.score_weights += x.transpose() * d_scores.col(t);
      grads.frames[static_cast<std::size_t>(t)] =
          (upstream.array().colwise() * weights.col(t).array()).matrix() + d_scores.col(t) * v2->score_weights.transpose();
    }
    g2.score_bias = d_scores.sum();
    return grads;
  }

  const auto& v3 = std::get<TemporalParamsV3>(params);
  check_v3(features, v3);
  auto& g3 = std::get<TemporalParamsV3>(grads.params);
  nn::TransformerLayerCache cache;
  nn::transformer_layer_forward(v3.layer, time_sequences(features, v3.positional), features.frames.size(), false,
                                &cache);
  Matrix dy = Matrix::Zero(kPatches * frames, static_cast<Index>(features.dim));
  for (Index i = 0; i < kPatches; ++i) dy.row(i * frames + frames - 1) = upstream.row(i);
  const Matrix dx = nn::transformer_layer_backward(v3.layer, cache, dy, g3.layer);
  for (Index t = 0; t < frames; ++t) {
    Matrix& g = grads.frames[static_cast<std::size_t>(t)];
    for (Index i = 0; i < kPatches; ++i) g.row(i) = dx.row(i * frames + t);
    g3.positional.row(t) = g.colwise().sum();
    g += inv_t * upstream;
  }
  return grads;
}

}  // namespace vidlm
