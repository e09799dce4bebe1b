// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vidlm/assembly.hpp"
#include "vidlm/decoder.hpp"
#include "vidlm/features.hpp"
#include "vidlm/param_io.hpp"
#include "vidlm/temporal.hpp"

namespace vidlm {

enum class Component { vision_encoder, temporal, projector, llm };

std::string_view to_string(Component component);

struct StageConfig {
  int stage = 1;
  double learning_rate = 0.0;
  int epochs = 1;
  int batch_size = 1;
  double warmup_ratio = 0.03;
  std::string schedule = "cosine";
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-6;
  std::set<Component> trainable;
  std::set<Component> frozen;
  // Optimizer steps to run instead of epochs x ceil(N / batch), cycling epochs.
  std::optional<std::size_t> steps;

  bool is_trainable(Component c) const { return trainable.contains(c); }
  void validate() const;
};

inline constexpr double kStage2AlternateLearningRate = 2e-5;

// Settings of the two-stage recipe. The temporal module joins stage 1's
// trainable set unless train_temporal_in_stage1 is false.
StageConfig build_stage_config(int stage, bool train_temporal_in_stage1 = true);

// Linear warmup over ceil(warmup_ratio * total) steps, then cosine decay to 0.
double lr_at(std::size_t step, std::size_t total_steps, const StageConfig& config);

struct ToyDims {
  std::size_t dim = 8;        // vision feature width
  std::size_t llm_dim = 16;
  std::size_t vocab = 32;
  std::size_t max_frames = 16;
};

struct ToyModel {
  TemporalParams temporal;
  ProjectionParams projector;
  TinyDecoderParams llm;

  TemporalVariant variant() const { return variant_of(temporal); }
  std::size_t dim() const { return projector.in_dim(); }
  void collect(std::vector<ParamView>& out);
  void collect(std::vector<ConstParamView>& out) const;
};

ToyModel init_toy_model(TemporalVariant variant, const ToyDims& dims, std::uint64_t seed);
ToyModel zeros_like(const ToyModel& model);

// Component that owns a parameter, from its "temporal." / "projector." /
// "llm." name prefix.
Component component_of(std::string_view param_name);

// Text tokens with the projected video rows spliced in before
// tokens[video_slot]. targets[j] is the next-token label read at text
// position j; only positions j >= answer_begin contribute to the loss.
struct ToyExample {
  VideoFeatures video;
  std::vector<std::int64_t> tokens;
  std::vector<std::int64_t> targets;
  std::size_t video_slot = 0;
  std::size_t answer_begin = 0;
};

void validate_example(const ToyExample& example, const ToyModel& model);

// Seeded synthetic examples whose answer tokens depend on the video.
std::vector<ToyExample> make_toy_dataset(std::size_t count, const ToyDims& dims, std::size_t frames,
                                         std::uint64_t seed);

// Mean cross-entropy over supervised tokens of the batch. Adds gradients into
// grads when given.
double toy_loss(const ToyModel& model, std::span<const ToyExample> batch, ToyModel* grads = nullptr);

struct StepRecord {
  int stage = 0;
  std::size_t step = 0;
  double learning_rate = 0.0;
  double loss = 0.0;
};

struct TrainReport {
  std::uint64_t seed = 0;
  TemporalVariant variant = TemporalVariant::v1;
  std::vector<StageConfig> stages;
  std::vector<StepRecord> steps;
};

// Runs the stages in order on model. Parameters of components outside a
// stage's trainable set are left bit-identical. Throws NumericalError on a
// non-finite loss.
TrainReport train_toy(ToyModel& model, std::span<const ToyExample> dataset, std::span<const StageConfig> stages,
                      std::uint64_t seed);

nlohmann::ordered_json to_json(const StageConfig& config);
nlohmann::ordered_json to_json(const TrainReport& report);

}  // namespace vidlm
