// SPDX-License-Identifier: Apache-2.0
#include "vidlm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "vidlm/errors.hpp"
#include "vidlm/rng.hpp"

namespace vidlm {

namespace {

constexpr std::int64_t kBos = 0;
constexpr std::int64_t kEos = 1;

template <typename Self, typename Views>
void collect_model(Self& m, Views& out) {
  collect(m.temporal, "temporal", out);
  m.projector.collect("projector", out);
  m.llm.collect("llm", out);
}

void accumulate(std::span<const ParamView> dst, std::span<const ConstParamView> src) {
  if (dst.size() != src.size()) throw std::logic_error("gradient layout mismatch");
  for (std::size_t k = 0; k < dst.size(); ++k) {
    if (dst[k].data.size() != src[k].data.size()) throw std::logic_error("gradient shape mismatch: " + dst[k].name);
    for (std::size_t i = 0; i < dst[k].data.size(); ++i) dst[k].data[i] += src[k].data[i];
  }
}

template <typename P>
void add_grads(P& dst, const P& src, const std::string& prefix) {
  std::vector<ParamView> d;
  std::vector<ConstParamView> s;
  dst.collect(prefix, d);
  src.collect(prefix, s);
  accumulate(d, s);
}

void add_temporal(TemporalParams& dst, const TemporalParams& src) {
  std::vector<ParamView> d;
  std::vector<ConstParamView> s;
  collect(dst, "temporal", d);
  collect(src, "temporal", s);
  accumulate(d, s);
}

double loss_impl(const ToyModel& model, std::span<const ToyExample* const> batch, ToyModel* grads) {
  std::size_t supervised = 0;
  for (const ToyExample* ex : batch) {
    validate_example(*ex, model);
    supervised += ex->tokens.size() - ex->answer_begin;
  }
  if (supervised == 0) throw std::invalid_argument("batch has no supervised tokens");
  const double scale = 1.0 / static_cast<double>(supervised);

  double total = 0.0;
  for (const ToyExample* ex : batch) {
    const AggregatedPatches agg = aggregate(ex->video, model.temporal);
    const VideoTokenSequence seq = assemble_video_tokens(agg, ex->video);
    const Matrix video_rows = project_tokens(seq, model.projector);
    const Matrix text = embed_tokens(model.llm, ex->tokens);

    const Index slot = static_cast<Index>(ex->video_slot);
    const Index nv = video_rows.rows();
    const Index nt = text.rows();
    Matrix inputs(nt + nv, text.cols());
    inputs.topRows(slot) = text.topRows(slot);
    inputs.middleRows(slot, nv) = video_rows;
    inputs.bottomRows(nt - slot) = text.bottomRows(nt - slot);
    auto row_of = [&](std::size_t j) { return static_cast<Index>(j) < slot ? static_cast<Index>(j) : static_cast<Index>(j) + nv; };

    DecoderCache cache;
    const Matrix logits = decoder_forward(model.llm, inputs, grads ? &cache : nullptr);
    Matrix dlogits;
    if (grads) dlogits = Matrix::Zero(logits.rows(), logits.cols());

    for (std::size_t j = ex->answer_begin; j < ex->tokens.size(); ++j) {
      const Index r = row_of(j);
      const double peak = logits.row(r).maxCoeff();
      const Eigen::RowVectorXd shifted = logits.row(r).array() - peak;
      const double log_z = std::log(shifted.array().exp().sum());
      total += log_z - shifted(ex->targets[j]);
      if (grads) {
        dlogits.row(r) = (shifted.array() - log_z).exp() * scale;
        dlogits(r, ex->targets[j]) -= scale;
      }
    }
    if (!grads) continue;

    const Matrix dinputs = decoder_backward(model.llm, cache, dlogits, grads->llm);
    for (std::size_t j = 0; j < ex->tokens.size(); ++j) {
      grads->llm.embedding.row(ex->tokens[j]) += dinputs.row(row_of(j));
    }
    const ProjectionGradients pg = projection_backward(seq, model.projector, dinputs.middleRows(slot, nv));
    add_grads(grads->projector, pg.params, "projector");
    const Matrix dpatches = pg.input.topRows(static_cast<Index>(kPatchCount));
    const TemporalGradients tg = temporal_backward(ex->video, model.temporal, dpatches);
    add_temporal(grads->temporal, tg.params);
  }
  return total * scale;
}

struct AdamSlot {
  ParamView param;
  std::span<const double> grad;
  std::vector<double> m;
  std::vector<double> v;
};

}  // namespace

std::string_view to_string(Component component) {
  switch (component) {
    case Component::vision_encoder: return "vision_encoder";
    case Component::temporal: return "temporal";
    case Component::projector: return "projector";
    case Component::llm: return "llm";
  }
  throw std::invalid_argument("unknown component");
}

void StageConfig::validate() const {
  if (stage != 1 && stage != 2) throw std::invalid_argument("stage must be 1 or 2");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) throw std::invalid_argument("learning rate must be >= 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) throw std::invalid_argument("warmup ratio must be in [0, 1)");
  if (schedule != "cosine") throw std::invalid_argument("unsupported schedule: " + schedule);
  if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("betas must be in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (!frozen.contains(Component::vision_encoder)) throw std::invalid_argument("the vision encoder must stay frozen");
  for (Component c : trainable) {
    if (frozen.contains(c)) throw std::invalid_argument("component both trainable and frozen: " + std::string(to_string(c)));
  }
  if (steps && *steps == 0) throw std::invalid_argument("step override must be positive");
}

StageConfig build_stage_config(int stage, bool train_temporal_in_stage1) {
  StageConfig c;
  c.stage = stage;
  if (stage == 1) {
    c.learning_rate = 2e-3;
    c.epochs = 1;
    c.batch_size = 128;
    c.trainable = {Component::projector};
    if (train_temporal_in_stage1) c.trainable.insert(Component::temporal);
  } else if (stage == 2) {
    c.learning_rate = 5e-5;
    c.epochs = 3;
    c.batch_size = 32;
    c.trainable = {Component::projector, Component::llm, Component::temporal};
  } else {
    throw std::invalid_argument("stage must be 1 or 2");
  }
  for (Component comp : {Component::vision_encoder, Component::temporal, Component::projector, Component::llm}) {
    if (!c.trainable.contains(comp)) c.frozen.insert(comp);
  }
  return c;
}

double lr_at(std::size_t step, std::size_t total_steps, const StageConfig& config) {
  if (total_steps == 0) throw std::invalid_argument("total steps must be positive");
  if (step > total_steps) throw std::invalid_argument("step beyond total steps");
  const auto warmup = static_cast<std::size_t>(std::ceil(config.warmup_ratio * static_cast<double>(total_steps)));
  if (step < warmup) return config.learning_rate * static_cast<double>(step) / static_cast<double>(warmup);
  const double progress = static_cast<double>(step - warmup) /
                          static_cast<double>(std::max<std::size_t>(1, total_steps - warmup));
  return config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void ToyModel::collect(std::vector<ParamView>& out) { collect_model(*this, out); }
void ToyModel::collect(std::vector<ConstParamView>& out) const { collect_model(*this, out); }

ToyModel init_toy_model(TemporalVariant variant, const ToyDims& dims, std::uint64_t seed) {
  if (dims.dim == 0 || dims.llm_dim == 0) throw std::invalid_argument("model dimensions must be positive");
  return {init_temporal_params(variant, dims.dim, dims.max_frames, splitmix64(seed + 1)),
          init_projection(dims.dim, dims.llm_dim, splitmix64(seed + 2)),
          init_tiny_decoder(dims.vocab, dims.llm_dim, splitmix64(seed + 3))};
}

ToyModel zeros_like(const ToyModel& model) {
  ToyModel z;
  z.temporal = zeros_like(model.temporal);
  z.projector = {Matrix::Zero(model.projector.weight.rows(), model.projector.weight.cols()),
                 Vector::Zero(model.projector.bias.size())};
  z.llm = zeros_like(model.llm);
  return z;
}

Component component_of(std::string_view name) {
  const auto has_prefix = [name](std::string_view p) { return name.substr(0, p.size()) == p; };
  if (has_prefix("temporal.")) return Component::temporal;
  if (has_prefix("projector.")) return Component::projector;
  if (has_prefix("llm.")) return Component::llm;
  throw std::invalid_argument("parameter belongs to no component: " + std::string(name));
}

void validate_example(const ToyExample& ex, const ToyModel& model) {
  if (ex.tokens.empty()) throw std::invalid_argument("example has no tokens");
  if (ex.targets.size() != ex.tokens.size()) throw std::invalid_argument("targets and tokens differ in length");
  if (ex.video_slot > ex.tokens.size()) throw std::invalid_argument("video slot beyond token sequence");
  if (ex.answer_begin >= ex.tokens.size()) throw std::invalid_argument("answer segment is empty");
  if (ex.video.dim != model.dim()) throw std::invalid_argument("video feature width does not match the model");
  if (ex.video.frames.empty()) throw std::invalid_argument("example video has no frames");
  const auto vocab = static_cast<std::int64_t>(model.llm.vocab());
  for (std::size_t j = 0; j < ex.tokens.size(); ++j) {
    if (ex.tokens[j] < 0 || ex.tokens[j] >= vocab || ex.targets[j] < 0 || ex.targets[j] >= vocab) {
      throw std::invalid_argument("token id out of vocabulary at position " + std::to_string(j));
    }
  }
}

std::vector<ToyExample> make_toy_dataset(std::size_t count, const ToyDims& dims, std::size_t frames,
                                         std::uint64_t seed) {
  if (count == 0 || frames == 0) throw std::invalid_argument("dataset needs examples and frames");
  if (dims.vocab < kMinVocab) throw std::invalid_argument("vocabulary must hold at least 8 tokens");
  constexpr std::size_t kPrompt = 3;
  constexpr std::size_t kAnswer = 3;
  Rng rng(seed);
  const auto d = static_cast<Index>(dims.dim);
  const std::uint64_t content = dims.vocab - 2;
  std::vector<ToyExample> out;
  for (std::size_t e = 0; e < count; ++e) {
    ToyExample ex;
    ex.video.dim = dims.dim;
    Vector cls_sum = Vector::Zero(d);
    for (std::size_t f = 0; f < frames; ++f) {
      FrameFeatures ff{Vector(d), Matrix(static_cast<Index>(kPatchCount), d)};
      for (Index k = 0; k < d; ++k) ff.cls(k) = uniform(rng, -1.0, 1.0);
      for (Index k = 0; k < ff.patches.size(); ++k) ff.patches.data()[k] = uniform(rng, -1.0, 1.0);
      cls_sum += ff.cls;
      ex.video.frames.push_back(std::move(ff));
    }
    std::uint64_t key = 0;
    for (Index k = 0; k < std::min<Index>(d, 3); ++k) key |= static_cast<std::uint64_t>(cls_sum(k) > 0.0) << k;

    ex.tokens.push_back(kBos);
    for (std::size_t k = 0; k < kPrompt; ++k) ex.tokens.push_back(2 + static_cast<std::int64_t>(uniform_index(rng, content)));
    for (std::size_t k = 0; k < kAnswer; ++k) ex.tokens.push_back(2 + static_cast<std::int64_t>((key * 3 + k) % content));
    ex.targets.assign(ex.tokens.begin() + 1, ex.tokens.end());
    ex.targets.push_back(kEos);
    ex.video_slot = 1;
    ex.answer_begin = kPrompt;
    out.push_back(std::move(ex));
  }
  return out;
}

double toy_loss(const ToyModel& model, std::span<const ToyExample> batch, ToyModel* grads) {
  std::vector<const ToyExample*> ptrs;
  for (const auto& ex : batch) ptrs.push_back(&ex);
  return loss_impl(model, ptrs, grads);
}

TrainReport train_toy(ToyModel& model, std::span<const ToyExample> dataset, std::span<const StageConfig> stages,
                      std::uint64_t seed) {
  if (dataset.empty()) throw std::invalid_argument("training set is empty");
  for (const auto& ex : dataset) validate_example(ex, model);
  for (const auto& stage : stages) stage.validate();

  TrainReport report;
  report.seed = seed;
  report.variant = model.variant();
  report.stages.assign(stages.begin(), stages.end());

  Rng rng(seed);
  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;

  for (const StageConfig& config : stages) {
    const std::size_t batch = std::min(static_cast<std::size_t>(config.batch_size), n);
    const std::size_t per_epoch = (n + batch - 1) / batch;
    const std::size_t total = config.steps ? *config.steps : static_cast<std::size_t>(config.epochs) * per_epoch;

    ToyModel grads = zeros_like(model);
    std::vector<ParamView> params;
    std::vector<ParamView> grad_views;
    model.collect(params);
    grads.collect(grad_views);
    std::vector<AdamSlot> slots;
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (!params[k].trainable || !config.is_trainable(component_of(params[k].name))) continue;
      const std::size_t size = params[k].data.size();
      slots.push_back({params[k], grad_views[k].data, std::vector<double>(size, 0.0), std::vector<double>(size, 0.0)});
    }

    std::size_t cursor = 0;
    for (std::size_t s = 0; s < total; ++s) {
      if (cursor == 0) shuffle(order, rng);
      std::vector<const ToyExample*> members;
      for (std::size_t k = cursor; k < std::min(cursor + batch, n); ++k) members.push_back(&dataset[order[k]]);
      cursor = cursor + batch >= n ? 0 : cursor + batch;

      for (auto& g : grad_views) std::fill(g.data.begin(), g.data.end(), 0.0);
      const double loss = loss_impl(model, members, &grads);
      if (!std::isfinite(loss)) {
        throw NumericalError("non-finite loss at stage " + std::to_string(config.stage) + " step " + std::to_string(s), s);
      }

      const double lr = lr_at(s, total, config);
      const auto t = static_cast<double>(s + 1);
      const double bc1 = 1.0 - std::pow(config.beta1, t);
      const double bc2 = 1.0 - std::pow(config.beta2, t);
      for (auto& slot : slots) {
        for (std::size_t i = 0; i < slot.m.size(); ++i) {
          const double g = slot.grad[i];
          slot.m[i] = config.beta1 * slot.m[i] + (1.0 - config.beta1) * g;
          slot.v[i] = config.beta2 * slot.v[i] + (1.0 - config.beta2) * g * g;
          const double update = (slot.m[i] / bc1) / (std::sqrt(slot.v[i] / bc2) + config.eps);
          double& p = slot.param.data[i];
          p -= lr * (update + config.weight_decay * p);
        }
      }
      report.steps.push_back({config.stage, s, lr, loss});
    }
  }
  return report;
}

nlohmann::ordered_json to_json(const StageConfig& c) {
  nlohmann::ordered_json j;
  j["stage"] = c.stage;
  j["learning_rate"] = c.learning_rate;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["warmup_ratio"] = c.warmup_ratio;
  j["schedule"] = c.schedule;
  j["weight_decay"] = c.weight_decay;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps"] = c.eps;
  j["trainable"] = nlohmann::ordered_json::array();
  for (Component comp : c.trainable) j["trainable"].push_back(to_string(comp));
  j["frozen"] = nlohmann::ordered_json::array();
  for (Component comp : c.frozen) j["frozen"].push_back(to_string(comp));
  if (c.steps) j["steps"] = *c.steps;
  return j;
}

nlohmann::ordered_json to_json(const TrainReport& report) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["variant"] = to_string(report.variant);
  j["stages"] = nlohmann::ordered_json::array();
  for (const auto& s : report.stages) j["stages"].push_back(to_json(s));
  j["steps"] = nlohmann::ordered_json::array();
  for (const auto& s : report.steps) {
    nlohmann::ordered_json row;
    row["stage"] = s.stage;
    row["step"] = s.step;
    row["lr"] = s.learning_rate;
    row["loss"] = s.loss;
    j["steps"].push_back(std::move(row));
  }
  return j;
}

}  // namespace vidlm
