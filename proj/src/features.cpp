// SPDX-License-Identifier: Apache-2.0
#include "vidlm/features.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "vidlm/errors.hpp"
#include "vidlm/rng.hpp"

namespace vidlm {

void VideoSource::validate() const {
  if (frame_count < 1) throw std::invalid_argument("video must have at least one frame");
  if (!(native_fps > 0.0) || !std::isfinite(native_fps)) {
    throw std::invalid_argument("native fps must be positive");
  }
  if (!frames.empty() && static_cast<std::int64_t>(frames.size()) != frame_count) {
    throw std::invalid_argument("decoded frame list does not match frame_count");
  }
}

void FrameFeatures::validate(std::size_t expected_dim) const {
  if (static_cast<std::size_t>(cls.size()) != expected_dim) {
    throw ContractViolation("cls vector has dimension " + std::to_string(cls.size()) + ", expected " +
                            std::to_string(expected_dim));
  }
  if (static_cast<std::size_t>(patches.rows()) != kPatchCount ||
      static_cast<std::size_t>(patches.cols()) != expected_dim) {
    throw ContractViolation("patch matrix is " + std::to_string(patches.rows()) + "x" +
                            std::to_string(patches.cols()) + ", expected 256x" +
                            std::to_string(expected_dim));
  }
  if (!all_finite(cls) || !all_finite(patches)) throw ContractViolation("non-finite frame features");
}

void VideoFeatures::validate() const {
  if (frames.empty()) throw std::invalid_argument("video features need at least one frame");
  if (dim == 0) throw std::invalid_argument("feature dimension must be positive");
  for (const auto& f : frames) f.validate(dim);
}

std::vector<std::size_t> sample_frame_indices(std::int64_t frame_count, double native_fps,
                                              double target_fps) {
  if (frame_count < 1) throw std::invalid_argument("frame_count must be positive");
  if (!(native_fps > 0.0) || !std::isfinite(native_fps)) {
    throw std::invalid_argument("native_fps must be positive");
  }
  if (!(target_fps > 0.0) || !std::isfinite(target_fps)) {
    throw std::invalid_argument("target_fps must be positive");
  }
  const double frames_per_sample = native_fps / target_fps;
  std::vector<std::size_t> indices{0};
  for (std::int64_t k = 1;; ++k) {
    const double position = std::round(static_cast<double>(k) * frames_per_sample);
    if (position >= static_cast<double>(frame_count)) break;
    const auto index = static_cast<std::size_t>(position);
    // Sampling faster than the native rate maps several samples to one frame.
    if (index > indices.back()) indices.push_back(index);
  }
  return indices;
}

std::uint64_t hash_frame(const ImageBuffer& frame) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (int v : {frame.height, frame.width, frame.channels}) {
    for (int i = 0; i < 4; ++i) mix(static_cast<std::uint8_t>((static_cast<unsigned>(v) >> (8 * i)) & 0xff));
  }
  for (auto p : frame.pixels) mix(p);
  return h;
}

FrameFeatures mock_encode(const ImageBuffer& frame, std::size_t dim, std::uint64_t seed) {
  if (frame.pixels.empty()) throw std::invalid_argument("cannot encode an empty frame buffer");
  if (dim == 0) throw std::invalid_argument("encoder dimension must be positive");

  const std::uint64_t key = splitmix64(hash_frame(frame) ^ splitmix64(seed) ^ (dim * 0x2545f4914f6cdd1dULL));
  auto value = [key](std::uint64_t slot) {
    const std::uint64_t bits = splitmix64(key + slot * 0x9e3779b97f4a7c15ULL);
    return 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
  };

  FrameFeatures out;
  out.cls.resize(static_cast<Index>(dim));
  out.patches.resize(static_cast<Index>(kPatchCount), static_cast<Index>(dim));
  std::uint64_t slot = 0;
  for (Index j = 0; j < out.cls.size(); ++j) out.cls(j) = value(slot++);
  for (Index k = 0; k < out.patches.size(); ++k) out.patches.data()[k] = value(slot++);
  return out;
}

MockEncoder::MockEncoder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) throw std::invalid_argument("encoder dimension must be positive");
}

FrameFeatures MockEncoder::encode(const ImageBuffer& frame) const { return mock_encode(frame, dim_, seed_); }

VideoFeatures encode_frames(const VideoSource& source, std::span<const std::size_t> indices,
                            const FrameEncoder& encoder) {
  source.validate();
  if (source.frames.empty()) throw std::invalid_argument("video source carries no decoded frames");
  if (indices.empty()) throw std::invalid_argument("no frame indices to encode");

  VideoFeatures out;
  out.dim = encoder.dim();
  out.frames.reserve(indices.size());
  for (std::size_t index : indices) {
    if (index >= source.frames.size()) {
      throw std::invalid_argument("frame index " + std::to_string(index) + " out of range");
    }
    FrameFeatures f = encoder.encode(source.frames[index]);
    f.validate(out.dim);
    out.frames.push_back(std::move(f));
  }
  return out;
}

VideoSource make_synthetic_video(std::int64_t frame_count, double native_fps, int height, int width,
                                 int channels, std::uint64_t seed) {
  if (height < 1 || width < 1 || channels < 1) throw std::invalid_argument("bad synthetic frame geometry");
  VideoSource video{frame_count, native_fps, {}};
  video.validate();
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(height) * width * channels;
  video.frames.reserve(static_cast<std::size_t>(frame_count));
  for (std::int64_t f = 0; f < frame_count; ++f) {
    ImageBuffer img{height, width, channels, std::vector<std::uint8_t>(n)};
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() & 0xff);
    video.frames.push_back(std::move(img));
  }
  return video;
}

}  // namespace vidlm
