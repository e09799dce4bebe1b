// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vidlm/tensor.hpp"

namespace vidlm {

inline constexpr double kDefaultSampleFps = 0.5;

// Decoded frame, row-major height x width x channels.
struct ImageBuffer {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

struct VideoSource {
  std::int64_t frame_count = 0;
  double native_fps = 0.0;
  // Empty when only metadata is known; otherwise one buffer per frame.
  std::vector<ImageBuffer> frames;

  void validate() const;
};

// One frame after the vision encoder: a global token plus 256 patch tokens.
struct FrameFeatures {
  Vector cls;
  Matrix patches;  // kPatchCount x dim

  std::size_t dim() const { return static_cast<std::size_t>(cls.size()); }
  void validate(std::size_t dim) const;
};

struct VideoFeatures {
  std::vector<FrameFeatures> frames;
  std::size_t dim = 0;

  std::size_t frame_count() const { return frames.size(); }
  void validate() const;
};

// Frame indices for sampling at target_fps, anchored at frame 0. Sample k
// sits at time k / target_fps and maps to the nearest native frame.
std::vector<std::size_t> sample_frame_indices(std::int64_t frame_count, double native_fps,
                                              double target_fps = kDefaultSampleFps);

class FrameEncoder {
 public:
  virtual ~FrameEncoder() = default;
  virtual std::size_t dim() const = 0;
  virtual FrameFeatures encode(const ImageBuffer& frame) const = 0;
};

// Deterministic stand-in for a frozen vision encoder. Output entries lie in
// [-1, 1] and depend only on (frame bytes, dim, seed).
FrameFeatures mock_encode(const ImageBuffer& frame, std::size_t dim, std::uint64_t seed);

class MockEncoder final : public FrameEncoder {
 public:
  MockEncoder(std::size_t dim, std::uint64_t seed);
  std::size_t dim() const override { return dim_; }
  FrameFeatures encode(const ImageBuffer& frame) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

VideoFeatures encode_frames(const VideoSource& source, std::span<const std::size_t> indices,
                            const FrameEncoder& encoder);

// FNV-1a over the buffer geometry and pixels.
std::uint64_t hash_frame(const ImageBuffer& frame);

// Decoded-looking video with seeded pixel content, for demos and tests.
VideoSource make_synthetic_video(std::int64_t frame_count, double native_fps, int height, int width,
                                 int channels, std::uint64_t seed);

}  // namespace vidlm
