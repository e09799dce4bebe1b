// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vidlm/tensor.hpp"

namespace vidlm {

// A named window onto one parameter array owned by some params struct.
struct ParamView {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::span<double> data;
  // Fixed buffers (e.g. positional tables) are serialized but never updated.
  bool trainable = true;
};

struct ConstParamView {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::span<const double> data;
  bool trainable = true;
};

ParamView view_of(std::string name, Matrix& m, bool trainable = true);
ParamView view_of(std::string name, Vector& v, bool trainable = true);
ParamView view_of(std::string name, double& scalar, bool trainable = true);
ConstParamView view_of(std::string name, const Matrix& m, bool trainable = true);
ConstParamView view_of(std::string name, const Vector& v, bool trainable = true);
ConstParamView view_of(std::string name, const double& scalar, bool trainable = true);

// Owning copy of one array, the unit of the on-disk format.
struct NamedArray {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<double> values;

  bool operator==(const NamedArray&) const = default;
};

std::vector<NamedArray> snapshot(std::span<const ConstParamView> views);

// Copies arrays into views by name. Every view must be present with a
// matching shape; extra arrays are ignored.
void restore(std::span<const ParamView> views, std::span<const NamedArray> arrays);

// Layout (all integers little-endian, see docs/param_format.md):
//   "VIDLMPRM" | u32 version=1 | u32 count |
//   count x { u32 name_len | name | u32 rank | rank x u64 dim | f64 payload }
void write_params(std::ostream& out, std::span<const NamedArray> arrays);
std::vector<NamedArray> read_params(std::istream& in);
void save_params(const std::filesystem::path& path, std::span<const NamedArray> arrays);
std::vector<NamedArray> load_params(const std::filesystem::path& path);

}  // namespace vidlm
