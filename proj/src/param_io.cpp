// SPDX-License-Identifier: Apache-2.0
#include "vidlm/param_io.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "vidlm/errors.hpp"

namespace vidlm {

namespace {

constexpr std::array<char, 8> kMagic = {'V', 'I', 'D', 'L', 'M', 'P', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw ParseError("parameter file truncated");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

std::uint64_t element_count(const std::vector<std::uint64_t>& shape) {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::vector<std::uint64_t> shape_of(const Matrix& m) {
  return {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
}

}  // namespace

ParamView view_of(std::string name, Matrix& m, bool trainable) {
  return {std::move(name), shape_of(m), {m.data(), static_cast<std::size_t>(m.size())}, trainable};
}
ParamView view_of(std::string name, Vector& v, bool trainable) {
  return {std::move(name), {static_cast<std::uint64_t>(v.size())},
          {v.data(), static_cast<std::size_t>(v.size())}, trainable};
}
ParamView view_of(std::string name, double& scalar, bool trainable) {
  return {std::move(name), {}, {&scalar, 1}, trainable};
}
ConstParamView view_of(std::string name, const Matrix& m, bool trainable) {
  return {std::move(name), shape_of(m), {m.data(), static_cast<std::size_t>(m.size())}, trainable};
}
ConstParamView view_of(std::string name, const Vector& v, bool trainable) {
  return {std::move(name), {static_cast<std::uint64_t>(v.size())},
          {v.data(), static_cast<std::size_t>(v.size())}, trainable};
}
ConstParamView view_of(std::string name, const double& scalar, bool trainable) {
  return {std::move(name), {}, {&scalar, 1}, trainable};
}

std::vector<NamedArray> snapshot(std::span<const ConstParamView> views) {
  std::vector<NamedArray> out;
  out.reserve(views.size());
  for (const auto& v : views) {
    out.push_back({v.name, v.shape, {v.data.begin(), v.data.end()}});
  }
  return out;
}

void restore(std::span<const ParamView> views, std::span<const NamedArray> arrays) {
  std::map<std::string, const NamedArray*, std::less<>> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a;
  for (const auto& v : views) {
    auto it = by_name.find(v.name);
    if (it == by_name.end()) throw std::invalid_argument("missing parameter array: " + v.name);
    const NamedArray& a = *it->second;
    if (a.shape != v.shape || a.values.size() != v.data.size()) {
      throw std::invalid_argument("shape mismatch for parameter array: " + v.name);
    }
    std::copy(a.values.begin(), a.values.end(), v.data.begin());
  }
}

void write_params(std::ostream& out, std::span<const NamedArray> arrays) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    if (element_count(a.shape) != a.values.size()) {
      throw std::invalid_argument("array payload does not match its shape: " + a.name);
    }
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put_le<std::uint64_t>(out, d);
    for (double x : a.values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
  }
  if (!out) throw std::runtime_error("failed to write parameter stream");
}

std::vector<NamedArray> read_params(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ParseError("not a parameter file (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kVersion) throw ParseError("unsupported parameter file version " + std::to_string(version));
  const auto count = get_le<std::uint32_t>(in);
  std::vector<NamedArray> arrays;
  arrays.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedArray a;
    const auto name_len = get_le<std::uint32_t>(in);
    a.name.resize(name_len);
    in.read(a.name.data(), name_len);
    if (!in) throw ParseError("parameter file truncated");
    const auto rank = get_le<std::uint32_t>(in);
    a.shape.resize(rank);
    for (auto& d : a.shape) d = get_le<std::uint64_t>(in);
    a.values.resize(element_count(a.shape));
    for (auto& x : a.values) x = std::bit_cast<double>(get_le<std::uint64_t>(in));
    arrays.push_back(std::move(a));
  }
  return arrays;
}

void save_params(const std::filesystem::path& path, std::span<const NamedArray> arrays) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  write_params(out, arrays);
}

std::vector<NamedArray> load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  return read_params(in);
}

}  // namespace vidlm
