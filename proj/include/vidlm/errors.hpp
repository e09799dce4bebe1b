// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

// Argument errors use std::invalid_argument directly. The types below cover
// the remaining failure classes the library reports.
namespace vidlm {

// A collaborator (encoder, client, file) returned data that breaks its contract.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A bounded resource (positional table, sequence budget) is exceeded.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, std::vector<std::size_t> lines = {})
      : std::runtime_error(what), lines_(std::move(lines)) {}

  // 1-based line numbers that failed to parse, when the input is line oriented.
  const std::vector<std::size_t>& lines() const noexcept { return lines_; }

 private:
  std::vector<std::size_t> lines_;
};

class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace vidlm
