#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pointstream {

/// Invalid argument or violated precondition.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data violates an invariant (e.g. unordered timestamps).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few samples to compute a statistic.
class InsufficientSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Colour transfer found fewer overlap pairs than required.
class InsufficientOverlap : public std::runtime_error {
 public:
  InsufficientOverlap(std::size_t pair_count, std::size_t required)
      : std::runtime_error("insufficient overlap: " + std::to_string(pair_count) +
                           " pairs, need " + std::to_string(required)),
        pair_count_(pair_count),
        required_(required) {}

  std::size_t pair_count() const noexcept { return pair_count_; }
  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t pair_count_;
  std::size_t required_;
};

}  // namespace pointstream
