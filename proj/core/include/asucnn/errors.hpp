#pragma once

#include <stdexcept>
#include <string>

namespace asucnn {

// Shape disagreements between operands, or shapes that violate a layer's
// contract (e.g. a conv whose output size would be non-positive).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Element count does not fit in std::size_t.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// API misuse: backward without a forward cache, out-of-range options.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A loss or activation became NaN/Inf. Training aborts on this.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Base for every dataset-related failure.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataMissingError : public DataError {
 public:
  using DataError::DataError;
};

// Malformed CIFAR-10 batch file (wrong size, label out of range).
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kVersionMismatch, kTruncated, kCorrupt };

  CheckpointError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace asucnn
