#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shapbpt {

// A caller broke a documented precondition (e.g. attributing a player that is
// already part of the context coalition).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An exhaustive enumeration would exceed a hard size guard.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Malformed coalition structures, trees, masks, or mismatched dimensions.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// File or stream content that does not follow one of the binary/text formats.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The worth function failed. `index` is the position of the offending
// coalition inside the batch that was being evaluated.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, std::size_t index)
      : std::runtime_error(what), index_(index) {}

  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// Connection or protocol failure while talking to a remote evaluator.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace shapbpt
