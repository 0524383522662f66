#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace volray {

enum class ErrorKind {
  InvalidArgument,
  NonFiniteInput,
  NegativeLoss,
  ParamNotOwned,
  DegenerateSplit,
  InsufficientPoints,
  NoPoints,
  OutOfBounds,
  ProtocolMismatch,
  WeightMismatch,
  Parse,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every library failure surfaces as an Error; kind() drives the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace volray
