#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tjgen {

enum class ErrorCode {
  Parse,
  UnsupportedCell,
  MultipleDrivers,
  UndeclaredNet,
  UndrivenNet,
  DanglingInput,
  CombinationalCycle,
  NameCollision,
  MissingClock,
  UnboundPort,
  InvalidVictim,
  SequentialCell,
  EmptyClass,
  DimensionMismatch,
  TooFewSamples,
  InterfaceMismatch,
  NoCandidates,
  InsufficientCandidates,
  NoLegalPayload,
  PoolEmpty,
  InsufficientRareNets,
  InvalidArgument,
  Schema,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library is reported through this type;
/// `code()` identifies the contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tjgen
