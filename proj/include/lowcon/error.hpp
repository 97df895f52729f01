#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lowcon {

enum class ErrorKind {
  InvalidArgument,
  RankDeficient,
  InfeasibleDesign,
  Exhausted,
  ConstantColumn,
  DegenerateBox,
  AssumptionViolated,
  NonConvergence,
  DimensionTooSmall,
  DegenerateSample,
  FileNotFound,
  ColumnMissing,
  EmptyAfterFiltering,
  ConfigError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lowcon
