#include "lowcon/error.hpp"

namespace lowcon {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::InfeasibleDesign: return "InfeasibleDesign";
    case ErrorKind::Exhausted: return "Exhausted";
    case ErrorKind::ConstantColumn: return "ConstantColumn";
    case ErrorKind::DegenerateBox: return "DegenerateBox";
    case ErrorKind::AssumptionViolated: return "AssumptionViolated";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::ColumnMissing: return "ColumnMissing";
    case ErrorKind::EmptyAfterFiltering: return "EmptyAfterFiltering";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace lowcon
