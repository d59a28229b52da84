#include "irf/error.hpp"

namespace irf {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::EmptyFeatureSet: return "EmptyFeatureSet";
    case ErrorCode::InvalidDataset: return "InvalidDataset";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::UndefinedRate: return "UndefinedRate";
    case ErrorCode::EmptyLeft: return "EmptyLeft";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyValidation: return "EmptyValidation";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedModel: return "MalformedModel";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

}  // namespace irf
