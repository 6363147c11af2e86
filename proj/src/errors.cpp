#include "diccae/errors.hpp"

namespace diccae {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInsufficientData: return "insufficient_data";
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kEmptyClass: return "empty_class";
    case ErrorCode::kInsufficientClasses: return "insufficient_classes";
    case ErrorCode::kIndex: return "index";
    case ErrorCode::kInsufficientBatch: return "insufficient_batch";
    case ErrorCode::kLabelRange: return "label_range";
    case ErrorCode::kInsufficientPoints: return "insufficient_points";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kCache: return "cache";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kStratification: return "stratification";
    case ErrorCode::kSampling: return "sampling";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kVersion: return "version";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kUnlabeled: return "unlabeled";
    case ErrorCode::kFormat: return "format";
  }
  return "unknown";
}

}  // namespace diccae
