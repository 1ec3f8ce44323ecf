#include "roomlay/error.hpp"

namespace roomlay {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidLayout: return "invalid-layout";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kIo: return "io-error";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kUndefinedIoU: return "undefined-iou";
    case ErrorCode::kGeneration: return "generation-error";
    case ErrorCode::kAugmentation: return "augmentation-error";
    case ErrorCode::kCheckpoint: return "checkpoint-error";
    case ErrorCode::kConfig: return "config-error";
    case ErrorCode::kInternal: return "internal-error";
  }
  return "unknown-error";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace roomlay
