#ifndef ROOMLAY_ERROR_HPP
#define ROOMLAY_ERROR_HPP

#include <stdexcept>
#include <string>

namespace roomlay {

// Numeric values are mirrored by the RL_ERR_* codes in roomlay.h.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kInvalidLayout = 2,
  kParse = 3,
  kIo = 4,
  kShapeMismatch = 5,
  kNonFinite = 6,
  kUndefinedIoU = 7,
  kGeneration = 8,
  kAugmentation = 9,
  kCheckpoint = 10,
  kConfig = 11,
  kInternal = 12,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace roomlay

#endif  // ROOMLAY_ERROR_HPP
