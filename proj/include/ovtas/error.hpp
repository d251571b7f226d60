// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ovtas {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kNonFinite,
  kDegenerateRow,
  kEmptySequence,
  kIo,
  kBadMagic,
  kBadVersion,
  kTruncatedPayload,
  kUnknownLabel,
  kLengthMismatch,
  kManifest,
  kNoVideos,
};

/// Exception carrying a machine-checkable category next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ovtas
