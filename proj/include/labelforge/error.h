#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace labelforge {

enum class ErrorKind {
  kIo,
  kMissingReportId,
  kEmptyDocument,
  kMalformedRecord,
  kDuplicateReportId,
  kEmptySentenceAfterNormalization,
  kInvalidConfig,
  kInvalidParams,
  kEmptyPairSet,
  kEmptyGrid,
  kNoFeasiblePoint,
  kUnknownClusterId,
  kUnknownGroupId,
  kConflictingDecision,
  kInvalidDecision,
  kCorruptLog,
  kBindError,
  kVersionConflict,
};

std::string_view ErrorKindName(ErrorKind kind);

// All recoverable failures in the library are reported through this type.
// `line` is the 1-based record number for file-format errors, 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::size_t line = 0);

  ErrorKind kind() const { return kind_; }
  std::size_t line() const { return line_; }
  // Message without the kind/line prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::size_t line_;
  std::string detail_;
};

}  // namespace labelforge
