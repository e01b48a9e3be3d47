#include "labelforge/error.h"

namespace labelforge {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kMissingReportId: return "MissingReportId";
    case ErrorKind::kEmptyDocument: return "EmptyDocument";
    case ErrorKind::kMalformedRecord: return "MalformedRecord";
    case ErrorKind::kDuplicateReportId: return "DuplicateReportId";
    case ErrorKind::kEmptySentenceAfterNormalization:
      return "EmptySentenceAfterNormalization";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kInvalidParams: return "InvalidParams";
    case ErrorKind::kEmptyPairSet: return "EmptyPairSet";
    case ErrorKind::kEmptyGrid: return "EmptyGrid";
    case ErrorKind::kNoFeasiblePoint: return "NoFeasiblePoint";
    case ErrorKind::kUnknownClusterId: return "UnknownClusterId";
    case ErrorKind::kUnknownGroupId: return "UnknownGroupId";
    case ErrorKind::kConflictingDecision: return "ConflictingDecision";
    case ErrorKind::kInvalidDecision: return "InvalidDecision";
    case ErrorKind::kCorruptLog: return "CorruptLog";
    case ErrorKind::kBindError: return "BindError";
    case ErrorKind::kVersionConflict: return "VersionConflict";
  }
  return "Unknown";
}

namespace {

std::string Format(ErrorKind kind, const std::string& message,
                   std::size_t line) {
  std::string out(ErrorKindName(kind));
  if (line != 0) out += " (line " + std::to_string(line) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::size_t line)
    : std::runtime_error(Format(kind, message, line)),
      kind_(kind),
      line_(line),
      detail_(message) {}

}  // namespace labelforge
