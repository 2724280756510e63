#include "mathel/error.hpp"
#include "mathel/qid.hpp"

#include <charconv>

namespace mathel {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::file_missing: return "FileMissing";
    case ErrorCode::schema_violation: return "SchemaViolation";
    case ErrorCode::invalid_qid: return "InvalidQid";
    case ErrorCode::duplicate_qid: return "DuplicateQid";
    case ErrorCode::network_error: return "NetworkError";
    case ErrorCode::not_found: return "NotFound";
    case ErrorCode::rate_limited: return "RateLimited";
    case ErrorCode::already_annotated: return "AlreadyAnnotated";
    case ErrorCode::not_annotated: return "NotAnnotated";
    case ErrorCode::unknown_target: return "UnknownTarget";
    case ErrorCode::target_rejected: return "TargetRejected";
    case ErrorCode::already_rejected: return "AlreadyRejected";
    case ErrorCode::version_mismatch: return "VersionMismatch";
    case ErrorCode::replay_mismatch: return "ReplayMismatch";
    case ErrorCode::malformed_tag: return "MalformedTag";
    case ErrorCode::qid_format: return "QidFormatError";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::bad_argument: return "BadArgument";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

bool Qid::is_valid(std::string_view text) {
  if (text.size() < 2 || text.front() != 'Q') return false;
  for (char c : text.substr(1))
    if (c < '0' || c > '9') return false;
  return true;
}

std::optional<Qid> Qid::try_parse(std::string_view text) {
  if (!is_valid(text)) return std::nullopt;
  std::uint64_t number = 0;
  auto digits = text.substr(1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), number);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  return Qid(std::string(text), number);
}

Qid Qid::parse(std::string_view text) {
  if (auto q = try_parse(text)) return *q;
  throw Error(ErrorCode::invalid_qid, "'" + std::string(text) + "' is not a QID");
}

}  // namespace mathel
