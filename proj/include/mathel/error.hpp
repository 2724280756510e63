#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mathel {

enum class ErrorCode {
  file_missing,
  schema_violation,
  invalid_qid,
  duplicate_qid,
  network_error,
  not_found,
  rate_limited,
  already_annotated,
  not_annotated,
  unknown_target,
  target_rejected,
  already_rejected,
  version_mismatch,
  replay_mismatch,
  malformed_tag,
  qid_format,
  io_error,
  bad_argument,
};

std::string_view to_string(ErrorCode code);

// Every fatal failure in the library is reported through this type. `line`
// carries the 1-based input line for file-format errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace mathel
