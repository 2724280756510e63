#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mathel {

enum class DocumentFormat { wikitext, latex };
enum class DocumentOrigin { file, remote };

std::string_view to_string(DocumentFormat format);
std::string_view to_string(DocumentOrigin origin);
std::optional<DocumentFormat> parse_document_format(std::string_view text);
std::optional<DocumentOrigin> parse_document_origin(std::string_view text);

// A source article. The format selects the math-extraction grammar.
struct RawDocument {
  std::string title;
  std::string body;
  DocumentFormat format = DocumentFormat::wikitext;
  std::int64_t retrieved_at_ms = 0;  // Unix epoch milliseconds
  DocumentOrigin origin = DocumentOrigin::file;
  std::string revision;  // empty when unknown

  friend bool operator==(const RawDocument&, const RawDocument&) = default;
};

// Half-open byte range.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

}  // namespace mathel
