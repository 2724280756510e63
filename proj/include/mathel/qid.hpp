#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mathel {

// A knowledge-base item id of the form `Q[0-9]+`. Ordering is numeric so
// that Q9 sorts before Q10.
class Qid {
 public:
  // Throws Error(invalid_qid) when `text` does not match `Q[0-9]+`.
  static Qid parse(std::string_view text);
  static std::optional<Qid> try_parse(std::string_view text);
  static bool is_valid(std::string_view text);

  const std::string& str() const noexcept { return text_; }
  std::uint64_t number() const noexcept { return number_; }

  friend bool operator==(const Qid& a, const Qid& b) noexcept {
    return a.text_ == b.text_;
  }
  friend std::strong_ordering operator<=>(const Qid& a, const Qid& b) noexcept {
    if (auto c = a.number_ <=> b.number_; c != 0) return c;
    return a.text_ <=> b.text_;
  }

 private:
  Qid(std::string text, std::uint64_t number)
      : text_(std::move(text)), number_(number) {}

  std::string text_;
  std::uint64_t number_ = 0;
};

// Ascending numeric QID; candidates without a QID sort last.
inline std::strong_ordering compare_optional_qid(const std::optional<Qid>& a,
                                                 const std::optional<Qid>& b) {
  if (a && b) return *a <=> *b;
  if (a) return std::strong_ordering::less;
  if (b) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace mathel
