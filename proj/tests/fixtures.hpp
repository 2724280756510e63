#pragma once

#include <filesystem>
#include <string>

#include "mathel/corpus.hpp"

namespace mathel::testing {

inline std::filesystem::path fixture(const std::string& relative) {
  return std::filesystem::path(MATHEL_FIXTURES) / relative;
}

inline RawDocument wiki(std::string body, std::string title = "Test") {
  RawDocument doc;
  doc.title = std::move(title);
  doc.body = std::move(body);
  return doc;
}

inline RawDocument mass_energy() { return load_document(fixture("articles/Mass–energy_equivalence.wiki")); }

}  // namespace mathel::testing
