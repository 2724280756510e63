#pragma once

#include <string_view>

namespace mathel {

// True for the LaTeX name of a Greek letter without the backslash,
// e.g. "alpha", "Omega", "varphi".
bool is_greek_command(std::string_view name);

// Canonical identifier keys are a single ASCII letter or a backslashed Greek
// letter command (`\alpha`). Unicode Greek is not accepted.
bool is_identifier_symbol(std::string_view symbol);

}  // namespace mathel
