#pragma once

#include <string>

namespace invit {

/// Shortest locale-independent rendering with 17 significant digits, which
/// round-trips every double exactly.
std::string format_g17(double value);

}  // namespace invit
