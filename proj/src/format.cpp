#include "invit/format.hpp"

#include <charconv>
#include <system_error>

namespace invit {

std::string format_g17(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value,
                                 std::chars_format::general, 17);
  if (ec != std::errc{}) return "nan";
  return std::string(buffer, end);
}

}  // namespace invit
