#include "etfrp/numfmt.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

namespace etfrp {

std::string format_sig9(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("format_sig9: non-finite value");
  if (value == 0.0) return "0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 9);
  if (ec != std::errc{}) throw std::runtime_error("format_sig9: to_chars failed");
  return std::string(buf, end);
}

double quantize_sig9(double value) {
  if (value == 0.0) return 0.0;
  const std::string text = format_sig9(value);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{}) throw std::runtime_error("quantize_sig9: from_chars failed");
  return out;
}

}  // namespace etfrp
