#pragma once

#include <string>

namespace etfrp {

// Decimal text with 9 significant digits, printf "%.9g" style: correctly
// rounded (ties to even) from the exact binary value, trailing zeros trimmed.
std::string format_sig9(double value);

// Nearest double to format_sig9(value). Idempotent: quantize_sig9(quantize_sig9(x)) == quantize_sig9(x).
double quantize_sig9(double value);

}  // namespace etfrp
