#pragma once

#include <string>

namespace courtside {

// Fixed-point with `decimals` places; -0 normalizes to 0. Coordinates use 2.
std::string format_fixed(double v, int decimals);

// 9 significant digits, the output format for losses and probabilities.
std::string format_sig9(double v);

}  // namespace courtside
