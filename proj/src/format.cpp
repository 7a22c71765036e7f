#include "courtside/format.hpp"

#include <cstdio>

namespace courtside {

std::string format_fixed(double v, int decimals) {
    if (v == 0.0) v = 0.0;  // fold -0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string format_sig9(double v) {
    if (v == 0.0) v = 0.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace courtside
