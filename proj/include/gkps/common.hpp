#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gkps {

inline constexpr double kSqrtPi = 1.7724538509055160273;

// Remainder of x modulo sqrt(pi), folded into [-sqrt(pi)/2, sqrt(pi)/2).
// floor(x/sqrt(pi) + 1/2) rather than round(): both edges must land on the
// closed end of the interval.
inline double fold_remainder(double x) {
    return x - kSqrtPi * std::floor(x / kSqrtPi + 0.5);
}

// Binary entropy in bits, continuous at the endpoints.
inline double h2(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gkps
