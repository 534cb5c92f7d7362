#pragma once

// Double-precision reference models for every function the fixed-point
// datapath approximates. These are the oracles the error analysis and the
// test suite measure against.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace duomax {

inline constexpr double kSqrt2OverPi = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluCubic = 0.044715;

// Numerically stable softmax: subtract the maximum before exponentiating.
inline std::vector<double> ref_softmax(const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("ref_softmax: empty input");
    double mx = *std::max_element(x.begin(), x.end());
    std::vector<double> y(x.size());
    double sum = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        y[i] = std::exp(x[i] - mx);
        sum += y[i];
    }
    for (double& v : y) v /= sum;
    return y;
}

inline double ref_gelu_erf(double z) {
    return 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0)));
}

inline double ref_gelu_tanh(double z) {
    return 0.5 * z * (1.0 + std::tanh(kSqrt2OverPi * (z + kGeluCubic * z * z * z)));
}

// Same tanh approximation routed through a stable two-element softmax on
// [k, -k]; algebraically identical to ref_gelu_tanh.
inline double ref_gelu_via_softmax(double z) {
    double k = kSqrt2OverPi * (z + kGeluCubic * z * z * z);
    double m = std::abs(k);
    double e1 = std::exp(k - m);
    double e2 = std::exp(-k - m);
    return z * (e1 / (e1 + e2));
}

}  // namespace duomax
