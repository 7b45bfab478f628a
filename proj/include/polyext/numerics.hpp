#pragma once

#include <cmath>

namespace polyext {

// Neumaier summation.
struct CompensatedSum {
    double sum = 0.0, comp = 0.0;
    void add(double v) {
        double t = sum + v;
        comp += std::fabs(sum) >= std::fabs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

}  // namespace polyext
