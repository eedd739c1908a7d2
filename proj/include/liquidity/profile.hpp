#pragma once

#include <functional>
#include <string>

namespace liquidity {

// Illiquid-regime value shape as a function of the stock fraction π ∈ [0,1].
// Log utility: V¹(π,x) = log(x)/ρ + value(π). Power utility: V¹(π,x) =
// value(π)·x^γ/γ. consumption(π) is the optimal c/x in the frozen regime.
struct IlliquidProfile {
    double gamma = 0.0;
    std::string kind;
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    std::function<double(double)> consumption;
};

}  // namespace liquidity
