#pragma once

#include <cmath>

#include "ptree/expression.hpp"

namespace ptree::detail {

inline constexpr double kMagnitudeBound = 1e300;

inline double finite_or_one(double v) noexcept {
    return std::isfinite(v) ? v : 1.0;
}

inline double clamp_magnitude(double v) noexcept {
    if (std::isnan(v)) return 1.0;
    if (v > kMagnitudeBound) return kMagnitudeBound;
    if (v < -kMagnitudeBound) return -kMagnitudeBound;
    return v;
}

inline double apply_binary(Op op, double a, double b) noexcept {
    switch (op) {
    case Op::Add:
        return finite_or_one(a + b);
    case Op::Sub:
        return finite_or_one(a - b);
    case Op::Mul:
        return finite_or_one(a * b);
    case Op::Div:
        return b == 0.0 ? 1.0 : finite_or_one(a / b);
    case Op::Pow:
        return clamp_magnitude(std::pow(std::fabs(a), b));
    default:
        return 1.0;
    }
}

inline double apply_unary(Op op, double a) noexcept {
    switch (op) {
    case Op::Sin:
        return std::sin(a);
    case Op::Cos:
        return std::cos(a);
    case Op::Tan:
        return clamp_magnitude(std::tan(a));
    case Op::Tanh:
        return std::tanh(a);
    case Op::Exp:
        return clamp_magnitude(std::exp(a));
    case Op::Log:
        return a == 0.0 ? 0.0 : std::log(std::fabs(a));
    case Op::Sqrt:
        return std::sqrt(std::fabs(a));
    case Op::Inv:
        return a == 0.0 ? 1.0 : finite_or_one(1.0 / a);
    case Op::Square:
        return clamp_magnitude(a * a);
    case Op::Cube:
        return clamp_magnitude(a * a * a);
    default:
        return 1.0;
    }
}

}  // namespace ptree::detail
