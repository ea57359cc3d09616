#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ptree {

/// Shape of the constant subtree: one float-position node choosing m, then a
/// chain of digit nodes whose concatenation gives the integer mantissa.
struct ConstantBranchSpec {
    int m_min = 1;
    int m_max = 6;
    int digit_depth = 3;

    int m_count() const noexcept { return m_max - m_min + 1; }
    void validate() const;

    friend bool operator==(const ConstantBranchSpec&, const ConstantBranchSpec&) = default;
};

struct ConstantPath {
    int m = 0;
    std::vector<std::uint8_t> digits;
    double value = 0.0;
};

/// gamma * 10^-m, gamma being the decimal concatenation of `digits`.
/// Computed as gamma / 10^m so the result is the double nearest the decimal.
double resolve_constant(int m, std::span<const std::uint8_t> digits);
double resolve_constant(int m, std::span<const std::uint8_t> digits, const ConstantBranchSpec& spec);

struct ConstantRange {
    double min = 0.0;
    double max = 0.0;
    double smallest_positive = 0.0;
};

ConstantRange constant_range(const ConstantBranchSpec& spec);

}  // namespace ptree
