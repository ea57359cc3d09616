#include "ptree/constant_branch.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ptree {

namespace {

// Powers of ten up to 1e22 are exact doubles.
constexpr int kMaxExactPower = 22;

double exact_pow10(int e) {
    double p = 1.0;
    for (int i = 0; i < e; ++i) p *= 10.0;
    return p;
}

}  // namespace

void ConstantBranchSpec::validate() const {
    if (m_min > m_max) throw std::invalid_argument("constant branch m range is empty");
    if (m_min < 0 || m_max > kMaxExactPower) throw std::invalid_argument("constant branch m range outside [0, 22]");
    if (digit_depth < 1 || digit_depth > 15) throw std::invalid_argument("constant digit depth must be in [1, 15]");
}

double resolve_constant(int m, std::span<const std::uint8_t> digits) {
    if (m < 0 || m > kMaxExactPower) throw std::invalid_argument("float position " + std::to_string(m) + " out of range");
    if (digits.empty() || digits.size() > 15) throw std::invalid_argument("digit count must be in [1, 15]");
    std::uint64_t gamma = 0;
    for (auto d : digits) {
        if (d > 9) throw std::invalid_argument("digit " + std::to_string(d) + " out of range");
        gamma = gamma * 10 + d;
    }
    return static_cast<double>(gamma) / exact_pow10(m);
}

double resolve_constant(int m, std::span<const std::uint8_t> digits, const ConstantBranchSpec& spec) {
    if (m < spec.m_min || m > spec.m_max) {
        throw std::invalid_argument("float position " + std::to_string(m) + " outside the branch's m range");
    }
    if (digits.size() != static_cast<std::size_t>(spec.digit_depth)) {
        throw std::invalid_argument("digit count does not match the branch depth");
    }
    return resolve_constant(m, digits);
}

ConstantRange constant_range(const ConstantBranchSpec& spec) {
    spec.validate();
    const double largest_gamma = exact_pow10(spec.digit_depth) - 1.0;
    return {0.0, largest_gamma / exact_pow10(spec.m_min), 1.0 / exact_pow10(spec.m_max)};
}

}  // namespace ptree
