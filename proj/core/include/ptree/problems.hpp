#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ptree/expression.hpp"
#include "ptree/random.hpp"

namespace ptree {

/// U[low, high, count] or E[low, high, step]. Equidistant specs over several
/// variables form the full grid.
struct DataSpec {
    enum class Kind { Uniform, Equidistant };

    Kind kind = Kind::Uniform;
    double low = 0.0;
    double high = 1.0;
    std::size_t count = 1;
    double step = 1.0;

    static DataSpec uniform(double low, double high, std::size_t count);
    static DataSpec equidistant(double low, double high, double step);

    void validate() const;
    /// Points per axis for equidistant specs.
    std::size_t grid_points() const;
    std::string to_string() const;
};

using TargetFunction = double (*)(std::span<const double>);

struct Problem {
    std::string name;
    std::vector<std::string> variables;
    TargetFunction target = nullptr;
    FunctionSet functions;
    DataSpec train;
    std::optional<DataSpec> test;
};

const std::vector<std::string>& problem_names();
Problem make_problem(std::string_view name);

Dataset generate(const DataSpec& spec, const Problem& problem, Rng& rng);

}  // namespace ptree
