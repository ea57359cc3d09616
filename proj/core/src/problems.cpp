#include "ptree/problems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ptree/error.hpp"

namespace ptree {

namespace {

double nguyen4(std::span<const double> v) {
    const double x = v[0];
    return x * x * x * x * x * x + x * x * x * x * x + x * x * x * x + x * x * x + x * x + x;
}

double nguyen7(std::span<const double> v) {
    const double x = v[0];
    return std::log(x + 1.0) + std::log(x * x + 1.0);
}

double pagie1(std::span<const double> v) {
    return 1.0 / (1.0 + std::pow(v[0], -4.0)) + 1.0 / (1.0 + std::pow(v[1], -4.0));
}

double keijzer6(std::span<const double> v) {
    const double n = std::floor(v[0]);
    double sum = 0.0;
    for (double i = 1.0; i <= n; i += 1.0) sum += 1.0 / i;
    return sum;
}

// Variables are u, v, w, x, y at indices 0..4.
double korns12(std::span<const double> v) {
    const double w = v[2];
    const double x = v[3];
    return 2.0 - 2.1 * std::cos(9.8 * x) * std::sin(1.3 * w);
}

double vladislavleva4(std::span<const double> v) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 5; ++i) sum += (v[i] - 3.0) * (v[i] - 3.0);
    return 10.0 / (5.0 + sum);
}

const std::vector<std::string> kOneVar{"x"};
const std::vector<std::string> kTwoVar{"x", "y"};
const std::vector<std::string> kFiveVar{"u", "v", "w", "x", "y"};

}  // namespace

DataSpec DataSpec::uniform(double low, double high, std::size_t count) {
    DataSpec s;
    s.kind = Kind::Uniform;
    s.low = low;
    s.high = high;
    s.count = count;
    return s;
}

DataSpec DataSpec::equidistant(double low, double high, double step) {
    DataSpec s;
    s.kind = Kind::Equidistant;
    s.low = low;
    s.high = high;
    s.step = step;
    return s;
}

void DataSpec::validate() const {
    if (!(low < high)) throw std::invalid_argument("data range needs low < high");
    if (kind == Kind::Uniform && count < 1) throw std::invalid_argument("uniform data needs count >= 1");
    if (kind == Kind::Equidistant && !(step > 0.0)) throw std::invalid_argument("equidistant data needs step > 0");
}

std::size_t DataSpec::grid_points() const {
    // Slack absorbs representation error in step (0.4 is not exact).
    return static_cast<std::size_t>(std::floor((high - low) / step + 1e-9)) + 1;
}

std::string DataSpec::to_string() const {
    std::ostringstream out;
    if (kind == Kind::Uniform) {
        out << "U[" << low << "," << high << "," << count << "]";
    } else {
        out << "E[" << low << "," << high << "," << step << "]";
    }
    return out.str();
}

const std::vector<std::string>& problem_names() {
    static const std::vector<std::string> names{"nguyen4", "nguyen7", "pagie1", "keijzer6", "korns12", "vladislavleva4"};
    return names;
}

Problem make_problem(std::string_view name) {
    Problem p;
    p.name = std::string(name);
    if (name == "nguyen4" || name == "nguyen7") {
        p.variables = kOneVar;
        p.target = name == "nguyen4" ? nguyen4 : nguyen7;
        p.functions = FunctionSet::parse("add,sub,mul,div,sin,cos,exp,log,x,1", p.variables);
        p.train = name == "nguyen4" ? DataSpec::uniform(-1.0, 1.0, 20) : DataSpec::uniform(0.0, 2.0, 20);
    } else if (name == "pagie1") {
        p.variables = kTwoVar;
        p.target = pagie1;
        p.functions = FunctionSet::parse("add,sub,mul,div,pow,sqrt,log,inv,x,y,c", p.variables);
        p.train = DataSpec::equidistant(-5.0, 5.0, 0.4);
    } else if (name == "keijzer6") {
        p.variables = kOneVar;
        p.target = keijzer6;
        p.functions = FunctionSet::parse("add,mul,sin,cos,sqrt,log,inv,x,c", p.variables);
        p.train = DataSpec::equidistant(1.0, 50.0, 1.0);
        p.test = DataSpec::equidistant(1.0, 120.0, 1.0);
    } else if (name == "korns12") {
        p.variables = kFiveVar;
        p.target = korns12;
        p.functions =
            FunctionSet::parse("add,sub,mul,div,sin,cos,tan,tanh,sqrt,exp,log,square,cube,u,v,w,x,y,c", p.variables);
        p.train = DataSpec::uniform(-50.0, 50.0, 10000);
        p.test = DataSpec::uniform(-50.0, 50.0, 10000);
    } else if (name == "vladislavleva4") {
        p.variables = kFiveVar;
        p.target = vladislavleva4;
        p.functions =
            FunctionSet::parse("add,sub,mul,div,pow,sin,cos,sqrt,exp,log,inv,u,v,w,x,y,c", p.variables);
        p.train = DataSpec::uniform(0.05, 6.05, 1024);
        p.test = DataSpec::uniform(-0.25, 6.35, 5000);
    } else {
        throw LookupError("unknown problem '" + std::string(name) + "'");
    }
    return p;
}

Dataset generate(const DataSpec& spec, const Problem& problem, Rng& rng) {
    spec.validate();
    const std::size_t dim = problem.variables.size();
    std::vector<std::vector<double>> columns(dim);
    std::vector<double> targets;
    std::vector<double> point(dim);

    if (spec.kind == DataSpec::Kind::Uniform) {
        for (auto& c : columns) c.reserve(spec.count);
        targets.reserve(spec.count);
        for (std::size_t r = 0; r < spec.count; ++r) {
            for (std::size_t v = 0; v < dim; ++v) {
                point[v] = spec.low + (spec.high - spec.low) * uniform01(rng);
                columns[v].push_back(point[v]);
            }
            targets.push_back(problem.target(point));
        }
    } else {
        const std::size_t per_axis = spec.grid_points();
        std::size_t rows = 1;
        for (std::size_t v = 0; v < dim; ++v) rows *= per_axis;
        std::vector<double> axis(per_axis);
        for (std::size_t i = 0; i < per_axis; ++i) {
            axis[i] = std::min(spec.low + static_cast<double>(i) * spec.step, spec.high);
        }
        // Row-major grid: the first variable varies slowest.
        std::vector<std::size_t> idx(dim, 0);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t v = 0; v < dim; ++v) {
                point[v] = axis[idx[v]];
                columns[v].push_back(point[v]);
            }
            targets.push_back(problem.target(point));
            for (std::size_t v = dim; v-- > 0;) {
                if (++idx[v] < per_axis) break;
                idx[v] = 0;
            }
        }
    }
    return Dataset(problem.variables, std::move(columns), std::move(targets));
}

}  // namespace ptree
