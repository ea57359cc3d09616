#include "ptree/expression.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "protected_ops.hpp"
#include "ptree/error.hpp"

namespace ptree {

namespace {

constexpr std::array<std::pair<Op, std::string_view>, 15> kOpNames{{
    {Op::Add, "add"},
    {Op::Sub, "sub"},
    {Op::Mul, "mul"},
    {Op::Div, "div"},
    {Op::Pow, "pow"},
    {Op::Sin, "sin"},
    {Op::Cos, "cos"},
    {Op::Tan, "tan"},
    {Op::Tanh, "tanh"},
    {Op::Exp, "exp"},
    {Op::Log, "log"},
    {Op::Sqrt, "sqrt"},
    {Op::Inv, "inv"},
    {Op::Square, "square"},
    {Op::Cube, "cube"},
}};

bool lookup_op(std::string_view name, Op& out) {
    for (auto [op, n] : kOpNames) {
        if (n == name) {
            out = op;
            return true;
        }
    }
    return false;
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string default_variable_name(std::size_t index) {
    return "x" + std::to_string(index);
}

std::string variable_name(std::size_t index, std::span<const std::string> variables) {
    if (variables.empty()) return default_variable_name(index);
    if (index >= variables.size()) {
        throw InputMismatch("variable index " + std::to_string(index) + " has no name");
    }
    return variables[index];
}

bool resolve_variable(std::string_view name, std::span<const std::string> variables, std::size_t& out) {
    if (!variables.empty()) {
        auto it = std::find(variables.begin(), variables.end(), name);
        if (it == variables.end()) return false;
        out = static_cast<std::size_t>(it - variables.begin());
        return true;
    }
    if (name.size() < 2 || name[0] != 'x') return false;
    auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), out);
    return ec == std::errc{} && ptr == name.data() + name.size();
}

bool is_number_start(std::string_view s, std::size_t pos) {
    const char c = s[pos];
    if ((c >= '0' && c <= '9') || c == '.') return true;
    if ((c == '-' || c == '+') && pos + 1 < s.size()) {
        const char d = s[pos + 1];
        return (d >= '0' && d <= '9') || d == '.';
    }
    return false;
}

bool is_ident_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

class Parser {
public:
    Parser(std::string_view text, std::span<const std::string> variables) : text_(text), variables_(variables) {}

    std::vector<Expression::Node> parse() {
        parse_term();
        skip_space();
        if (pos_ != text_.size()) throw ParseError("trailing input", pos_);
        return std::move(nodes_);
    }

private:
    void skip_space() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n')) ++pos_;
    }

    void expect(char c) {
        skip_space();
        if (pos_ >= text_.size() || text_[pos_] != c) throw ParseError(std::string("expected '") + c + "'", pos_);
        ++pos_;
    }

    void parse_term() {
        skip_space();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        const std::size_t start = pos_;
        if (is_number_start(text_, pos_)) {
            ++pos_;
            while (pos_ < text_.size()) {
                const char c = text_[pos_];
                const bool exponent_sign = (c == '-' || c == '+') && (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E');
                if (!(is_ident_char(c) || c == '.' || exponent_sign)) break;
                ++pos_;
            }
            double value = 0.0;
            if (!parse_double(text_.substr(start, pos_ - start), value) || !std::isfinite(value)) {
                throw ParseError("malformed number", start);
            }
            nodes_.push_back({Op::Literal, 0, value});
            return;
        }
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
        if (pos_ == start) throw ParseError("expected symbol", start);
        const std::string_view name = text_.substr(start, pos_ - start);
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            Op op{};
            if (!lookup_op(name, op)) throw ParseError("unknown operator '" + std::string(name) + "'", start);
            ++pos_;
            nodes_.push_back({op, 0, 0.0});
            for (int i = 0; i < arity(op); ++i) {
                if (i > 0) expect(',');
                parse_term();
            }
            expect(')');
            return;
        }
        std::size_t index = 0;
        if (!resolve_variable(name, variables_, index)) {
            throw ParseError("unknown variable '" + std::string(name) + "'", start);
        }
        nodes_.push_back({Op::Variable, static_cast<std::uint32_t>(index), 0.0});
    }

    std::string_view text_;
    std::span<const std::string> variables_;
    std::size_t pos_ = 0;
    std::vector<Expression::Node> nodes_;
};

}  // namespace

std::string_view op_name(Op op) {
    for (auto [o, n] : kOpNames) {
        if (o == op) return n;
    }
    return {};
}

// ---------------------------------------------------------------------------
// FunctionSet

FunctionSet::FunctionSet(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        symbols_[i].id = i;
        all_.push_back(i);
        if (symbols_[i].is_leaf()) leaves_.push_back(i);
    }
    if (leaves_.empty()) throw std::invalid_argument("function set has no terminal symbol");
}

FunctionSet FunctionSet::parse(std::string_view list, std::span<const std::string> variables) {
    std::vector<Symbol> symbols;
    std::size_t start = 0;
    while (start <= list.size()) {
        std::size_t end = list.find(',', start);
        if (end == std::string_view::npos) end = list.size();
        std::string_view token = list.substr(start, end - start);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        if (token.empty()) throw std::invalid_argument("empty symbol in function set");

        Symbol s;
        s.name = std::string(token);
        Op op{};
        double value = 0.0;
        std::size_t index = 0;
        if (lookup_op(token, op)) {
            s.op = op;
        } else if (token == "c") {
            s.op = Op::ConstantBranch;
        } else if (parse_double(token, value)) {
            s.op = Op::Literal;
            s.value = value;
        } else if (resolve_variable(token, variables, index)) {
            s.op = Op::Variable;
            s.variable = index;
        } else {
            throw LookupError("unknown symbol '" + s.name + "'");
        }
        symbols.push_back(std::move(s));
        start = end + 1;
    }
    return FunctionSet(std::move(symbols));
}

bool FunctionSet::has_constant_branch() const noexcept {
    return std::any_of(symbols_.begin(), symbols_.end(), [](const Symbol& s) { return s.op == Op::ConstantBranch; });
}

std::size_t FunctionSet::variable_count() const noexcept {
    std::size_t n = 0;
    for (const auto& s : symbols_) {
        if (s.op == Op::Variable) n = std::max(n, s.variable + 1);
    }
    return n;
}

std::string FunctionSet::to_string() const {
    std::string out;
    for (const auto& s : symbols_) {
        if (!out.empty()) out += ',';
        out += s.name;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Expression

Expression::Expression(std::vector<Node> prefix) : nodes_(std::move(prefix)) {
    // A prefix sequence is well formed iff the open-slot count reaches zero exactly at the end.
    std::size_t open = 1;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (open == 0 || nodes_[i].op == Op::ConstantBranch) throw std::invalid_argument("malformed expression");
        open = open - 1 + static_cast<std::size_t>(arity(nodes_[i].op));
    }
    if (open != 0) throw std::invalid_argument("malformed expression");
}

Expression Expression::variable(std::size_t index) {
    return Expression({{Op::Variable, static_cast<std::uint32_t>(index), 0.0}});
}

Expression Expression::constant(double value) {
    return Expression({{Op::Literal, 0, value}});
}

Expression Expression::apply(Op op, std::vector<Expression> children) {
    if (static_cast<std::size_t>(arity(op)) != children.size() || arity(op) == 0) {
        throw std::invalid_argument("argument count does not match operator arity");
    }
    std::vector<Node> nodes{{op, 0, 0.0}};
    for (auto& c : children) nodes.insert(nodes.end(), c.nodes_.begin(), c.nodes_.end());
    return Expression(std::move(nodes));
}

std::size_t Expression::depth() const {
    std::vector<std::size_t> stack;
    stack.reserve(nodes_.size());
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        const int a = arity(it->op);
        std::size_t d = 0;
        for (int i = 0; i < a; ++i) {
            d = std::max(d, stack.back());
            stack.pop_back();
        }
        stack.push_back(d + 1);
    }
    return stack.empty() ? 0 : stack.back();
}

std::size_t Expression::variable_count() const noexcept {
    std::size_t n = 0;
    for (const auto& node : nodes_) {
        if (node.op == Op::Variable) n = std::max<std::size_t>(n, node.variable + 1);
    }
    return n;
}

namespace {

void write_text(std::span<const Expression::Node> nodes, std::size_t& pos, std::span<const std::string> variables,
                std::string& out) {
    const auto& node = nodes[pos++];
    switch (node.op) {
    case Op::Variable:
        out += variable_name(node.variable, variables);
        return;
    case Op::Literal:
        out += format_double(node.value);
        return;
    default:
        break;
    }
    out += op_name(node.op);
    out += '(';
    for (int i = 0; i < arity(node.op); ++i) {
        if (i > 0) out += ',';
        write_text(nodes, pos, variables, out);
    }
    out += ')';
}

double evaluate_at(std::span<const Expression::Node> nodes, std::size_t& pos, std::span<const double> input) {
    const auto& node = nodes[pos++];
    switch (node.op) {
    case Op::Variable:
        if (node.variable >= input.size()) {
            throw InputMismatch("variable index " + std::to_string(node.variable) + " outside input of dimension " +
                                std::to_string(input.size()));
        }
        return input[node.variable];
    case Op::Literal:
        return node.value;
    default:
        break;
    }
    if (arity(node.op) == 1) return detail::apply_unary(node.op, evaluate_at(nodes, pos, input));
    const double a = evaluate_at(nodes, pos, input);
    const double b = evaluate_at(nodes, pos, input);
    return detail::apply_binary(node.op, a, b);
}

double mean_square(std::span<const double> predictions, std::span<const double> targets) {
    double sum = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double r = predictions[i] - targets[i];
        sum += r * r;
    }
    const double m = sum / static_cast<double>(targets.size());
    return std::isfinite(m) ? m : std::numeric_limits<double>::max();
}

}  // namespace

std::string to_text(const Expression& expr, std::span<const std::string> variables) {
    if (expr.empty()) return {};
    std::string out;
    std::size_t pos = 0;
    write_text(expr.nodes(), pos, variables, out);
    return out;
}

Expression from_text(std::string_view text, std::span<const std::string> variables) {
    return Expression(Parser(text, variables).parse());
}

double evaluate(const Expression& expr, std::span<const double> input) {
    if (expr.empty()) throw std::invalid_argument("empty expression");
    std::size_t pos = 0;
    return evaluate_at(expr.nodes(), pos, input);
}

// ---------------------------------------------------------------------------
// BatchEvaluator

std::span<const double> BatchEvaluator::predict(const Expression& expr, const Dataset& data) {
    if (expr.empty()) throw std::invalid_argument("empty expression");
    if (expr.variable_count() > data.dimension()) {
        throw InputMismatch("expression uses " + std::to_string(expr.variable_count()) +
                            " variables but the dataset has " + std::to_string(data.dimension()));
    }
    const std::size_t n = data.rows();
    stack_.clear();
    std::size_t next_free = 0;
    auto acquire = [&]() -> std::vector<double>& {
        if (next_free == pool_.size()) pool_.emplace_back();
        auto& buf = pool_[next_free];
        buf.resize(n);
        stack_.push_back(next_free++);
        return buf;
    };

    // Reversed prefix order is a valid postfix order with arguments popped first-to-last.
    const auto nodes = expr.nodes();
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
        const auto& node = *it;
        switch (node.op) {
        case Op::Variable: {
            auto col = data.column(node.variable);
            auto& out = acquire();
            std::copy(col.begin(), col.end(), out.begin());
            break;
        }
        case Op::Literal: {
            auto& out = acquire();
            std::fill(out.begin(), out.end(), node.value);
            break;
        }
        default:
            if (arity(node.op) == 1) {
                auto& a = pool_[stack_.back()];
                for (auto& v : a) v = detail::apply_unary(node.op, v);
            } else {
                const std::size_t first = stack_.back();
                stack_.pop_back();
                const std::size_t second = stack_.back();
                stack_.pop_back();
                auto& a = pool_[first];
                const auto& b = pool_[second];
                for (std::size_t i = 0; i < n; ++i) a[i] = detail::apply_binary(node.op, a[i], b[i]);
                // Keep buffers in stack order so the free index stays contiguous.
                std::swap(pool_[first], pool_[second]);
                stack_.push_back(second);
                next_free = second + 1;
            }
            break;
        }
    }
    return pool_[stack_.back()];
}

double BatchEvaluator::mse(const Expression& expr, const Dataset& data) {
    if (data.rows() == 0) throw std::invalid_argument("mse of an empty dataset");
    return mean_square(predict(expr, data), data.targets());
}

double mse(const Expression& expr, const Dataset& data) {
    BatchEvaluator evaluator;
    return evaluator.mse(expr, data);
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::vector<std::string> variable_names, std::vector<std::vector<double>> columns,
                 std::vector<double> targets)
    : names_(std::move(variable_names)), columns_(std::move(columns)), targets_(std::move(targets)) {
    if (names_.size() != columns_.size()) throw std::invalid_argument("variable names do not match columns");
    for (const auto& c : columns_) {
        if (c.size() != targets_.size()) throw std::invalid_argument("ragged dataset");
    }
}

std::vector<double> Dataset::row(std::size_t index) const {
    std::vector<double> r(columns_.size());
    for (std::size_t v = 0; v < columns_.size(); ++v) r[v] = columns_[v].at(index);
    return r;
}

void Dataset::write_csv(std::ostream& out) const {
    for (const auto& n : names_) out << n << ',';
    out << "target\n";
    for (std::size_t i = 0; i < rows(); ++i) {
        for (const auto& c : columns_) out << format_double(c[i]) << ',';
        out << format_double(targets_[i]) << '\n';
    }
}

Dataset Dataset::read_csv(std::istream& in) {
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
            cells.push_back(cell);
        }
        return cells;
    };
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty CSV input");
    auto header = split(line);
    if (header.size() < 2) throw std::invalid_argument("CSV header needs at least one variable and a target");
    std::vector<std::string> names(header.begin(), header.end() - 1);
    std::vector<std::vector<double>> columns(names.size());
    std::vector<double> targets;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto cells = split(line);
        if (cells.size() != header.size()) {
            throw std::invalid_argument("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                        " cells, expected " + std::to_string(header.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            if (!parse_double(cells[c], v)) {
                throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": bad number '" + cells[c] + "'");
            }
            if (c < names.size()) {
                columns[c].push_back(v);
            } else {
                targets.push_back(v);
            }
        }
    }
    if (targets.empty()) throw std::invalid_argument("CSV has no data rows");
    return Dataset(std::move(names), std::move(columns), std::move(targets));
}

}  // namespace ptree
