#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ptree {

enum class Op : std::uint8_t {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Sin,
    Cos,
    Tan,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Inv,
    Square,
    Cube,
    Variable,
    Literal,
    ConstantBranch,
};

enum class SymbolKind : std::uint8_t { Terminal, NonTerminal, ConstantMarker };

constexpr int arity(Op op) noexcept {
    switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow:
        return 2;
    case Op::Variable:
    case Op::Literal:
    case Op::ConstantBranch:
        return 0;
    default:
        return 1;
    }
}

/// Operator name as used by the text format ("add", "sin", ...). Leaves have no name.
std::string_view op_name(Op op);

struct Symbol {
    std::size_t id = 0;
    Op op = Op::Literal;
    std::size_t variable = 0;  // for Op::Variable
    double value = 0.0;        // for Op::Literal
    std::string name;

    SymbolKind kind() const noexcept {
        if (op == Op::ConstantBranch) return SymbolKind::ConstantMarker;
        return ptree::arity(op) == 0 ? SymbolKind::Terminal : SymbolKind::NonTerminal;
    }
    int arity() const noexcept { return ptree::arity(op); }
    // Constant markers count as terminals for depth purposes.
    bool is_leaf() const noexcept { return arity() == 0; }
};

/// Ordered symbol alphabet with dense ids.
class FunctionSet {
public:
    FunctionSet() = default;

    /// Parses a comma-separated list such as "add,mul,sin,x,1,c". Identifiers not
    /// naming an operator must appear in `variables`; numbers become literals and
    /// "c" the constant-branch marker.
    static FunctionSet parse(std::string_view list, std::span<const std::string> variables);

    explicit FunctionSet(std::vector<Symbol> symbols);

    std::size_t size() const noexcept { return symbols_.size(); }
    const Symbol& operator[](std::size_t id) const { return symbols_[id]; }
    std::span<const Symbol> symbols() const noexcept { return symbols_; }

    /// Admissible choices below / at the depth limit, ascending by id.
    std::span<const std::size_t> all_ids() const noexcept { return all_; }
    std::span<const std::size_t> leaf_ids() const noexcept { return leaves_; }

    bool has_constant_branch() const noexcept;
    /// Largest variable index referenced plus one.
    std::size_t variable_count() const noexcept;

    std::string to_string() const;

private:
    std::vector<Symbol> symbols_;
    std::vector<std::size_t> all_;
    std::vector<std::size_t> leaves_;
};

/// A concrete program, stored as its prefix-order node sequence.
class Expression {
public:
    struct Node {
        Op op = Op::Literal;
        std::uint32_t variable = 0;
        double value = 0.0;

        friend bool operator==(const Node&, const Node&) = default;
    };

    Expression() = default;
    explicit Expression(std::vector<Node> prefix);

    static Expression variable(std::size_t index);
    static Expression constant(double value);
    static Expression apply(Op op, std::vector<Expression> children);

    std::span<const Node> nodes() const noexcept { return nodes_; }
    bool empty() const noexcept { return nodes_.empty(); }

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t depth() const;
    /// Largest variable index plus one, 0 if there are none.
    std::size_t variable_count() const noexcept;

    friend bool operator==(const Expression&, const Expression&) = default;

private:
    std::vector<Node> nodes_;
};

/// Prefix text such as "add(x,sin(x))". Variables print by name; an empty
/// name list prints x0, x1, ...
std::string to_text(const Expression& expr, std::span<const std::string> variables = {});
Expression from_text(std::string_view text, std::span<const std::string> variables = {});

/// Fixed-dimension sample set, stored per variable.
class Dataset {
public:
    Dataset(std::vector<std::string> variable_names, std::vector<std::vector<double>> columns,
            std::vector<double> targets);

    std::size_t rows() const noexcept { return targets_.size(); }
    std::size_t dimension() const noexcept { return columns_.size(); }
    std::span<const std::string> variable_names() const noexcept { return names_; }
    std::span<const double> column(std::size_t variable) const { return columns_.at(variable); }
    std::span<const double> targets() const noexcept { return targets_; }
    std::vector<double> row(std::size_t index) const;

    void write_csv(std::ostream& out) const;
    static Dataset read_csv(std::istream& in);

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
    std::vector<double> targets_;
};

/// Protected pointwise evaluation; never returns a non-finite value.
double evaluate(const Expression& expr, std::span<const double> input);

/// Column-at-a-time evaluator; reuses its scratch buffers between calls.
class BatchEvaluator {
public:
    /// Predictions for every row; the span is valid until the next call.
    std::span<const double> predict(const Expression& expr, const Dataset& data);
    double mse(const Expression& expr, const Dataset& data);

private:
    std::vector<std::vector<double>> pool_;
    std::vector<std::size_t> stack_;
};

double mse(const Expression& expr, const Dataset& data);

}  // namespace ptree
