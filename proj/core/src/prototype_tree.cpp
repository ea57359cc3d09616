#include "ptree/prototype_tree.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "ptree/error.hpp"

namespace ptree {

void SearchParams::validate() const {
    if (!(k > 0.0)) throw std::invalid_argument("rank exponent k must be positive");
    if (!(delta_d >= 0.0)) throw std::invalid_argument("depth discount must be non-negative");
    if (!(delta_p >= 0.0)) throw std::invalid_argument("stagnation penalty must be non-negative");
    if (max_depth < 1 || max_depth > 1000) throw std::invalid_argument("max depth must be in [1, 1000]");
}

std::vector<double> rank_probabilities(std::size_t n, double k) {
    std::vector<double> p(n);
    double total = 0.0;
    for (std::size_t r = 1; r <= n; ++r) {
        p[r - 1] = std::pow(static_cast<double>(r), -k);
        total += p[r - 1];
    }
    for (auto& v : p) v /= total;
    return p;
}

PrototypeTree::PrototypeTree(FunctionSet functions, SearchParams params, ConstantBranchSpec constants)
    : functions_(std::move(functions)), params_(params), constants_(constants), rng_(params.rng_seed) {
    params_.validate();
    constants_.validate();
    if (functions_.leaf_ids().empty()) throw StructuralError("function set has no terminal symbol");
    const auto all = functions_.all_ids();
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (functions_[all[i]].is_leaf()) leaf_positions_.push_back(i);
    }
    make_node(NodeKind::Program, 1, 0);
}

std::size_t PrototypeTree::admissible_count(NodeKind kind, std::uint16_t depth) const {
    switch (kind) {
    case NodeKind::Program:
        return depth >= params_.max_depth ? functions_.leaf_ids().size() : functions_.all_ids().size();
    case NodeKind::FloatPosition:
        return static_cast<std::size_t>(constants_.m_count());
    case NodeKind::Digit:
        return 10;
    }
    return 0;
}

std::size_t PrototypeTree::label_of(const PrototypeNode& n, std::size_t choice) const {
    switch (n.kind) {
    case NodeKind::Program:
        return n.depth >= params_.max_depth ? functions_.leaf_ids()[choice] : functions_.all_ids()[choice];
    case NodeKind::FloatPosition:
        return static_cast<std::size_t>(constants_.m_min) + choice;
    case NodeKind::Digit:
        return choice;
    }
    return 0;
}

NodeId PrototypeTree::make_node(NodeKind kind, std::uint16_t depth, std::uint8_t digit_index) {
    PrototypeNode n;
    n.kind = kind;
    n.depth = depth;
    n.digit_index = digit_index;
    n.first_record = static_cast<std::uint32_t>(records_.size());
    n.record_count = static_cast<std::uint16_t>(admissible_count(kind, depth));
    records_.resize(records_.size() + n.record_count);
    nodes_.push_back(n);
    return static_cast<NodeId>(nodes_.size() - 1);
}

std::uint32_t PrototypeTree::ensure_children(NodeId id, std::size_t choice) {
    const std::uint32_t rec_index = nodes_[id].first_record + static_cast<std::uint32_t>(choice);
    if (records_[rec_index].first_child != kNoChild) return records_[rec_index].first_child;

    // Copy what we need; make_node reallocates nodes_ and records_.
    const PrototypeNode parent = nodes_[id];
    std::uint32_t first = kNoChild;
    auto add = [&](NodeKind kind, std::uint16_t depth, std::uint8_t digit) {
        const NodeId child = make_node(kind, depth, digit);
        if (first == kNoChild) first = child;
    };
    switch (parent.kind) {
    case NodeKind::Program: {
        const auto& sym = functions_[label_of(parent, choice)];
        if (sym.kind() == SymbolKind::ConstantMarker) {
            add(NodeKind::FloatPosition, parent.depth, 0);
        } else {
            for (int i = 0; i < sym.arity(); ++i) add(NodeKind::Program, static_cast<std::uint16_t>(parent.depth + 1), 0);
        }
        break;
    }
    case NodeKind::FloatPosition:
        add(NodeKind::Digit, parent.depth, 0);
        break;
    case NodeKind::Digit:
        if (parent.digit_index + 1 < constants_.digit_depth) {
            add(NodeKind::Digit, parent.depth, static_cast<std::uint8_t>(parent.digit_index + 1));
        }
        break;
    }
    records_[rec_index].first_child = first;
    return first;
}

std::span<const ChoiceRecord> PrototypeTree::records(NodeId id) const {
    const auto& n = nodes_.at(id);
    return std::span<const ChoiceRecord>(records_).subspan(n.first_record, n.record_count);
}

std::vector<std::size_t> PrototypeTree::choice_labels(NodeId id) const {
    const auto& n = nodes_.at(id);
    std::vector<std::size_t> out(n.record_count);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = label_of(n, i);
    return out;
}

std::vector<NodeId> PrototypeTree::children(NodeId id, std::size_t choice) const {
    const auto& n = nodes_.at(id);
    if (choice >= n.record_count) throw std::out_of_range("choice index out of range");
    const auto& rec = records_[n.first_record + choice];
    std::vector<NodeId> out;
    if (rec.first_child == kNoChild) return out;
    std::size_t count = 1;
    if (n.kind == NodeKind::Program) {
        const auto& sym = functions_[label_of(n, choice)];
        count = sym.kind() == SymbolKind::ConstantMarker ? 1 : static_cast<std::size_t>(sym.arity());
    }
    for (std::size_t i = 0; i < count; ++i) out.push_back(rec.first_child + static_cast<NodeId>(i));
    return out;
}

// ---------------------------------------------------------------------------
// Distributions

const std::vector<double>& PrototypeTree::rank_cdf(std::size_t n) const {
    if (rank_cdf_cache_.size() <= n) rank_cdf_cache_.resize(n + 1);
    auto& cdf = rank_cdf_cache_[n];
    if (cdf.empty()) {
        cdf = rank_probabilities(n, params_.k);
        for (std::size_t i = 1; i < n; ++i) cdf[i] += cdf[i - 1];
    }
    return cdf;
}

void PrototypeTree::ranked_choices(const PrototypeNode& n, std::vector<std::uint32_t>& order) const {
    order.resize(n.record_count);
    for (std::uint32_t i = 0; i < n.record_count; ++i) order[i] = i;
    const ChoiceRecord* recs = records_.data() + n.first_record;
    // Insertion sort is stable, so equal errors rank by ascending choice (= symbol id).
    for (std::size_t i = 1; i < order.size(); ++i) {
        const std::uint32_t v = order[i];
        std::size_t j = i;
        while (j > 0 && recs[v].best_error < recs[order[j - 1]].best_error) {
            order[j] = order[j - 1];
            --j;
        }
        order[j] = v;
    }
}

std::vector<double> PrototypeTree::choice_probabilities(NodeId id) const {
    const auto& n = nodes_.at(id);
    if (n.record_count == 0) throw StructuralError("node has no admissible symbol");
    std::vector<double> p(n.record_count, 0.0);
    if (n.kind == NodeKind::Program && params_.terminal_bias_first_visit && !n.first_visit_done) {
        if (n.depth >= params_.max_depth) {
            std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(n.record_count));
        } else {
            for (auto pos : leaf_positions_) p[pos] = 1.0 / static_cast<double>(leaf_positions_.size());
        }
        return p;
    }
    if (n.evaluated_count < n.record_count) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(n.record_count));
        return p;
    }
    const auto weights = rank_probabilities(n.record_count, params_.k);
    std::vector<std::uint32_t> order;
    ranked_choices(n, order);
    for (std::size_t r = 0; r < order.size(); ++r) p[order[r]] = weights[r];
    return p;
}

std::size_t PrototypeTree::draw_choice(NodeId id, Rng& rng) {
    const auto& n = nodes_[id];
    if (n.kind == NodeKind::Program && params_.terminal_bias_first_visit && !n.first_visit_done) {
        if (n.depth >= params_.max_depth) return uniform_index(rng, n.record_count);
        return leaf_positions_[uniform_index(rng, leaf_positions_.size())];
    }
    if (n.evaluated_count < n.record_count) return uniform_index(rng, n.record_count);

    const auto& cdf = rank_cdf(n.record_count);
    const double u = uniform01(rng);
    std::size_t rank = 0;
    while (rank + 1 < cdf.size() && u >= cdf[rank]) ++rank;
    ranked_choices(n, order_scratch_);
    return order_scratch_[rank];
}

// ---------------------------------------------------------------------------
// Sampling

template <class Chooser>
std::uint16_t PrototypeTree::visit_program(NodeId id, Chooser& choose, SamplePath& path,
                                           std::vector<Expression::Node>& out) {
    const std::size_t choice = choose(id);
    nodes_[id].first_visit_done = true;
    const std::uint16_t depth = nodes_[id].depth;
    const std::size_t entry = path.entries.size();
    path.entries.push_back({id, static_cast<std::uint32_t>(choice), depth, depth});

    const Symbol& sym = functions_[label_of(nodes_[id], choice)];
    std::uint16_t leaf_depth = depth;
    switch (sym.kind()) {
    case SymbolKind::ConstantMarker: {
        const NodeId float_node = ensure_children(id, choice);
        out.push_back({Op::Literal, 0, visit_constant(float_node, depth, choose, path)});
        break;
    }
    case SymbolKind::Terminal:
        if (sym.op == Op::Variable) {
            out.push_back({Op::Variable, static_cast<std::uint32_t>(sym.variable), 0.0});
        } else {
            out.push_back({Op::Literal, 0, sym.value});
        }
        break;
    case SymbolKind::NonTerminal: {
        out.push_back({sym.op, 0, 0.0});
        const NodeId first = ensure_children(id, choice);
        for (int i = 0; i < sym.arity(); ++i) {
            leaf_depth = std::max(leaf_depth, visit_program(first + static_cast<NodeId>(i), choose, path, out));
        }
        break;
    }
    }
    path.entries[entry].branch_leaf_depth = leaf_depth;
    return leaf_depth;
}

template <class Chooser>
double PrototypeTree::visit_constant(NodeId float_node, std::uint16_t depth, Chooser& choose, SamplePath& path) {
    const std::size_t m_choice = choose(float_node);
    nodes_[float_node].first_visit_done = true;
    path.entries.push_back({float_node, static_cast<std::uint32_t>(m_choice), depth, depth});
    const int m = static_cast<int>(label_of(nodes_[float_node], m_choice));

    std::vector<std::uint8_t> digits;
    digits.reserve(static_cast<std::size_t>(constants_.digit_depth));
    NodeId current = ensure_children(float_node, m_choice);
    while (true) {
        const std::size_t d = choose(current);
        nodes_[current].first_visit_done = true;
        path.entries.push_back({current, static_cast<std::uint32_t>(d), depth, depth});
        digits.push_back(static_cast<std::uint8_t>(d));
        const std::uint32_t next = ensure_children(current, d);
        if (next == kNoChild) break;
        current = next;
    }
    return resolve_constant(m, digits);
}

template <class Chooser>
SamplePath PrototypeTree::sample_with(Chooser& choose) {
    SamplePath path;
    std::vector<Expression::Node> out;
    visit_program(root(), choose, path, out);
    path.expression = Expression(std::move(out));
    return path;
}

SamplePath PrototypeTree::sample_instance() {
    return sample_instance(rng_);
}

SamplePath PrototypeTree::sample_instance(Rng& rng) {
    auto choose = [this, &rng](NodeId id) { return draw_choice(id, rng); };
    return sample_with(choose);
}

SamplePath PrototypeTree::sample_forced(std::span<const std::size_t> choices) {
    std::size_t next = 0;
    auto choose = [&](NodeId id) -> std::size_t {
        if (next >= choices.size()) throw StructuralError("forced choice list ended before the instance was complete");
        const std::size_t label = choices[next++];
        const auto& n = nodes_[id];
        for (std::size_t i = 0; i < n.record_count; ++i) {
            if (label_of(n, i) == label) return i;
        }
        throw StructuralError("forced choice " + std::to_string(label) + " is not admissible at depth " +
                              std::to_string(n.depth));
    };
    auto path = sample_with(choose);
    if (next != choices.size()) throw StructuralError("forced choice list has unused entries");
    return path;
}

// ---------------------------------------------------------------------------
// Error bookkeeping

bool PrototypeTree::propagate(const SamplePath& path, double raw_error) {
    if (!std::isfinite(raw_error) || raw_error < 0.0) {
        throw std::invalid_argument("propagated error must be finite and non-negative");
    }
    const std::uint64_t index = evaluations_++;
    const double base = 1.0 + params_.delta_d;
    for (const auto& e : path.entries) {
        auto& node = nodes_.at(e.node);
        auto& rec = records_[node.first_record + e.choice];
        const double discounted =
            params_.delta_d == 0.0 ? raw_error : raw_error * std::pow(base, e.branch_leaf_depth - e.node_depth);
        if (!rec.evaluated() || discounted < rec.best_error) {
            rec.best_error = discounted;
            rec.witness = index;
        }
        if (rec.eval_count++ == 0) ++node.evaluated_count;
    }
    if (params_.log_instances) log_.push_back({path.entries, raw_error});
    const bool improved = raw_error < best_raw_error_;
    if (improved) best_raw_error_ = raw_error;
    return improved;
}

void PrototypeTree::penalize_stagnation(const SamplePath& path) {
    const double factor = 1.0 + params_.delta_p;
    for (const auto& e : path.entries) {
        auto& rec = records_[nodes_.at(e.node).first_record + e.choice];
        if (rec.evaluated()) rec.best_error *= factor;
    }
}

Expression PrototypeTree::best_path_expression() const {
    if (evaluations_ == 0) throw NoSolution("no instance has been evaluated yet");

    auto best_choice = [this](NodeId id) -> std::size_t {
        const auto& n = nodes_[id];
        const ChoiceRecord* recs = records_.data() + n.first_record;
        std::size_t best = n.record_count;
        for (std::size_t i = 0; i < n.record_count; ++i) {
            if (!recs[i].evaluated()) continue;
            if (best == n.record_count || recs[i].best_error < recs[best].best_error ||
                (recs[i].best_error == recs[best].best_error && recs[i].witness < recs[best].witness)) {
                best = i;
            }
        }
        if (best == n.record_count) throw StructuralError("best path reaches a node without evaluated choices");
        return best;
    };

    std::vector<Expression::Node> out;
    std::vector<NodeId> pending{root()};
    while (!pending.empty()) {
        const NodeId id = pending.back();
        pending.pop_back();
        const std::size_t choice = best_choice(id);
        const auto& n = nodes_[id];
        const Symbol& sym = functions_[label_of(n, choice)];
        const std::uint32_t first = records_[n.first_record + choice].first_child;
        switch (sym.kind()) {
        case SymbolKind::Terminal:
            if (sym.op == Op::Variable) {
                out.push_back({Op::Variable, static_cast<std::uint32_t>(sym.variable), 0.0});
            } else {
                out.push_back({Op::Literal, 0, sym.value});
            }
            break;
        case SymbolKind::ConstantMarker: {
            const std::size_t m_choice = best_choice(first);
            const int m = static_cast<int>(label_of(nodes_[first], m_choice));
            std::vector<std::uint8_t> digits;
            std::uint32_t current = records_[nodes_[first].first_record + m_choice].first_child;
            while (current != kNoChild) {
                const std::size_t d = best_choice(current);
                digits.push_back(static_cast<std::uint8_t>(d));
                current = records_[nodes_[current].first_record + d].first_child;
            }
            out.push_back({Op::Literal, 0, resolve_constant(m, digits)});
            break;
        }
        case SymbolKind::NonTerminal:
            out.push_back({sym.op, 0, 0.0});
            // Depth-first prefix order: push children right to left.
            for (int i = sym.arity() - 1; i >= 0; --i) pending.push_back(first + static_cast<NodeId>(i));
            break;
        }
    }
    return Expression(std::move(out));
}

void PrototypeTree::dump(std::ostream& out) const {
    struct Frame {
        NodeId id;
        std::string path;
    };
    std::vector<Frame> stack{{root(), "/"}};
    const auto old_precision = out.precision(17);
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        const auto& n = nodes_[f.id];
        auto label = [&](std::size_t i) -> std::string {
            switch (n.kind) {
            case NodeKind::Program:
                return functions_[label_of(n, i)].name;
            case NodeKind::FloatPosition:
                return "m=" + std::to_string(label_of(n, i));
            case NodeKind::Digit:
                break;
            }
            return "d=" + std::to_string(i);
        };
        for (std::size_t i = n.record_count; i-- > 0;) {
            const auto& rec = records_[n.first_record + i];
            for (auto child_index = children(f.id, i).size(); child_index-- > 0;) {
                stack.push_back({rec.first_child + static_cast<NodeId>(child_index),
                                 f.path + (f.path == "/" ? "" : "/") + label(i) + "." + std::to_string(child_index)});
            }
        }
        for (std::size_t i = 0; i < n.record_count; ++i) {
            const auto& rec = records_[n.first_record + i];
            if (!rec.evaluated()) continue;
            out << f.path << '\t' << label(i) << '\t' << rec.best_error << '\t' << rec.eval_count << '\n';
        }
    }
    out.precision(old_precision);
}

// ---------------------------------------------------------------------------
// Uniform baseline sampler

namespace {

void uniform_visit(const FunctionSet& functions, int max_depth, const ConstantBranchSpec& constants, Rng& rng,
                   int depth, std::vector<Expression::Node>& out) {
    const auto ids = depth >= max_depth ? functions.leaf_ids() : functions.all_ids();
    const Symbol& sym = functions[ids[uniform_index(rng, ids.size())]];
    switch (sym.kind()) {
    case SymbolKind::ConstantMarker: {
        const int m = constants.m_min + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(constants.m_count())));
        std::vector<std::uint8_t> digits(static_cast<std::size_t>(constants.digit_depth));
        for (auto& d : digits) d = static_cast<std::uint8_t>(uniform_index(rng, 10));
        out.push_back({Op::Literal, 0, resolve_constant(m, digits)});
        break;
    }
    case SymbolKind::Terminal:
        if (sym.op == Op::Variable) {
            out.push_back({Op::Variable, static_cast<std::uint32_t>(sym.variable), 0.0});
        } else {
            out.push_back({Op::Literal, 0, sym.value});
        }
        break;
    case SymbolKind::NonTerminal:
        out.push_back({sym.op, 0, 0.0});
        for (int i = 0; i < sym.arity(); ++i) uniform_visit(functions, max_depth, constants, rng, depth + 1, out);
        break;
    }
}

}  // namespace

Expression sample_uniform_expression(const FunctionSet& functions, int max_depth, const ConstantBranchSpec& constants,
                                     Rng& rng) {
    std::vector<Expression::Node> out;
    uniform_visit(functions, max_depth, constants, rng, 1, out);
    return Expression(std::move(out));
}

}  // namespace ptree
