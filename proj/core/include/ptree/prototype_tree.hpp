#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "ptree/constant_branch.hpp"
#include "ptree/expression.hpp"
#include "ptree/random.hpp"

namespace ptree {

struct SearchParams {
    double k = 4.0;
    double delta_d = 0.001;
    double delta_p = 0.00075;
    int max_depth = 15;
    bool terminal_bias_first_visit = true;
    std::uint64_t rng_seed = 0;
    /// Keep every propagated path with its raw error (debugging and replay checks).
    bool log_instances = false;

    void validate() const;

    friend bool operator==(const SearchParams&, const SearchParams&) = default;
};

using NodeId = std::uint32_t;
inline constexpr std::uint32_t kNoChild = std::numeric_limits<std::uint32_t>::max();

/// Per-choice bookkeeping. `witness` is the evaluation index that set best_error.
struct ChoiceRecord {
    double best_error = 0.0;
    std::uint32_t eval_count = 0;
    std::uint32_t first_child = kNoChild;
    std::uint64_t witness = 0;

    bool evaluated() const noexcept { return eval_count > 0; }
};

enum class NodeKind : std::uint8_t { Program, FloatPosition, Digit };

/// One argument slot. Constant-branch nodes carry the depth of the slot that
/// chose the constant, since the whole branch counts as one terminal.
struct PrototypeNode {
    std::uint32_t first_record = 0;
    std::uint16_t record_count = 0;
    std::uint16_t evaluated_count = 0;
    std::uint16_t depth = 1;
    NodeKind kind = NodeKind::Program;
    std::uint8_t digit_index = 0;
    bool first_visit_done = false;
};

struct PathEntry {
    NodeId node = 0;
    std::uint32_t choice = 0;  // index into the node's admissible choices
    std::uint16_t node_depth = 1;
    std::uint16_t branch_leaf_depth = 1;
};

struct SamplePath {
    std::vector<PathEntry> entries;  // prefix order
    Expression expression;
};

struct InstanceLogEntry {
    std::vector<PathEntry> entries;
    double raw_error = 0.0;
};

class PrototypeTree {
public:
    PrototypeTree(FunctionSet functions, SearchParams params, ConstantBranchSpec constants = {});

    static constexpr NodeId root() noexcept { return 0; }

    /// Draws an instance with the tree's own generator (seeded from params.rng_seed).
    SamplePath sample_instance();
    SamplePath sample_instance(Rng& rng);

    /// Samples with prescribed choices in prefix order: symbol ids at program
    /// nodes, the m value at a float-position node, the digit at digit nodes.
    SamplePath sample_forced(std::span<const std::size_t> choices);

    /// Min-error propagation with depth discount. Returns whether raw_error is
    /// strictly below the best raw error seen before this call.
    bool propagate(const SamplePath& path, double raw_error);
    void penalize_stagnation(const SamplePath& path);

    /// Follows the minimum stored error from the root. Ties go to the record
    /// set earliest, then to the lower choice index.
    Expression best_path_expression() const;

    /// Distribution the next draw at `node` uses, over its admissible choices.
    std::vector<double> choice_probabilities(NodeId node) const;

    const PrototypeNode& node(NodeId id) const { return nodes_.at(id); }
    std::span<const ChoiceRecord> records(NodeId id) const;
    /// Symbol id, m value or digit for each admissible choice of `id`.
    std::vector<std::size_t> choice_labels(NodeId id) const;
    /// Child nodes a record links to; empty until materialized.
    std::vector<NodeId> children(NodeId id, std::size_t choice) const;

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t record_count() const noexcept { return records_.size(); }
    std::uint64_t evaluations() const noexcept { return evaluations_; }
    double best_raw_error() const noexcept { return best_raw_error_; }

    const FunctionSet& functions() const noexcept { return functions_; }
    const SearchParams& params() const noexcept { return params_; }
    const ConstantBranchSpec& constants() const noexcept { return constants_; }
    const std::vector<InstanceLogEntry>& instance_log() const noexcept { return log_; }

    /// One line per evaluated record: node path, choice, best_error, eval_count.
    void dump(std::ostream& out) const;

private:
    NodeId make_node(NodeKind kind, std::uint16_t depth, std::uint8_t digit_index);
    std::size_t admissible_count(NodeKind kind, std::uint16_t depth) const;
    std::size_t label_of(const PrototypeNode& n, std::size_t choice) const;
    std::uint32_t ensure_children(NodeId id, std::size_t choice);

    template <class Chooser>
    std::uint16_t visit_program(NodeId id, Chooser& choose, SamplePath& path, std::vector<Expression::Node>& out);
    template <class Chooser>
    double visit_constant(NodeId float_node, std::uint16_t depth, Chooser& choose, SamplePath& path);
    template <class Chooser>
    SamplePath sample_with(Chooser& choose);

    std::size_t draw_choice(NodeId id, Rng& rng);
    const std::vector<double>& rank_cdf(std::size_t n) const;
    void ranked_choices(const PrototypeNode& n, std::vector<std::uint32_t>& order) const;

    FunctionSet functions_;
    SearchParams params_;
    ConstantBranchSpec constants_;
    Rng rng_;

    std::vector<PrototypeNode> nodes_;
    std::vector<ChoiceRecord> records_;
    std::vector<std::size_t> leaf_positions_;  // positions of terminals in all_ids()
    mutable std::vector<std::vector<double>> rank_cdf_cache_;
    std::vector<std::uint32_t> order_scratch_;

    std::uint64_t evaluations_ = 0;
    double best_raw_error_ = std::numeric_limits<double>::infinity();
    std::vector<InstanceLogEntry> log_;
};

/// Power-law rank weights r^-k / sum_i i^-k for ranks 1..n.
std::vector<double> rank_probabilities(std::size_t n, double k);

/// Uniform draw with the same depth limit and constant-branch shape; no state.
Expression sample_uniform_expression(const FunctionSet& functions, int max_depth, const ConstantBranchSpec& constants,
                                     Rng& rng);

}  // namespace ptree
