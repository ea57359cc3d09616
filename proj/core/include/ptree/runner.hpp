#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ptree/constant_branch.hpp"
#include "ptree/problems.hpp"
#include "ptree/prototype_tree.hpp"

namespace ptree {

struct RunConfig {
    std::string problem = "nguyen4";
    SearchParams search;
    ConstantBranchSpec constants;
    std::uint64_t iterations = 1000000;
    std::optional<double> target_error;
    std::uint64_t trace_stride = 100;
    std::uint64_t seed = 1;

    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Applies one "key = value" setting; throws std::invalid_argument on an unknown
/// key or a malformed value.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);
/// Reads flat "key = value" lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& in);

struct TracePoint {
    std::uint64_t iteration = 0;
    double best_mse = 0.0;

    friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

struct RunResult {
    std::uint64_t seed = 0;
    std::string best_expression;
    double best_train_mse = 0.0;
    std::optional<double> test_mse;
    /// Greedy minimum-error path; equals best_expression when no discounting is active.
    std::string best_path_expression;
    double best_path_train_mse = 0.0;
    std::vector<TracePoint> trace;
    std::uint64_t iterations = 0;
    double wall_seconds = 0.0;
    std::uint64_t node_count = 0;

    /// Best-so-far mse after `iteration` evaluations, read off the trace.
    double best_at(std::uint64_t iteration) const;

    /// Compares everything except wall time.
    friend bool operator==(const RunResult& a, const RunResult& b);
};

/// Seeds for the data and search streams of one run.
std::uint64_t train_data_seed(std::uint64_t run_seed);
std::uint64_t test_data_seed(std::uint64_t run_seed);
std::uint64_t search_seed(std::uint64_t run_seed);
/// Seed of run `index` in a batch; independent of scheduling.
std::uint64_t batch_run_seed(std::uint64_t base_seed, std::size_t index);

/// One prototype-tree search over a problem, advanced an evaluation at a time.
class Session {
public:
    Session(RunConfig config, Problem problem);
    /// Uses caller-provided data instead of generating it from the problem's specs.
    Session(RunConfig config, Problem problem, Dataset train, std::optional<Dataset> test);

    /// One sample-evaluate-propagate step. Returns the instance's raw mse.
    double step();
    bool finished() const noexcept;
    RunResult run_to_completion();

    const PrototypeTree& tree() const noexcept { return tree_; }
    const Dataset& train() const noexcept { return train_; }
    const std::optional<Dataset>& test() const noexcept { return test_; }
    const Problem& problem() const noexcept { return problem_; }
    std::uint64_t iterations() const noexcept { return iterations_; }
    double best_mse() const noexcept { return best_mse_; }
    const Expression& best_expression() const noexcept { return best_; }

    RunResult result() const;

private:
    Session(RunConfig config, Problem problem, std::pair<Dataset, std::optional<Dataset>> data);

    RunConfig config_;
    Problem problem_;
    Dataset train_;
    std::optional<Dataset> test_;
    PrototypeTree tree_;
    BatchEvaluator evaluator_;
    std::uint64_t iterations_ = 0;
    double best_mse_;
    Expression best_;
    std::vector<TracePoint> trace_;
    double wall_seconds_ = 0.0;
};

RunResult run(const RunConfig& config);
RunResult run(const RunConfig& config, const Problem& problem);

/// Uniform random search with the same budget, depth limit and constants.
RunResult random_search_baseline(const RunConfig& config);
RunResult random_search_baseline(const RunConfig& config, const Problem& problem);

enum class Method { PrototypeTree, RandomSearch };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

struct Statistics {
    double best = 0.0;
    double median = 0.0;

    friend bool operator==(const Statistics&, const Statistics&) = default;
};

/// Decade bin [10^decade, 10^(decade+1)); `zero` collects exact zeros.
struct HistogramBin {
    bool zero = false;
    int decade = 0;
    std::size_t count = 0;

    friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

struct AggregateReport {
    std::string problem;
    Method method = Method::PrototypeTree;
    RunConfig config;
    std::vector<std::uint64_t> seeds;
    std::vector<RunResult> runs;
    Statistics train;
    std::optional<Statistics> test;
    std::vector<HistogramBin> train_histogram;
    std::vector<HistogramBin> test_histogram;

    friend bool operator==(const AggregateReport&, const AggregateReport&) = default;
};

Statistics summarize(std::vector<double> values);
std::vector<HistogramBin> histogram(const std::vector<double>& values);

/// `runs` independent runs with seeds batch_run_seed(config.seed, i), executed
/// on up to `parallelism` threads. Any failure aborts with the failing seed named.
AggregateReport run_many(const RunConfig& config, std::size_t runs, std::size_t parallelism = 1,
                         Method method = Method::PrototypeTree);

}  // namespace ptree
