#include "ptree/runner.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace ptree {

namespace {

enum Stream : std::uint64_t { kTrainStream = 101, kTestStream = 102, kSearchStream = 103 };

template <class T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw std::invalid_argument("setting '" + std::string(key) + "': bad value '" + std::string(value) + "'");
    }
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
    if (value == "0" || value == "false" || value == "off" || value == "no") return false;
    throw std::invalid_argument("setting '" + std::string(key) + "': bad boolean '" + std::string(value) + "'");
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::pair<Dataset, std::optional<Dataset>> make_datasets(const RunConfig& config, const Problem& problem) {
    Rng train_rng(train_data_seed(config.seed));
    Dataset train = generate(problem.train, problem, train_rng);
    std::optional<Dataset> test;
    if (problem.test) {
        Rng test_rng(test_data_seed(config.seed));
        test = generate(*problem.test, problem, test_rng);
    }
    return {std::move(train), std::move(test)};
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

void RunConfig::validate() const {
    search.validate();
    constants.validate();
    if (iterations < 1) throw std::invalid_argument("iteration budget must be at least 1");
    if (trace_stride < 1) throw std::invalid_argument("trace stride must be at least 1");
    if (target_error && !(*target_error >= 0.0)) throw std::invalid_argument("target error must be non-negative");
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    if (key == "problem") {
        config.problem = std::string(value);
    } else if (key == "iterations") {
        config.iterations = parse_number<std::uint64_t>(key, value);
    } else if (key == "k") {
        config.search.k = parse_number<double>(key, value);
    } else if (key == "delta_d") {
        config.search.delta_d = parse_number<double>(key, value);
    } else if (key == "delta_p") {
        config.search.delta_p = parse_number<double>(key, value);
    } else if (key == "max_depth") {
        config.search.max_depth = parse_number<int>(key, value);
    } else if (key == "terminal_bias") {
        config.search.terminal_bias_first_visit = parse_bool(key, value);
    } else if (key == "m_min") {
        config.constants.m_min = parse_number<int>(key, value);
    } else if (key == "m_max") {
        config.constants.m_max = parse_number<int>(key, value);
    } else if (key == "digit_depth") {
        config.constants.digit_depth = parse_number<int>(key, value);
    } else if (key == "target_error") {
        if (value == "none" || value.empty()) {
            config.target_error.reset();
        } else {
            config.target_error = parse_number<double>(key, value);
        }
    } else if (key == "stride" || key == "trace_stride") {
        config.trace_stride = parse_number<std::uint64_t>(key, value);
    } else if (key == "seed") {
        config.seed = parse_number<std::uint64_t>(key, value);
    } else {
        throw std::invalid_argument("unknown setting '" + std::string(key) + "'");
    }
}

std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        }
        out.emplace_back(std::string(trim(view.substr(0, eq))), std::string(trim(view.substr(eq + 1))));
    }
    return out;
}

double RunResult::best_at(std::uint64_t iteration) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : trace) {
        if (p.iteration > iteration) break;
        best = p.best_mse;
    }
    return best;
}

bool operator==(const RunResult& a, const RunResult& b) {
    return a.seed == b.seed && a.best_expression == b.best_expression && a.best_train_mse == b.best_train_mse &&
           a.test_mse == b.test_mse && a.best_path_expression == b.best_path_expression &&
           a.best_path_train_mse == b.best_path_train_mse && a.trace == b.trace && a.iterations == b.iterations &&
           a.node_count == b.node_count;
}

std::uint64_t train_data_seed(std::uint64_t run_seed) { return derive_seed(run_seed, kTrainStream); }
std::uint64_t test_data_seed(std::uint64_t run_seed) { return derive_seed(run_seed, kTestStream); }
std::uint64_t search_seed(std::uint64_t run_seed) { return derive_seed(run_seed, kSearchStream); }
std::uint64_t batch_run_seed(std::uint64_t base_seed, std::size_t index) { return derive_seed(base_seed, index); }

// ---------------------------------------------------------------------------
// Session

namespace {

SearchParams seeded(SearchParams params, std::uint64_t run_seed) {
    params.rng_seed = search_seed(run_seed);
    return params;
}

}  // namespace

Session::Session(RunConfig config, Problem problem)
    : Session(config, problem, make_datasets(config, problem)) {}

Session::Session(RunConfig config, Problem problem, std::pair<Dataset, std::optional<Dataset>> data)
    : Session(std::move(config), std::move(problem), std::move(data.first), std::move(data.second)) {}

Session::Session(RunConfig config, Problem problem, Dataset train, std::optional<Dataset> test)
    : config_(std::move(config)),
      problem_(std::move(problem)),
      train_(std::move(train)),
      test_(std::move(test)),
      tree_((config_.validate(), problem_.functions), seeded(config_.search, config_.seed), config_.constants),
      best_mse_(std::numeric_limits<double>::infinity()) {}

double Session::step() {
    const auto path = tree_.sample_instance();
    const double error = evaluator_.mse(path.expression, train_);
    if (tree_.propagate(path, error)) {
        best_mse_ = error;
        best_ = path.expression;
    } else {
        tree_.penalize_stagnation(path);
    }
    ++iterations_;
    if (iterations_ % config_.trace_stride == 0) trace_.push_back({iterations_, best_mse_});
    return error;
}

bool Session::finished() const noexcept {
    if (config_.target_error && best_mse_ <= *config_.target_error) return true;
    return iterations_ >= config_.iterations;
}

RunResult Session::run_to_completion() {
    Stopwatch watch;
    while (!finished()) step();
    wall_seconds_ += watch.seconds();
    return result();
}

RunResult Session::result() const {
    RunResult r;
    r.seed = config_.seed;
    r.iterations = iterations_;
    r.wall_seconds = wall_seconds_;
    r.node_count = tree_.node_count();
    r.trace = trace_;
    if (iterations_ == 0) return r;
    if (r.trace.empty() || r.trace.back().iteration != iterations_) r.trace.push_back({iterations_, best_mse_});

    const auto names = std::span<const std::string>(problem_.variables);
    r.best_expression = to_text(best_, names);
    r.best_train_mse = best_mse_;
    if (test_) r.test_mse = mse(best_, *test_);
    const Expression greedy = tree_.best_path_expression();
    r.best_path_expression = to_text(greedy, names);
    r.best_path_train_mse = mse(greedy, train_);
    return r;
}

RunResult run(const RunConfig& config) {
    return run(config, make_problem(config.problem));
}

RunResult run(const RunConfig& config, const Problem& problem) {
    Session session(config, problem);
    return session.run_to_completion();
}

RunResult random_search_baseline(const RunConfig& config) {
    return random_search_baseline(config, make_problem(config.problem));
}

RunResult random_search_baseline(const RunConfig& config, const Problem& problem) {
    config.validate();
    Stopwatch watch;
    auto [train, test] = make_datasets(config, problem);
    Rng rng(search_seed(config.seed));
    BatchEvaluator evaluator;

    RunResult r;
    r.seed = config.seed;
    double best_mse = std::numeric_limits<double>::infinity();
    Expression best;
    std::uint64_t it = 0;
    while (it < config.iterations && !(config.target_error && best_mse <= *config.target_error)) {
        Expression e = sample_uniform_expression(problem.functions, config.search.max_depth, config.constants, rng);
        const double error = evaluator.mse(e, train);
        if (error < best_mse) {
            best_mse = error;
            best = std::move(e);
        }
        ++it;
        if (it % config.trace_stride == 0) r.trace.push_back({it, best_mse});
    }
    if (r.trace.empty() || r.trace.back().iteration != it) r.trace.push_back({it, best_mse});

    const auto names = std::span<const std::string>(problem.variables);
    r.iterations = it;
    r.best_expression = to_text(best, names);
    r.best_train_mse = best_mse;
    r.best_path_expression = r.best_expression;
    r.best_path_train_mse = best_mse;
    if (test) r.test_mse = mse(best, *test);
    r.wall_seconds = watch.seconds();
    return r;
}

std::string_view method_name(Method m) {
    return m == Method::PrototypeTree ? "ptp" : "random";
}

Method parse_method(std::string_view name) {
    if (name == "ptp") return Method::PrototypeTree;
    if (name == "random") return Method::RandomSearch;
    throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Aggregation

Statistics summarize(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("no values to summarize");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    return {values.front(), median};
}

std::vector<HistogramBin> histogram(const std::vector<double>& values) {
    std::vector<HistogramBin> bins;
    std::size_t zeros = 0;
    int lo = std::numeric_limits<int>::max();
    int hi = std::numeric_limits<int>::min();
    std::vector<int> decades;
    for (double v : values) {
        if (v <= 0.0) {
            ++zeros;
            continue;
        }
        const int d = static_cast<int>(std::floor(std::log10(v)));
        decades.push_back(d);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    if (zeros > 0) bins.push_back({true, 0, zeros});
    for (int d = lo; !decades.empty() && d <= hi; ++d) {
        bins.push_back({false, d, static_cast<std::size_t>(std::count(decades.begin(), decades.end(), d))});
    }
    return bins;
}

AggregateReport run_many(const RunConfig& config, std::size_t runs, std::size_t parallelism, Method method) {
    if (runs < 1) throw std::invalid_argument("run count must be at least 1");
    config.validate();
    const Problem problem = make_problem(config.problem);

    AggregateReport report;
    report.problem = config.problem;
    report.method = method;
    report.config = config;
    for (std::size_t i = 0; i < runs; ++i) report.seeds.push_back(batch_run_seed(config.seed, i));

    std::vector<RunResult> results(runs);
    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::optional<std::pair<std::uint64_t, std::string>> failure;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= runs) return;
            {
                std::lock_guard lock(failure_mutex);
                if (failure) return;
            }
            RunConfig c = config;
            c.seed = report.seeds[i];
            try {
                results[i] = method == Method::PrototypeTree ? run(c, problem) : random_search_baseline(c, problem);
            } catch (const std::exception& e) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure.emplace(c.seed, e.what());
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(parallelism, 1, runs);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) {
        throw std::runtime_error("run with seed " + std::to_string(failure->first) + " failed: " + failure->second);
    }

    report.runs = std::move(results);
    std::vector<double> train;
    std::vector<double> test;
    for (const auto& r : report.runs) {
        train.push_back(r.best_train_mse);
        if (r.test_mse) test.push_back(*r.test_mse);
    }
    report.train = summarize(train);
    report.train_histogram = histogram(train);
    if (!test.empty() && test.size() == report.runs.size()) {
        report.test = summarize(test);
        report.test_histogram = histogram(test);
    }
    return report;
}

}  // namespace ptree
