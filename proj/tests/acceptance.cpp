// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ptree/constant_branch.hpp"
#include "ptree/problems.hpp"
#include "ptree/prototype_tree.hpp"
#include "ptree/report.hpp"
#include "ptree/runner.hpp"

using namespace ptree;

namespace {

constexpr std::uint64_t kBaseSeed = 1;
constexpr std::size_t kDeskRuns = 20;
constexpr std::uint64_t kDeskBudget = 100000;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

RunConfig desk_config(const std::string& problem) {
    RunConfig c;  // published settings
    c.problem = problem;
    c.iterations = kDeskBudget;
    c.seed = kBaseSeed;
    return c;
}

// Shared between criteria 4-6.
std::map<std::string, AggregateReport>& desk_reports() {
    static std::map<std::string, AggregateReport> cache;
    return cache;
}

const AggregateReport& desk(const std::string& problem) {
    auto& cache = desk_reports();
    auto it = cache.find(problem);
    if (it == cache.end()) it = cache.emplace(problem, run_many(desk_config(problem), kDeskRuns)).first;
    return it->second;
}

Outcome power_law() {
    const auto p = rank_probabilities(9, 4.0);
    const bool best_ok = std::fabs(p.front() - 0.924) <= 0.001;
    const bool worst_ok = std::fabs(p.back() - 1.41e-4) <= 0.02 * 1.41e-4;
    return {best_ok && worst_ok, "p(rank 1)=" + fmt("%.5f", p.front()) + " p(rank 9)=" + fmt("%.4E", p.back())};
}

Outcome constant_example() {
    const std::vector<std::uint8_t> digits{3, 1, 1};
    const double c = resolve_constant(4, digits);
    return {c == 0.0311, "resolve_constant(4,(3,1,1))=" + fmt("%.17g", c)};
}

Outcome min_propagation_oracle() {
    std::size_t records_checked = 0;
    std::size_t mismatches = 0;
    std::size_t best_path_failures = 0;
    const auto& names = problem_names();
    for (std::size_t run = 0; run < 50; ++run) {
        RunConfig c;
        c.problem = names[run % names.size()];
        c.iterations = 10000;
        c.seed = batch_run_seed(kBaseSeed + 1000, run);
        c.search.delta_d = 0.0;
        c.search.delta_p = 0.0;
        c.search.log_instances = true;
        Session session(c, make_problem(c.problem));
        session.run_to_completion();
        const auto& tree = session.tree();

        // Replay the instance log independently of the tree's bookkeeping.
        std::map<std::pair<NodeId, std::uint32_t>, double> minimum;
        double global = INFINITY;
        for (const auto& instance : tree.instance_log()) {
            global = std::min(global, instance.raw_error);
            for (const auto& e : instance.entries) {
                auto [it, inserted] = minimum.try_emplace({e.node, e.choice}, instance.raw_error);
                if (!inserted) it->second = std::min(it->second, instance.raw_error);
            }
        }
        for (NodeId n = 0; n < tree.node_count(); ++n) {
            const auto recs = tree.records(n);
            for (std::uint32_t i = 0; i < recs.size(); ++i) {
                const auto it = minimum.find({n, i});
                if (it == minimum.end()) {
                    if (recs[i].evaluated()) ++mismatches;
                    continue;
                }
                ++records_checked;
                if (recs[i].best_error != it->second) ++mismatches;
            }
        }
        if (mse(tree.best_path_expression(), session.train()) != global) ++best_path_failures;
    }
    return {mismatches == 0 && best_path_failures == 0,
            std::to_string(records_checked) + " records replayed, " + std::to_string(mismatches) + " mismatches, " +
                std::to_string(best_path_failures) + " best-path failures over 50 runs"};
}

Outcome desk_table() {
    const auto& n7 = desk("nguyen7");
    const auto& n4 = desk("nguyen4");
    const auto& k6 = desk("keijzer6");
    const bool ok = n7.train.median <= 1e-3 && n7.train.best <= 1e-6 && n4.train.median <= 1e-2 &&
                    k6.train.median <= 1e-3;
    return {ok, "nguyen7 median=" + fmt("%.2E", n7.train.median) + " best=" + fmt("%.2E", n7.train.best) +
                    "; nguyen4 median=" + fmt("%.2E", n4.train.median) + "; keijzer6 median=" +
                    fmt("%.2E", k6.train.median)};
}

Outcome continued_improvement() {
    const auto& n4 = desk("nguyen4");
    std::vector<double> early;
    std::vector<double> late;
    for (const auto& r : n4.runs) {
        early.push_back(r.best_at(10000));
        late.push_back(r.best_at(100000));
    }
    const double m_early = summarize(early).median;
    const double m_late = summarize(late).median;
    return {m_late < m_early, "nguyen4 median at 1E4=" + fmt("%.2E", m_early) + " at 1E5=" + fmt("%.2E", m_late)};
}

Outcome baseline_dominance() {
    const auto& ptp = desk("nguyen4");
    const auto baseline = run_many(desk_config("nguyen4"), kDeskRuns, 1, Method::RandomSearch);
    const bool paired = baseline.seeds == ptp.seeds;
    return {paired && ptp.train.median < baseline.train.median,
            "nguyen4 over " + std::to_string(kDeskRuns) + " paired seeds: ptp median=" +
                fmt("%.2E", ptp.train.median) + " random median=" + fmt("%.2E", baseline.train.median)};
}

Outcome hard_problem() {
    const auto report = run_many(desk_config("korns12"), 11);
    return {report.train.median <= 1.5, "korns12 over 11 runs: median train=" + fmt("%.4f", report.train.median) +
                                             " best=" + fmt("%.4f", report.train.best) +
                                             (report.test ? " median test=" + fmt("%.4f", report.test->median) : "")};
}

Outcome invariants() {
    std::size_t failures = 0;
    std::size_t checks = 0;
    auto check = [&](bool ok) {
        ++checks;
        if (!ok) ++failures;
    };

    // Distribution normalization and depth safety on searches over every problem's alphabet.
    for (const auto& name : problem_names()) {
        const auto problem = make_problem(name);
        RunConfig c;
        c.problem = name;
        c.search.rng_seed = 7;
        c.search.max_depth = 8;
        PrototypeTree tree(problem.functions, c.search, c.constants);
        std::vector<double> in(problem.variables.size(), 0.5);
        for (int i = 0; i < 2000; ++i) {
            const auto path = tree.sample_instance();
            check(path.expression.depth() <= 8);
            const double e = std::fabs(std::tanh(evaluate(path.expression, in)) - 0.3);
            if (!tree.propagate(path, e)) tree.penalize_stagnation(path);
        }
        for (NodeId n = 0; n < tree.node_count(); ++n) {
            double sum = 0.0;
            for (double p : tree.choice_probabilities(n)) {
                check(p >= 0.0 && p <= 1.0);
                sum += p;
            }
            check(std::fabs(sum - 1.0) <= 1e-12);
        }
    }

    // Trace monotonicity, budget exactness, seed reproducibility and serialization round trips.
    RunConfig c;
    c.problem = "keijzer6";
    c.iterations = 5000;
    c.trace_stride = 250;
    c.seed = kBaseSeed;
    const auto report = run_many(c, 4);
    for (const auto& r : report.runs) {
        check(r.iterations == c.iterations);
        check(r.trace.back().best_mse == r.best_train_mse);
        for (std::size_t i = 1; i < r.trace.size(); ++i) check(r.trace[i].best_mse <= r.trace[i - 1].best_mse);
        const auto names = make_problem(c.problem).variables;
        check(to_text(from_text(r.best_expression, names), names) == r.best_expression);
    }
    check(run_many(c, 4) == report);
    check(run_many(c, 4, 3) == report);
    const std::vector<AggregateReport> reports{report};
    const auto json = summary_json(reports);
    check(reports_from_json(json) == reports);
    const std::vector<AggregateReport> again{run_many(c, 4)};
    check(summary_json(again) == json);

    Rng rng(11);
    const auto fs = make_problem("vladislavleva4").functions;
    for (int i = 0; i < 500; ++i) {
        const auto e = sample_uniform_expression(fs, 10, {}, rng);
        check(from_text(to_text(e)) == e);
    }
    return {failures == 0, std::to_string(checks) + " checks, " + std::to_string(failures) + " failures"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_seconds;
        std::function<Outcome()> body;
    };
    const std::vector<Criterion> criteria{
        {"1 power-law reproduction", 1, power_law},
        {"2 constant example", 1, constant_example},
        {"3 min-propagation oracle", 120, min_propagation_oracle},
        {"4 desk-scale results table", 3 * 900, desk_table},
        {"5 continued improvement", 900, continued_improvement},
        {"6 baseline dominance", 1200, baseline_dominance},
        {"7 hard-problem sanity", 1800, hard_problem},
        {"8 determinism and invariants", 60, invariants},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = seconds <= c.limit_seconds;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::printf("[%s] %s: %s (%.1fs%s)\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), seconds,
                    in_time ? "" : ", over time limit");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
