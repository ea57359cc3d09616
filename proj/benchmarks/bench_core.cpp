#include <benchmark/benchmark.h>

#include <vector>

#include "ptree/problems.hpp"
#include "ptree/prototype_tree.hpp"
#include "ptree/runner.hpp"

using namespace ptree;

namespace {

Dataset training_data(const Problem& p) {
    Rng rng(train_data_seed(1));
    return generate(p.train, p, rng);
}

void BM_BatchMse(benchmark::State& state) {
    static const char* names[] = {"nguyen4", "keijzer6", "vladislavleva4", "korns12"};
    const auto problem = make_problem(names[state.range(0)]);
    const auto data = training_data(problem);
    Rng rng(5);
    std::vector<Expression> exprs;
    for (int i = 0; i < 64; ++i) exprs.push_back(sample_uniform_expression(problem.functions, 6, {}, rng));
    BatchEvaluator evaluator;
    std::size_t i = 0;
    std::size_t nodes = 0;
    for (auto _ : state) {
        const auto& e = exprs[i++ % exprs.size()];
        benchmark::DoNotOptimize(evaluator.mse(e, data));
        nodes += e.size() * data.rows();
    }
    state.SetLabel(problem.name);
    state.counters["node_evals/s"] = benchmark::Counter(static_cast<double>(nodes), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_BatchMse)->DenseRange(0, 3);

void BM_SampleAndPropagate(benchmark::State& state) {
    const auto problem = make_problem("nguyen4");
    SearchParams params;
    params.rng_seed = 9;
    PrototypeTree tree(problem.functions, params);
    double fake = 1.0;
    for (auto _ : state) {
        const auto path = tree.sample_instance();
        fake = fake * 0.999 + 0.001 * static_cast<double>(path.entries.size());
        if (!tree.propagate(path, fake)) tree.penalize_stagnation(path);
    }
    state.counters["nodes"] = static_cast<double>(tree.node_count());
}
BENCHMARK(BM_SampleAndPropagate);

void BM_SessionStep(benchmark::State& state) {
    static const char* names[] = {"nguyen7", "keijzer6", "korns12"};
    RunConfig config;
    config.problem = names[state.range(0)];
    config.iterations = ~0ULL;
    Session session(config, make_problem(config.problem));
    for (auto _ : state) benchmark::DoNotOptimize(session.step());
    state.SetLabel(config.problem);
}
BENCHMARK(BM_SessionStep)->DenseRange(0, 2);

}  // namespace

BENCHMARK_MAIN();
