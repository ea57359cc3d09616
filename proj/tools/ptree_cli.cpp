// ptree command-line driver: list, run, bench, baseline, data, eval.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ptree/report.hpp"
#include "ptree/runner.hpp"

namespace fs = std::filesystem;
using namespace ptree;

namespace {

constexpr const char* kOutputDirEnv = "PTREE_OUTPUT_DIR";

// Flags that map one-to-one onto RunConfig settings.
struct SettingFlags {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::string config_file;

    void add_to(CLI::App& app, bool with_problem) {
        auto flag = [&](const std::string& key, const std::string& name, const std::string& help) {
            options[key] = app.add_option(name, values[key], help);
        };
        if (with_problem) flag("problem", "-p,--problem", "Benchmark problem (see `ptree list`)");
        flag("iterations", "-n,--iterations", "Evaluation budget [1000000]");
        flag("seed", "-s,--seed", "Base seed [1]");
        flag("k", "--k", "Rank power-law exponent [4]");
        flag("delta_d", "--delta-d", "Depth discount factor [0.001]");
        flag("delta_p", "--delta-p", "Stagnation penalty factor [0.00075]");
        flag("max_depth", "--max-depth", "Maximum program depth [15]");
        flag("terminal_bias", "--terminal-bias", "Terminal-only first visit: on|off [on]");
        flag("m_min", "--m-min", "Smallest float position [1]");
        flag("m_max", "--m-max", "Largest float position [6]");
        flag("digit_depth", "--digit-depth", "Digits per constant [3]");
        flag("target_error", "--target-error", "Stop once the best mse is at or below this");
        flag("stride", "--stride", "Trace every N evaluations [100]");
        app.add_option("-c,--config", config_file, "Flat key = value settings file")->check(CLI::ExistingFile);
    }

    RunConfig resolve(RunConfig config) const {
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            for (const auto& [k, v] : read_key_values(in)) {
                // Batch-level keys are handled by the bench command.
                if (k == "runs" || k == "threads" || k == "problems") continue;
                apply_setting(config, k, v);
            }
        }
        for (const auto& [key, opt] : options) {
            if (opt->count() > 0) apply_setting(config, key, values.at(key));
        }
        config.validate();
        return config;
    }

    std::map<std::string, std::string> file_batch_keys() const {
        std::map<std::string, std::string> out;
        if (config_file.empty()) return out;
        std::ifstream in(config_file);
        for (const auto& [k, v] : read_key_values(in)) {
            if (k == "runs" || k == "threads" || k == "problems") out[k] = v;
        }
        return out;
    }
};

struct OutputFlags {
    std::string format = "table-text";
    std::string out_dir;
    bool timing = false;

    void add_to(CLI::App& app) {
        app.add_option("-f,--format", format, "stdout format: summary-json|trace-csv|histogram-csv|table-text")
            ->capture_default_str();
        app.add_option("-o,--out-dir", out_dir,
                       std::string("Write every format here (default: $") + kOutputDirEnv + ")");
        app.add_flag("--timing", timing, "Include wall-clock times in summary-json");
    }

    std::string directory() const {
        if (!out_dir.empty()) return out_dir;
        if (const char* env = std::getenv(kOutputDirEnv)) return env;
        return {};
    }

    void emit_all(std::span<const AggregateReport> reports) const {
        const EmitOptions options{timing};
        emit(reports, parse_format(format), std::cout, options);
        const auto dir = directory();
        if (dir.empty()) return;
        fs::create_directories(dir);
        emit(reports, Format::SummaryJson, fs::path(dir) / "summary.json", options);
        emit(reports, Format::TableText, fs::path(dir) / "table.txt", options);
        for (const auto& r : reports) {
            const std::string stem = r.problem + (r.method == Method::RandomSearch ? "_random" : "");
            const std::vector<AggregateReport> one{r};
            emit(one, Format::TraceCsv, fs::path(dir) / (stem + "_trace.csv"), options);
            emit(one, Format::HistogramCsv, fs::path(dir) / (stem + "_histogram.csv"), options);
        }
    }
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int list_problems() {
    for (const auto& name : problem_names()) {
        const auto p = make_problem(name);
        std::cout << name << "\tvariables=" << p.variables.size() << "\tfunctions=" << p.functions.to_string()
                  << "\ttrain=" << p.train.to_string() << "\ttest=" << (p.test ? p.test->to_string() : "none") << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prototype-tree symbolic regression"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list", "List the benchmark problems");

    auto* run_cmd = app.add_subcommand("run", "One search run");
    SettingFlags run_settings;
    OutputFlags run_output;
    std::string dump_path;
    run_settings.add_to(*run_cmd, true);
    run_output.add_to(*run_cmd);
    run_cmd->add_option("--dump-tree", dump_path, "Write the final tree state to this file");

    auto* baseline_cmd = app.add_subcommand("baseline", "Uniform random search with the same budget");
    SettingFlags baseline_settings;
    OutputFlags baseline_output;
    std::size_t baseline_runs = 1;
    std::size_t baseline_threads = 1;
    baseline_settings.add_to(*baseline_cmd, true);
    baseline_output.add_to(*baseline_cmd);
    baseline_cmd->add_option("-r,--runs", baseline_runs, "Independent runs")->check(CLI::PositiveNumber);
    baseline_cmd->add_option("-j,--threads", baseline_threads, "Worker threads")->check(CLI::PositiveNumber);

    auto* bench_cmd = app.add_subcommand("bench", "Many independent runs per problem");
    SettingFlags bench_settings;
    OutputFlags bench_output;
    std::string problems = "nguyen4,nguyen7,pagie1,keijzer6,korns12,vladislavleva4";
    std::size_t runs = 100;
    std::size_t threads = 1;
    std::string method = "ptp";
    bench_settings.add_to(*bench_cmd, false);
    bench_output.add_to(*bench_cmd);
    auto* problems_opt = bench_cmd->add_option("-P,--problems", problems, "Comma-separated problems")->capture_default_str();
    auto* runs_opt = bench_cmd->add_option("-r,--runs", runs, "Independent runs per problem")->capture_default_str();
    auto* threads_opt = bench_cmd->add_option("-j,--threads", threads, "Worker threads")->capture_default_str();
    bench_cmd->add_option("-m,--method", method, "ptp|random")->capture_default_str();

    auto* data_cmd = app.add_subcommand("data", "Write a problem's dataset as CSV");
    std::string data_problem = "nguyen4";
    std::string split = "train";
    std::uint64_t data_seed = 1;
    std::string data_output;
    data_cmd->add_option("-p,--problem", data_problem, "Problem")->capture_default_str();
    data_cmd->add_option("--split", split, "train|test")->capture_default_str();
    data_cmd->add_option("-s,--seed", data_seed, "Run seed the data is derived from")->capture_default_str();
    data_cmd->add_option("-o,--output", data_output, "Output file (default stdout)");

    auto* eval_cmd = app.add_subcommand("eval", "Mean squared error of an expression on a CSV dataset");
    std::string expr_text;
    std::string data_path;
    eval_cmd->add_option("-e,--expr", expr_text, "Prefix expression, e.g. add(x,sin(x))")->required();
    eval_cmd->add_option("-d,--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) return list_problems();

        if (run_cmd->parsed()) {
            const RunConfig config = run_settings.resolve(RunConfig{});
            Session session(config, make_problem(config.problem));
            const auto result = session.run_to_completion();
            if (!dump_path.empty()) {
                std::ofstream out(dump_path);
                if (!out) throw IoError("cannot open '" + dump_path + "' for writing");
                session.tree().dump(out);
            }
            const std::vector<AggregateReport> reports{single_run_report(config, result)};
            run_output.emit_all(reports);
            std::cerr << "best " << result.best_expression << "  train_mse " << result.best_train_mse << '\n';
            return 0;
        }

        if (baseline_cmd->parsed()) {
            const RunConfig config = baseline_settings.resolve(RunConfig{});
            std::vector<AggregateReport> reports;
            if (baseline_runs == 1) {
                reports.push_back(single_run_report(config, random_search_baseline(config), Method::RandomSearch));
            } else {
                reports.push_back(run_many(config, baseline_runs, baseline_threads, Method::RandomSearch));
            }
            baseline_output.emit_all(reports);
            return 0;
        }

        if (bench_cmd->parsed()) {
            const auto batch = bench_settings.file_batch_keys();
            if (problems_opt->count() == 0 && batch.count("problems")) problems = batch.at("problems");
            if (runs_opt->count() == 0 && batch.count("runs")) runs = std::stoul(batch.at("runs"));
            if (threads_opt->count() == 0 && batch.count("threads")) threads = std::stoul(batch.at("threads"));
            const RunConfig base = bench_settings.resolve(RunConfig{});
            std::vector<AggregateReport> reports;
            for (const auto& name : split_list(problems)) {
                RunConfig c = base;
                c.problem = name;
                reports.push_back(run_many(c, runs, threads, parse_method(method)));
            }
            bench_output.emit_all(reports);
            return 0;
        }

        if (data_cmd->parsed()) {
            const auto p = make_problem(data_problem);
            Dataset data = [&] {
                if (split == "train") {
                    Rng rng(train_data_seed(data_seed));
                    return generate(p.train, p, rng);
                }
                if (split != "test") throw std::invalid_argument("split must be train or test");
                if (!p.test) throw std::invalid_argument(data_problem + " has no test set");
                Rng rng(test_data_seed(data_seed));
                return generate(*p.test, p, rng);
            }();
            if (data_output.empty()) {
                data.write_csv(std::cout);
            } else {
                std::ofstream out(data_output);
                if (!out) throw IoError("cannot open '" + data_output + "' for writing");
                data.write_csv(out);
            }
            return 0;
        }

        if (eval_cmd->parsed()) {
            std::ifstream in(data_path);
            const auto data = Dataset::read_csv(in);
            const std::vector<std::string> names(data.variable_names().begin(), data.variable_names().end());
            const auto expr = from_text(expr_text, names);
            std::cout.precision(17);
            std::cout << mse(expr, data) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "ptree: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
