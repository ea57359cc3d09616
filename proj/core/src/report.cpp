#include "ptree/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace ptree {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<double> read_optional(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

json config_json(const RunConfig& c) {
    return {
        {"problem", c.problem},
        {"iterations", c.iterations},
        {"k", c.search.k},
        {"delta_d", c.search.delta_d},
        {"delta_p", c.search.delta_p},
        {"max_depth", c.search.max_depth},
        {"terminal_bias", c.search.terminal_bias_first_visit},
        {"m_min", c.constants.m_min},
        {"m_max", c.constants.m_max},
        {"digit_depth", c.constants.digit_depth},
        {"target_error", optional_number(c.target_error)},
        {"trace_stride", c.trace_stride},
        {"seed", c.seed},
    };
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    c.problem = j.at("problem").get<std::string>();
    c.iterations = j.at("iterations").get<std::uint64_t>();
    c.search.k = j.at("k").get<double>();
    c.search.delta_d = j.at("delta_d").get<double>();
    c.search.delta_p = j.at("delta_p").get<double>();
    c.search.max_depth = j.at("max_depth").get<int>();
    c.search.terminal_bias_first_visit = j.at("terminal_bias").get<bool>();
    c.constants.m_min = j.at("m_min").get<int>();
    c.constants.m_max = j.at("m_max").get<int>();
    c.constants.digit_depth = j.at("digit_depth").get<int>();
    c.target_error = read_optional(j, "target_error");
    c.trace_stride = j.at("trace_stride").get<std::uint64_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json run_json(const RunResult& r, const EmitOptions& options) {
    json trace = json::array();
    for (const auto& p : r.trace) trace.push_back({p.iteration, p.best_mse});
    json j = {
        {"seed", r.seed},
        {"best_expression", r.best_expression},
        {"best_train_mse", r.best_train_mse},
        {"test_mse", optional_number(r.test_mse)},
        {"best_path_expression", r.best_path_expression},
        {"best_path_train_mse", r.best_path_train_mse},
        {"iterations", r.iterations},
        {"node_count", r.node_count},
        {"trace", trace},
    };
    if (options.include_timing) j["wall_seconds"] = r.wall_seconds;
    return j;
}

RunResult run_from_json(const json& j) {
    RunResult r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.best_expression = j.at("best_expression").get<std::string>();
    r.best_train_mse = j.at("best_train_mse").get<double>();
    r.test_mse = read_optional(j, "test_mse");
    r.best_path_expression = j.at("best_path_expression").get<std::string>();
    r.best_path_train_mse = j.at("best_path_train_mse").get<double>();
    r.iterations = j.at("iterations").get<std::uint64_t>();
    r.node_count = j.at("node_count").get<std::uint64_t>();
    for (const auto& p : j.at("trace")) r.trace.push_back({p.at(0).get<std::uint64_t>(), p.at(1).get<double>()});
    r.wall_seconds = j.value("wall_seconds", 0.0);
    return r;
}

json stats_json(const Statistics& s) {
    return {{"best", s.best}, {"median", s.median}};
}

Statistics stats_from_json(const json& j) {
    return {j.at("best").get<double>(), j.at("median").get<double>()};
}

json histogram_json(const std::vector<HistogramBin>& bins) {
    json out = json::array();
    for (const auto& b : bins) out.push_back({{"zero", b.zero}, {"decade", b.decade}, {"count", b.count}});
    return out;
}

std::vector<HistogramBin> histogram_from_json(const json& j) {
    std::vector<HistogramBin> out;
    for (const auto& b : j) {
        out.push_back({b.at("zero").get<bool>(), b.at("decade").get<int>(), b.at("count").get<std::size_t>()});
    }
    return out;
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2E", v);
    return buf;
}

}  // namespace

Format parse_format(std::string_view name) {
    if (name == "summary-json") return Format::SummaryJson;
    if (name == "trace-csv") return Format::TraceCsv;
    if (name == "histogram-csv") return Format::HistogramCsv;
    if (name == "table-text") return Format::TableText;
    throw std::invalid_argument("unknown format '" + std::string(name) + "'");
}

std::string_view format_name(Format f) {
    switch (f) {
    case Format::SummaryJson:
        return "summary-json";
    case Format::TraceCsv:
        return "trace-csv";
    case Format::HistogramCsv:
        return "histogram-csv";
    case Format::TableText:
        return "table-text";
    }
    return {};
}

AggregateReport single_run_report(const RunConfig& config, const RunResult& result, Method method) {
    AggregateReport report;
    report.problem = config.problem;
    report.method = method;
    report.config = config;
    report.seeds = {result.seed};
    report.runs = {result};
    report.train = summarize({result.best_train_mse});
    report.train_histogram = histogram({result.best_train_mse});
    if (result.test_mse) {
        report.test = summarize({*result.test_mse});
        report.test_histogram = histogram({*result.test_mse});
    }
    return report;
}

std::string summary_json(std::span<const AggregateReport> reports, EmitOptions options) {
    json out = json::array();
    for (const auto& r : reports) {
        json runs = json::array();
        for (const auto& run : r.runs) runs.push_back(run_json(run, options));
        out.push_back({
            {"problem", r.problem},
            {"method", method_name(r.method)},
            {"config", config_json(r.config)},
            {"seeds", r.seeds},
            {"runs", runs},
            {"train", stats_json(r.train)},
            {"test", r.test ? stats_json(*r.test) : json(nullptr)},
            {"train_histogram", histogram_json(r.train_histogram)},
            {"test_histogram", histogram_json(r.test_histogram)},
        });
    }
    return out.dump(2) + "\n";
}

std::vector<AggregateReport> reports_from_json(std::string_view text) {
    const json doc = json::parse(text);
    std::vector<AggregateReport> out;
    for (const auto& j : doc) {
        AggregateReport r;
        r.problem = j.at("problem").get<std::string>();
        r.method = parse_method(j.at("method").get<std::string>());
        r.config = config_from_json(j.at("config"));
        r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        for (const auto& run : j.at("runs")) r.runs.push_back(run_from_json(run));
        r.train = stats_from_json(j.at("train"));
        if (!j.at("test").is_null()) r.test = stats_from_json(j.at("test"));
        r.train_histogram = histogram_from_json(j.at("train_histogram"));
        r.test_histogram = histogram_from_json(j.at("test_histogram"));
        out.push_back(std::move(r));
    }
    return out;
}

void write_trace_csv(const RunResult& result, std::ostream& out) {
    const auto old = out.precision(17);
    out << "iteration,best_mse\n";
    for (const auto& p : result.trace) out << p.iteration << ',' << p.best_mse << '\n';
    out.precision(old);
}

void write_trace_csv(const AggregateReport& report, std::ostream& out) {
    std::vector<std::uint64_t> checkpoints;
    for (const auto& r : report.runs) {
        for (const auto& p : r.trace) checkpoints.push_back(p.iteration);
    }
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());

    const auto old = out.precision(17);
    out << "iteration,best_mse\n";
    for (auto it : checkpoints) {
        std::vector<double> values;
        for (const auto& r : report.runs) values.push_back(r.best_at(it));
        out << it << ',' << summarize(std::move(values)).median << '\n';
    }
    out.precision(old);
}

void write_histogram_csv(const AggregateReport& report, std::ostream& out) {
    const auto old = out.precision(17);
    out << "split,lower,upper,count\n";
    auto rows = [&](const char* split, const std::vector<HistogramBin>& bins) {
        for (const auto& b : bins) {
            if (b.zero) {
                out << split << ",0,0," << b.count << '\n';
            } else {
                out << split << ",1e" << b.decade << ",1e" << b.decade + 1 << ',' << b.count << '\n';
            }
        }
    };
    rows("train", report.train_histogram);
    rows("test", report.test_histogram);
    out.precision(old);
}

void write_table_text(std::span<const AggregateReport> reports, std::ostream& out) {
    char line[128];
    std::snprintf(line, sizeof line, "%-16s %-8s %-10s %-10s\n", "name", "", "train", "test");
    out << line;
    for (const auto& r : reports) {
        const std::string label = r.problem + (r.method == Method::RandomSearch ? " (random)" : "");
        std::snprintf(line, sizeof line, "%-16s %-8s %-10s %-10s\n", label.c_str(), "best", sci(r.train.best).c_str(),
                      r.test ? sci(r.test->best).c_str() : "none");
        out << line;
        std::snprintf(line, sizeof line, "%-16s %-8s %-10s %-10s\n", "", "median", sci(r.train.median).c_str(),
                      r.test ? sci(r.test->median).c_str() : "none");
        out << line;
    }
}

void emit(std::span<const AggregateReport> reports, Format format, std::ostream& out, EmitOptions options) {
    switch (format) {
    case Format::SummaryJson:
        out << summary_json(reports, options);
        break;
    case Format::TraceCsv:
        if (reports.size() != 1) throw std::invalid_argument("trace-csv takes exactly one report");
        if (reports[0].runs.size() == 1) {
            write_trace_csv(reports[0].runs[0], out);
        } else {
            write_trace_csv(reports[0], out);
        }
        break;
    case Format::HistogramCsv:
        if (reports.size() != 1) throw std::invalid_argument("histogram-csv takes exactly one report");
        write_histogram_csv(reports[0], out);
        break;
    case Format::TableText:
        write_table_text(reports, out);
        break;
    }
}

void emit(std::span<const AggregateReport> reports, Format format, const std::filesystem::path& destination,
          EmitOptions options) {
    std::ostringstream buffer;
    emit(reports, format, buffer, options);
    std::ofstream file(destination, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + destination.string() + "' for writing");
    file << buffer.str();
    file.flush();
    if (!file) throw IoError("failed writing '" + destination.string() + "'");
}

}  // namespace ptree
