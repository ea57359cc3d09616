#include <stdexcept>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ptree/report.hpp"

using namespace ptree;

namespace {

AggregateReport sample_report(const std::string& problem, std::size_t runs) {
    RunConfig c;
    c.problem = problem;
    c.iterations = 600;
    c.trace_stride = 200;
    c.seed = 4;
    return run_many(c, runs, 2);
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("trace csv") {
    RunResult r;
    r.trace = {{100, 0.5}, {200, 0.25}};
    std::ostringstream out;
    write_trace_csv(r, out);
    CHECK(out.str() == "iteration,best_mse\n100,0.5\n200,0.25\n");
}

TEST_CASE("aggregate trace is the per-checkpoint median") {
    AggregateReport report;
    RunResult a;
    a.trace = {{10, 4.0}, {20, 1.0}};
    RunResult b;
    b.trace = {{10, 2.0}, {20, 2.0}};
    RunResult c;
    c.trace = {{10, 3.0}, {20, 0.5}};
    report.runs = {a, b, c};
    std::ostringstream out;
    write_trace_csv(report, out);
    CHECK(out.str() == "iteration,best_mse\n10,3\n20,1\n");
}

TEST_CASE("summary json round trip") {
    const std::vector<AggregateReport> reports{sample_report("keijzer6", 3), sample_report("nguyen7", 2)};
    const auto text = summary_json(reports);
    const auto parsed = reports_from_json(text);
    CHECK(parsed == reports);
    CHECK(summary_json(parsed) == text);
    CHECK(text.find("wall_seconds") == std::string::npos);
    CHECK(summary_json(reports, {true}).find("wall_seconds") != std::string::npos);
}

TEST_CASE("emitted artifacts are byte-identical across invocations") {
    for (auto format : {Format::SummaryJson, Format::TraceCsv, Format::HistogramCsv, Format::TableText}) {
        std::ostringstream a;
        std::ostringstream b;
        const std::vector<AggregateReport> first{sample_report("nguyen4", 3)};
        const std::vector<AggregateReport> second{sample_report("nguyen4", 3)};
        emit(first, format, a);
        emit(second, format, b);
        CHECK(a.str() == b.str());
        CHECK_FALSE(a.str().empty());
    }
}

TEST_CASE("table text mirrors the results table") {
    AggregateReport with_test;
    with_test.problem = "keijzer6";
    with_test.train = {1.48e-13, 1.22e-9};
    with_test.test = Statistics{7.24e-14, 3.44e-9};
    AggregateReport no_test;
    no_test.problem = "nguyen4";
    no_test.train = {7.22e-34, 2.49e-6};
    std::ostringstream out;
    const std::vector<AggregateReport> reports{with_test, no_test};
    write_table_text(reports, out);
    CHECK(out.str() ==
          "name                      train      test      \n"
          "keijzer6         best     1.48E-13   7.24E-14  \n"
          "                 median   1.22E-09   3.44E-09  \n"
          "nguyen4          best     7.22E-34   none      \n"
          "                 median   2.49E-06   none      \n");
}

TEST_CASE("histogram csv") {
    AggregateReport r;
    r.train_histogram = {{true, 0, 2}, {false, -3, 5}};
    r.test_histogram = {{false, -2, 7}};
    std::ostringstream out;
    write_histogram_csv(r, out);
    CHECK(out.str() == "split,lower,upper,count\ntrain,0,0,2\ntrain,1e-3,1e-2,5\ntest,1e-2,1e-1,7\n");
}

TEST_CASE("single run wrapper") {
    RunConfig c;
    c.problem = "keijzer6";
    c.iterations = 300;
    const auto r = run(c);
    const auto report = single_run_report(c, r);
    CHECK(report.train.best == r.best_train_mse);
    CHECK(report.train.median == r.best_train_mse);
    REQUIRE(report.test.has_value());
    CHECK(report.test->best == *r.test_mse);
}

TEST_CASE("file destinations") {
    const std::vector<AggregateReport> reports{sample_report("nguyen7", 1)};
    const auto dir = std::filesystem::temp_directory_path() / "ptree_report_test";
    std::filesystem::create_directories(dir);
    const auto file = dir / "summary.json";
    emit(reports, Format::SummaryJson, file);
    CHECK(std::filesystem::file_size(file) > 0);
    CHECK_THROWS_AS(emit(reports, Format::SummaryJson, dir / "missing" / "summary.json"), IoError);
    std::filesystem::remove_all(dir);

    CHECK(parse_format("trace-csv") == Format::TraceCsv);
    CHECK_THROWS_AS(parse_format("xml"), std::invalid_argument);
}

}  // TEST_SUITE
