#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ptree/runner.hpp"

namespace ptree {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Format { SummaryJson, TraceCsv, HistogramCsv, TableText };

Format parse_format(std::string_view name);
std::string_view format_name(Format f);

struct EmitOptions {
    /// Wall-clock figures differ between invocations, so they are left out unless asked for.
    bool include_timing = false;
};

/// Wraps one result so every format applies to it.
AggregateReport single_run_report(const RunConfig& config, const RunResult& result,
                                  Method method = Method::PrototypeTree);

std::string summary_json(std::span<const AggregateReport> reports, EmitOptions options = {});
std::vector<AggregateReport> reports_from_json(std::string_view text);

void write_trace_csv(const RunResult& result, std::ostream& out);
/// Per-checkpoint median of best-so-far mse across the report's runs.
void write_trace_csv(const AggregateReport& report, std::ostream& out);
void write_histogram_csv(const AggregateReport& report, std::ostream& out);
void write_table_text(std::span<const AggregateReport> reports, std::ostream& out);

void emit(std::span<const AggregateReport> reports, Format format, std::ostream& out, EmitOptions options = {});
/// Writes to a file; throws IoError if it cannot be written.
void emit(std::span<const AggregateReport> reports, Format format, const std::filesystem::path& destination,
          EmitOptions options = {});

}  // namespace ptree
