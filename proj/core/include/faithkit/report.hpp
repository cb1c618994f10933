#ifndef FAITHKIT_REPORT_HPP
#define FAITHKIT_REPORT_HPP

#include <map>
#include <string>
#include <vector>

namespace faithkit {

/// Aggregate for one (method, metric) pair.
struct CellStats {
    std::string method;
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0;
    int count = 0;    // examples contributing to the mean
    int failures = 0; // examples that failed for this cell
};

/// Pairwise Student's t result for one metric.
struct SignificancePair {
    std::string metric;
    std::string method_a;
    std::string method_b;
    double t = 0.0;
    double p = 1.0;
    bool significant_90 = false;
    bool significant_95 = false;
};

/// One per-example measurement, mirrored as a JSON-lines record.
struct PerExampleRecord {
    int example = 0;
    std::string method;
    std::string metric;
    double value = 0.0;
    bool failure = false;
};

struct FaithfulnessReport {
    std::string toolkit_version;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config_echo;
    std::vector<std::string> methods;
    std::vector<std::string> metrics;
    std::vector<CellStats> cells;
    std::vector<SignificancePair> significance;
    int examples_evaluated = 0;

    const CellStats* find_cell(const std::string& method, const std::string& metric) const;
};

/// Lower is better for suff and sens; higher is better for comp and stab.
bool higher_is_better(const std::string& metric);

/// Best method per metric by the metric's direction, among cells with
/// count >= 1.
std::string best_method(const FaithfulnessReport& report, const std::string& metric);

void write_report_json(const FaithfulnessReport& report, const std::string& path);
FaithfulnessReport read_report_json(const std::string& path);

void write_records_jsonl(const std::vector<PerExampleRecord>& records,
                         const std::string& path);
std::vector<PerExampleRecord> read_records_jsonl(const std::string& path);

/// report.json -> report.jsonl (or appends .jsonl when the extension differs).
std::string sibling_jsonl_path(const std::string& report_path);

/// CSV rendering: one row per cell with best/significance columns.
std::string render_report_csv(const FaithfulnessReport& report);

/// Aligned text table, one block per metric, checkmark flags per the
/// 90%/95% confidence convention.
std::string render_report_text(const FaithfulnessReport& report);

} // namespace faithkit

#endif
