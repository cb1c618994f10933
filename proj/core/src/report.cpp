#include "faithkit/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "faithkit/errors.hpp"

namespace faithkit {

namespace {

using Json = nlohmann::ordered_json;

double sanitize(double v) {
    if (std::isnan(v)) return 0.0;
    if (std::isinf(v)) return v > 0 ? 1e308 : -1e308;
    return v;
}

std::string full_precision(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

const CellStats* FaithfulnessReport::find_cell(const std::string& method,
                                               const std::string& metric) const {
    for (const auto& c : cells)
        if (c.method == method && c.metric == metric) return &c;
    return nullptr;
}

bool higher_is_better(const std::string& metric) {
    return metric == "comp" || metric == "stab";
}

std::string best_method(const FaithfulnessReport& report, const std::string& metric) {
    std::string best;
    double best_value = 0.0;
    for (const auto& m : report.methods) {
        const CellStats* cell = report.find_cell(m, metric);
        if (!cell || cell->count < 1) continue;
        if (best.empty() ||
            (higher_is_better(metric) ? cell->mean > best_value
                                      : cell->mean < best_value)) {
            best = m;
            best_value = cell->mean;
        }
    }
    return best;
}

void write_report_json(const FaithfulnessReport& report, const std::string& path) {
    Json j;
    j["toolkit_version"] = report.toolkit_version;
    j["seed"] = report.seed;
    j["examples_evaluated"] = report.examples_evaluated;
    j["methods"] = report.methods;
    j["metrics"] = report.metrics;
    j["config"] = report.config_echo;

    Json cells = Json::array();
    for (const auto& c : report.cells) {
        Json cell;
        cell["method"] = c.method;
        cell["metric"] = c.metric;
        cell["mean"] = sanitize(c.mean);
        cell["stddev"] = sanitize(c.stddev);
        cell["count"] = c.count;
        cell["failures"] = c.failures;
        cells.push_back(std::move(cell));
    }
    j["cells"] = std::move(cells);

    Json sig = Json::array();
    for (const auto& s : report.significance) {
        Json pair;
        pair["metric"] = s.metric;
        pair["method_a"] = s.method_a;
        pair["method_b"] = s.method_b;
        pair["t"] = sanitize(s.t);
        pair["p"] = sanitize(s.p);
        pair["significant_90"] = s.significant_90;
        pair["significant_95"] = s.significant_95;
        sig.push_back(std::move(pair));
    }
    j["significance"] = std::move(sig);

    std::ofstream out(path);
    if (!out)
        throw IoError("report: cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out)
        throw IoError("report: write failed for " + path);
}

FaithfulnessReport read_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("report: cannot read " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError("report: invalid JSON in " + path + ": " + e.what());
    }

    FaithfulnessReport r;
    try {
        r.toolkit_version = j.at("toolkit_version").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.examples_evaluated = j.at("examples_evaluated").get<int>();
        r.methods = j.at("methods").get<std::vector<std::string>>();
        r.metrics = j.at("metrics").get<std::vector<std::string>>();
        for (auto& [key, value] : j.at("config").items())
            r.config_echo[key] = value.get<std::string>();
        for (const auto& cell : j.at("cells")) {
            CellStats c;
            c.method = cell.at("method").get<std::string>();
            c.metric = cell.at("metric").get<std::string>();
            c.mean = cell.at("mean").get<double>();
            c.stddev = cell.at("stddev").get<double>();
            c.count = cell.at("count").get<int>();
            c.failures = cell.at("failures").get<int>();
            r.cells.push_back(std::move(c));
        }
        for (const auto& pair : j.at("significance")) {
            SignificancePair s;
            s.metric = pair.at("metric").get<std::string>();
            s.method_a = pair.at("method_a").get<std::string>();
            s.method_b = pair.at("method_b").get<std::string>();
            s.t = pair.at("t").get<double>();
            s.p = pair.at("p").get<double>();
            s.significant_90 = pair.at("significant_90").get<bool>();
            s.significant_95 = pair.at("significant_95").get<bool>();
            r.significance.push_back(std::move(s));
        }
    } catch (const Json::exception& e) {
        throw ParseError("report: missing or mistyped field in " + path + ": " + e.what());
    }
    return r;
}

void write_records_jsonl(const std::vector<PerExampleRecord>& records,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("report: cannot write " + path);
    for (const auto& rec : records) {
        Json j;
        j["example"] = rec.example;
        j["method"] = rec.method;
        j["metric"] = rec.metric;
        if (rec.failure)
            j["value"] = nullptr;
        else
            j["value"] = sanitize(rec.value);
        j["failure"] = rec.failure;
        out << j.dump() << '\n';
    }
    if (!out)
        throw IoError("report: write failed for " + path);
}

std::vector<PerExampleRecord> read_records_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("report: cannot read " + path);
    std::vector<PerExampleRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const std::exception& e) {
            throw ParseError("report: bad JSONL line " + std::to_string(line_no) +
                             " in " + path + ": " + e.what());
        }
        PerExampleRecord rec;
        rec.example = j.at("example").get<int>();
        rec.method = j.at("method").get<std::string>();
        rec.metric = j.at("metric").get<std::string>();
        rec.failure = j.at("failure").get<bool>();
        rec.value = rec.failure ? std::numeric_limits<double>::quiet_NaN()
                                : j.at("value").get<double>();
        records.push_back(std::move(rec));
    }
    return records;
}

std::string sibling_jsonl_path(const std::string& report_path) {
    const std::string suffix = ".json";
    if (report_path.size() > suffix.size() &&
        report_path.compare(report_path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return report_path.substr(0, report_path.size() - suffix.size()) + ".jsonl";
    return report_path + ".jsonl";
}

namespace {

struct Flags {
    bool best = false;
    bool sig90 = false;
    bool sig95 = false;
};

Flags flags_for(const FaithfulnessReport& report, const std::string& metric,
                const std::string& method, const std::string& best) {
    Flags f;
    f.best = method == best;
    if (f.best || best.empty()) return f;
    for (const auto& s : report.significance) {
        if (s.metric != metric) continue;
        const bool match = (s.method_a == best && s.method_b == method) ||
                           (s.method_a == method && s.method_b == best);
        if (match) {
            f.sig90 = s.significant_90;
            f.sig95 = s.significant_95;
            return f;
        }
    }
    return f;
}

} // namespace

std::string render_report_csv(const FaithfulnessReport& report) {
    if (report.cells.empty())
        throw DataError("report: nothing to render");
    std::ostringstream out;
    out << "metric,method,mean,stddev,count,failures,best,sig90_vs_best,sig95_vs_best\n";
    for (const auto& metric : report.metrics) {
        const std::string best = best_method(report, metric);
        for (const auto& method : report.methods) {
            const CellStats* cell = report.find_cell(method, metric);
            if (!cell) continue;
            const Flags f = flags_for(report, metric, method, best);
            out << metric << ',' << method << ',' << full_precision(cell->mean) << ','
                << full_precision(cell->stddev) << ',' << cell->count << ','
                << cell->failures << ',' << (f.best ? 1 : 0) << ',' << (f.sig90 ? 1 : 0)
                << ',' << (f.sig95 ? 1 : 0) << '\n';
        }
    }
    return out.str();
}

std::string render_report_text(const FaithfulnessReport& report) {
    if (report.cells.empty())
        throw DataError("report: nothing to render");
    std::ostringstream out;
    out << "toolkit " << report.toolkit_version << ", seed " << report.seed << ", "
        << report.examples_evaluated << " examples\n";
    for (const auto& metric : report.metrics) {
        const std::string best = best_method(report, metric);
        out << '\n'
            << metric << (higher_is_better(metric) ? " (higher is better)\n"
                                                   : " (lower is better)\n");
        out << std::left << std::setw(12) << "  method" << std::right << std::setw(12)
            << "mean" << std::setw(12) << "stddev" << std::setw(8) << "count"
            << std::setw(10) << "failures"
            << "  \n";
        for (const auto& method : report.methods) {
            const CellStats* cell = report.find_cell(method, metric);
            if (!cell) continue;
            const Flags f = flags_for(report, metric, method, best);
            std::ostringstream mean_s, std_s;
            mean_s << std::fixed << std::setprecision(4) << cell->mean;
            std_s << std::fixed << std::setprecision(4) << cell->stddev;
            out << (f.best ? "* " : "  ") << std::left << std::setw(10) << method
                << std::right << std::setw(12) << mean_s.str() << std::setw(12)
                << std_s.str() << std::setw(8) << cell->count << std::setw(10)
                << cell->failures << "  "
                << (f.sig95 ? "✓✓" : (f.sig90 ? "✓" : "")) << '\n';
        }
    }
    return out.str();
}

} // namespace faithkit
