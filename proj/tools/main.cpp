#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "faithkit/config.hpp"
#include "faithkit/errors.hpp"
#include "faithkit/harness.hpp"
#include "faithkit/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
    std::string config_path;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

faithkit::ExperimentConfig load_config(const CommonArgs& args) {
    faithkit::ExperimentConfig cfg = faithkit::parse_config_file(args.config_path);
    if (args.seed_set) cfg.seed = args.seed;
    if (!args.out.empty()) cfg.out = args.out;
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out)
        throw faithkit::IoError("cannot write " + path);
    out << text;
    if (!out)
        throw faithkit::IoError("write failed for " + path);
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::cout << text;
    else
        write_text(out_path, text);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"faithkit: attribution methods and faithfulness metrics "
                 "for a small text classifier"};
    app.require_subcommand(1);

    CommonArgs train_args, eval_args, curves_args, interp_args;
    std::string curves_ks;
    std::string report_path;
    std::string report_out;
    std::string report_format = "text";

    auto add_common = [](CLI::App* cmd, CommonArgs& args, bool out_help_is_file) {
        cmd->add_option("--config", args.config_path, "experiment config file")
            ->required();
        cmd->add_option("--seed", args.seed, "override the config seed")
            ->each([&args](const std::string&) { args.seed_set = true; });
        cmd->add_option("--out", args.out,
                        out_help_is_file ? "output file path" : "output path");
    };

    CLI::App* cmd_train = app.add_subcommand("train", "train a classifier checkpoint");
    add_common(cmd_train, train_args, true);

    CLI::App* cmd_evaluate =
        app.add_subcommand("evaluate", "run methods x metrics and write a report");
    add_common(cmd_evaluate, eval_args, true);

    CLI::App* cmd_curves =
        app.add_subcommand("curves", "comprehensiveness/sensitivity vs top-k CSV");
    add_common(cmd_curves, curves_args, true);
    cmd_curves->add_option("--ks", curves_ks, "comma-separated top-k counts");

    CLI::App* cmd_interpolate =
        app.add_subcommand("interpolate", "relevant-set interpolation curves CSV");
    add_common(cmd_interpolate, interp_args, true);

    CLI::App* cmd_report = app.add_subcommand("report", "render a report file");
    cmd_report->add_option("report", report_path, "report JSON file")->required();
    cmd_report->add_option("--format", report_format, "csv or text")
        ->check(CLI::IsMember({"csv", "text"}));
    cmd_report->add_option("--out", report_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (cmd_train->parsed()) {
            faithkit::ExperimentConfig cfg = load_config(train_args);
            if (!cfg.out.empty()) cfg.checkpoint = cfg.out;
            const faithkit::TrainOutcome outcome = faithkit::run_train(cfg);
            std::printf("checkpoint %s\n", outcome.checkpoint_path.c_str());
            std::printf("epochs_run %d\n", outcome.epochs_run);
            std::printf("dev_accuracy %.6f\n", outcome.dev_accuracy);
        } else if (cmd_evaluate->parsed()) {
            faithkit::ExperimentConfig cfg = load_config(eval_args);
            const std::string out_path = cfg.out.empty() ? "report.json" : cfg.out;
            const faithkit::EvaluateOutcome outcome = faithkit::run_evaluate(cfg, out_path);
            std::printf("report %s\n", outcome.report_path.c_str());
            std::printf("records %s\n", outcome.records_path.c_str());
            std::printf("examples %d\n", outcome.report.examples_evaluated);
            if (!outcome.any_success) {
                std::fprintf(stderr, "error: every example failed numerically\n");
                return kExitNumeric;
            }
        } else if (cmd_curves->parsed()) {
            faithkit::ExperimentConfig cfg = load_config(curves_args);
            std::vector<int> ks = cfg.curve_ks;
            if (!curves_ks.empty()) {
                ks.clear();
                std::string item;
                std::istringstream stream(curves_ks);
                while (std::getline(stream, item, ','))
                    if (!item.empty()) ks.push_back(std::stoi(item));
            }
            emit(cfg.out, faithkit::run_curves(cfg, ks));
        } else if (cmd_interpolate->parsed()) {
            faithkit::ExperimentConfig cfg = load_config(interp_args);
            emit(cfg.out, faithkit::run_interpolate(cfg));
        } else if (cmd_report->parsed()) {
            const faithkit::FaithfulnessReport report =
                faithkit::read_report_json(report_path);
            const std::string rendered = report_format == "csv"
                                             ? faithkit::render_report_csv(report)
                                             : faithkit::render_report_text(report);
            emit(report_out, rendered);
        }
    } catch (const faithkit::NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    } catch (const faithkit::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitOk;
}
