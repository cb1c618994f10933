#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "faithkit/config.hpp"
#include "faithkit/errors.hpp"
#include "faithkit/harness.hpp"
#include "support/fixtures.hpp"

using namespace faithkit;
using namespace faithkit::testing;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
    return path;
}

/// One trained checkpoint on the synthetic corpus, shared across cases.
struct TrainedFixture {
    SyntheticCorpus corpus;
    std::string dir;
    std::string checkpoint;
    double dev_accuracy = 0.0;
};

const TrainedFixture& trained_fixture() {
    static TrainedFixture* fixture = [] {
        auto* f = new TrainedFixture;
        f->dir = scratch_dir("harness_fixture");
        f->corpus = make_synthetic_corpus(f->dir, 240, 60, 120, 991);
        f->checkpoint = f->dir + "/model.ckpt";

        ExperimentConfig cfg;
        cfg.train_tsv = f->corpus.train_tsv;
        cfg.dev_tsv = f->corpus.dev_tsv;
        cfg.embeddings = f->corpus.embeddings;
        cfg.checkpoint = f->checkpoint;
        cfg.seed = 11;
        cfg.hidden = 24;
        cfg.learning_rate = 0.5;
        cfg.batch_size = 32;
        cfg.max_epochs = 40;
        cfg.patience = 10;
        const TrainOutcome outcome = run_train(cfg);
        f->dev_accuracy = outcome.dev_accuracy;
        return f;
    }();
    return *fixture;
}

std::string base_config_text(const TrainedFixture& f) {
    std::ostringstream cfg;
    cfg << "checkpoint = " << f.checkpoint << "\n"
        << "train = " << f.corpus.train_tsv << "\n"
        << "dev = " << f.corpus.dev_tsv << "\n"
        << "eval = " << f.corpus.eval_tsv << "\n"
        << "embeddings = " << f.corpus.embeddings << "\n"
        << "synonyms = " << f.corpus.synonyms << "\n"
        << "hidden = 24\n"
        << "seed = 11\n";
    return cfg.str();
}

} // namespace

TEST_CASE("config: parsing, defaults, and validation") {
    const ExperimentConfig cfg = parse_config_text(
        "seed = 99\nmethods = random, gradinp\nmetrics = comp\n"
        "thresholds = 0.1, 0.3\npgd_epsilon = 1.2\n# comment\n\n"
        "stability_tau = 0.2\n",
        "inline");
    CHECK(cfg.seed == 99);
    CHECK(cfg.methods == std::vector<std::string>{"random", "gradinp"});
    CHECK(cfg.metrics == std::vector<std::string>{"comp"});
    CHECK(cfg.thresholds == std::vector<double>{0.1, 0.3});
    CHECK(cfg.pgd_epsilon == doctest::Approx(1.2));
    CHECK(cfg.stability_tau == doctest::Approx(0.2));
    CHECK(cfg.effective_pgd_step() == doctest::Approx(1.2 / 5.0));

    CHECK_THROWS_AS(parse_config_text("unknown_key = 1\n", "inline"), ParseError);
    CHECK_THROWS_AS(parse_config_text("methods = nosuch\n", "inline"), DataError);
    CHECK_THROWS_AS(parse_config_text("metrics = nosuch\n", "inline"), DataError);
    CHECK_THROWS_AS(parse_config_text("thresholds = 0.0\n", "inline"), DataError);
    CHECK_THROWS_AS(parse_config_text("seed = abc\n", "inline"), ParseError);

    const ExperimentConfig with_auto =
        parse_config_text("pgd_epsilon = auto\n", "inline");
    CHECK(with_auto.pgd_epsilon_auto);
}

TEST_CASE("balanced_sample: determinism, balance, and caps") {
    Dataset ds;
    for (int i = 0; i < 30; ++i) {
        LabeledExample ex;
        ex.label = i < 18 ? 0 : 1; // 18 zeros, 12 ones
        ex.sequence.tokens = {"x"};
        ex.sequence.ids = {2};
        ds.examples.push_back(ex);
    }
    const std::vector<int> a = balanced_sample(ds, 10, 7);
    const std::vector<int> b = balanced_sample(ds, 10, 7);
    CHECK(a == b);
    CHECK(a.size() == 20);
    int ones = 0;
    for (int idx : a) ones += ds.examples[static_cast<std::size_t>(idx)].label;
    CHECK(ones == 10);
    CHECK(std::is_sorted(a.begin(), a.end()));

    const std::vector<int> capped = balanced_sample(ds, 100, 7);
    CHECK(capped.size() == 30); // takes everything when the cap exceeds the pool

    const std::vector<int> other_seed = balanced_sample(ds, 10, 8);
    CHECK(a != other_seed);
}

TEST_CASE("run_train: synthetic corpus trains well and reruns byte-identically") {
    const TrainedFixture& f = trained_fixture();
    CHECK(f.dev_accuracy >= 0.95);

    const std::string second = f.dir + "/model2.ckpt";
    ExperimentConfig cfg;
    cfg.train_tsv = f.corpus.train_tsv;
    cfg.dev_tsv = f.corpus.dev_tsv;
    cfg.embeddings = f.corpus.embeddings;
    cfg.checkpoint = second;
    cfg.seed = 11;
    cfg.hidden = 24;
    cfg.learning_rate = 0.5;
    cfg.batch_size = 32;
    cfg.max_epochs = 40;
    cfg.patience = 10;
    run_train(cfg);
    CHECK(slurp(f.checkpoint) == slurp(second));
}

TEST_CASE("run_train: missing input file names the path") {
    ExperimentConfig cfg;
    cfg.train_tsv = "/nonexistent/train.tsv";
    cfg.embeddings = "/nonexistent/e.txt";
    cfg.checkpoint = "/tmp/x.ckpt";
    CHECK_THROWS_WITH_AS(run_train(cfg), doctest::Contains("/nonexistent/train.tsv"),
                         IoError);
}

TEST_CASE("run_evaluate: single method and metric over ten examples") {
    const TrainedFixture& f = trained_fixture();
    ExperimentConfig cfg = parse_config_text(
        base_config_text(f) + "methods = random\nmetrics = comp\neval_per_class = 5\n",
        "inline");
    const std::string out = f.dir + "/tiny_report.json";
    const EvaluateOutcome outcome = run_evaluate(cfg, out);

    CHECK(outcome.any_success);
    CHECK(outcome.report.examples_evaluated == 10);
    REQUIRE(outcome.report.cells.size() == 1);
    CHECK(outcome.report.cells[0].method == "random");
    CHECK(outcome.report.cells[0].metric == "comp");
    CHECK(outcome.report.cells[0].count == 10);
    CHECK(outcome.report.cells[0].failures == 0);
    CHECK(outcome.report.significance.empty()); // one method, no pairs
}

TEST_CASE("run_evaluate: reruns are byte-identical and means match the records") {
    const TrainedFixture& f = trained_fixture();
    ExperimentConfig cfg = parse_config_text(
        base_config_text(f) +
            "methods = random, gradinp, occlusion\nmetrics = comp, suff, stab\n"
            "eval_per_class = 6\n",
        "inline");

    const std::string out1 = f.dir + "/rep1.json";
    const std::string out2 = f.dir + "/rep2.json";
    const EvaluateOutcome o1 = run_evaluate(cfg, out1);
    const EvaluateOutcome o2 = run_evaluate(cfg, out2);
    CHECK(slurp(out1) == slurp(out2));
    CHECK(slurp(sibling_jsonl_path(out1)) == slurp(sibling_jsonl_path(out2)));

    // Means recomputed from the per-example dump must equal the cells.
    const std::vector<PerExampleRecord> records = read_records_jsonl(o1.records_path);
    std::map<std::pair<std::string, std::string>, std::vector<double>> grouped;
    for (const auto& r : records)
        if (!r.failure) grouped[{r.method, r.metric}].push_back(r.value);
    for (const auto& cell : o1.report.cells) {
        const auto& values = grouped[{cell.method, cell.metric}];
        REQUIRE(static_cast<int>(values.size()) == cell.count);
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= cell.count;
        CHECK(cell.mean == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("run_evaluate: sensitivity on a small sample yields finite radii") {
    const TrainedFixture& f = trained_fixture();
    ExperimentConfig cfg = parse_config_text(
        base_config_text(f) + "methods = gradinp\nmetrics = sens\neval_per_class = 2\n",
        "inline");
    const EvaluateOutcome o = run_evaluate(cfg, f.dir + "/sens_report.json");
    REQUIRE(o.report.cells.size() == 1);
    CHECK(o.report.cells[0].count + o.report.cells[0].failures == 4);
    CHECK(o.report.cells[0].count >= 1);
    CHECK(o.report.cells[0].mean > 0.0);
}

TEST_CASE("report: sibling path derivation") {
    CHECK(sibling_jsonl_path("out/report.json") == "out/report.jsonl");
    CHECK(sibling_jsonl_path("plain") == "plain.jsonl");
}

TEST_CASE("report: CSV render round-trips every numeric cell") {
    const TrainedFixture& f = trained_fixture();
    ExperimentConfig cfg = parse_config_text(
        base_config_text(f) + "methods = random, gradinp\nmetrics = comp, suff\n"
                              "eval_per_class = 4\n",
        "inline");
    const EvaluateOutcome o = run_evaluate(cfg, f.dir + "/csv_report.json");
    const std::string csv = render_report_csv(o.report);

    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line); // header
    int rows = 0;
    while (std::getline(lines, line)) {
        std::istringstream fields(line);
        std::string metric, method, cell;
        std::getline(fields, metric, ',');
        std::getline(fields, method, ',');
        std::getline(fields, cell, ',');
        const double mean = std::stod(cell);
        std::getline(fields, cell, ',');
        const double stddev = std::stod(cell);
        std::getline(fields, cell, ',');
        const int count = std::stoi(cell);
        std::getline(fields, cell, ',');
        const int failures = std::stoi(cell);
        const CellStats* stats = o.report.find_cell(method, metric);
        REQUIRE(stats != nullptr);
        CHECK(stats->mean == mean); // full-precision text round trip
        CHECK(stats->stddev == stddev);
        CHECK(stats->count == count);
        CHECK(stats->failures == failures);
        ++rows;
    }
    CHECK(rows == 4);
}

TEST_CASE("report: best marking follows each metric's direction") {
    FaithfulnessReport r;
    r.toolkit_version = kToolkitVersion;
    r.methods = {"a", "b"};
    r.metrics = {"comp", "suff", "sens", "stab"};
    auto cell = [](const char* m, const char* k, double mean) {
        CellStats c;
        c.method = m;
        c.metric = k;
        c.mean = mean;
        c.count = 5;
        return c;
    };
    r.cells = {cell("a", "comp", 0.9), cell("b", "comp", 0.4),
               cell("a", "suff", 0.2), cell("b", "suff", 0.1),
               cell("a", "sens", 1.5), cell("b", "sens", 2.0),
               cell("a", "stab", 0.3), cell("b", "stab", 0.8)};
    CHECK(best_method(r, "comp") == "a"); // higher is better
    CHECK(best_method(r, "suff") == "b"); // lower is better
    CHECK(best_method(r, "sens") == "a"); // lower is better
    CHECK(best_method(r, "stab") == "b"); // higher is better

    const std::string csv = render_report_csv(r);
    CHECK(csv.find("comp,a,") != std::string::npos);
    const std::string text = render_report_text(r);
    CHECK(text.find("* a") != std::string::npos);

    FaithfulnessReport empty;
    CHECK_THROWS_AS(render_report_csv(empty), DataError);
    CHECK_THROWS_AS(render_report_text(empty), DataError);
}

TEST_CASE("report: JSON round trip preserves the structures") {
    const TrainedFixture& f = trained_fixture();
    ExperimentConfig cfg = parse_config_text(
        base_config_text(f) + "methods = random, gradinp\nmetrics = comp\n"
                              "eval_per_class = 3\n",
        "inline");
    const std::string out = f.dir + "/round_report.json";
    const EvaluateOutcome o = run_evaluate(cfg, out);
    const FaithfulnessReport loaded = read_report_json(out);
    CHECK(loaded.toolkit_version == o.report.toolkit_version);
    CHECK(loaded.seed == o.report.seed);
    CHECK(loaded.methods == o.report.methods);
    REQUIRE(loaded.cells.size() == o.report.cells.size());
    for (std::size_t i = 0; i < loaded.cells.size(); ++i) {
        CHECK(loaded.cells[i].mean == o.report.cells[i].mean);
        CHECK(loaded.cells[i].count == o.report.cells[i].count);
    }
    REQUIRE(loaded.significance.size() == o.report.significance.size());
    for (std::size_t i = 0; i < loaded.significance.size(); ++i)
        CHECK(loaded.significance[i].p == o.report.significance[i].p);
}

TEST_CASE("run_curves: one row per (method, k), clamping flagged") {
    const TrainedFixture& f = trained_fixture();
    ExperimentConfig cfg = parse_config_text(
        base_config_text(f) + "methods = gradinp\neval_per_class = 2\n", "inline");
    const std::string csv = run_curves(cfg, {2, 50});

    std::istringstream lines(csv);
    std::string header, row2, row50, extra;
    std::getline(lines, header);
    REQUIRE(std::getline(lines, row2));
    REQUIRE(std::getline(lines, row50));
    CHECK_FALSE(std::getline(lines, extra));
    CHECK(row2.substr(0, 10) == std::string("gradinp,2,"));
    // k = 50 exceeds every sentence length, so every example is clamped.
    std::istringstream fields(row50);
    std::string cell;
    std::getline(fields, cell, ','); // method
    std::getline(fields, cell, ','); // k
    CHECK(cell == "50");
    std::getline(fields, cell, ','); // examples
    const int examples = std::stoi(cell);
    std::getline(fields, cell, ','); // clamped
    CHECK(std::stoi(cell) == examples);
}

TEST_CASE("run_interpolate: mean endpoints are exactly zero and one") {
    const TrainedFixture& f = trained_fixture();
    ExperimentConfig cfg = parse_config_text(
        base_config_text(f) +
            "methods = gradinp\ninterp_method = gradinp\ninterp_metric = comp\n"
            "eval_per_class = 6\ninterp_examples = 6\n",
        "inline");
    const std::string csv = run_interpolate(cfg);

    std::istringstream lines(csv);
    std::string line, mean_line;
    std::getline(lines, line); // header
    int data_rows = 0;
    double sums[5] = {0, 0, 0, 0, 0};
    while (std::getline(lines, line)) {
        if (line.rfind("mean,", 0) == 0) {
            mean_line = line;
        } else if (line.rfind("#", 0) != 0) {
            ++data_rows;
            std::istringstream fields(line);
            std::string cell;
            std::getline(fields, cell, ','); // example id
            double f[5];
            for (int i = 0; i < 5; ++i) {
                std::getline(fields, cell, ',');
                f[i] = std::stod(cell);
                sums[i] += f[i];
            }
            // every per-example row starts at 0 and ends at 1
            CHECK(f[0] == 0.0);
            CHECK(f[4] == 1.0);
        }
    }
    REQUIRE(data_rows >= 1);
    REQUIRE_FALSE(mean_line.empty());
    std::istringstream fields(mean_line);
    std::string cell;
    std::getline(fields, cell, ','); // "mean"
    for (int i = 0; i < 5; ++i) {
        std::getline(fields, cell, ',');
        const double mean = std::stod(cell);
        // mean row equals the recomputed mean of the per-example rows, and
        // the endpoint columns are exactly 0 and 1
        CHECK(mean == doctest::Approx(sums[i] / data_rows).epsilon(1e-12));
        if (i == 0) CHECK(mean == 0.0);
        if (i == 4) CHECK(mean == 1.0);
    }

    // Determinism under a fixed seed.
    CHECK(run_interpolate(cfg) == csv);
}

TEST_CASE("make_method: every known method produces a valid attribution") {
    const TrainedFixture& f = trained_fixture();
    const ClassifierModel model = load_checkpoint(f.checkpoint);
    Dataset eval_ds = load_dataset(f.corpus.eval_tsv, "eval");
    Dataset train_ds = load_dataset(f.corpus.train_tsv, "train");
    const Vocabulary vocab = build_vocabulary(train_ds);
    encode_dataset(eval_ds, vocab);
    const TokenSequence& x = eval_ds.examples.front().sequence;

    ExperimentConfig cfg;
    cfg.lime_samples = 64;
    for (const auto& name : kKnownMethods) {
        const AttributionMethod method = make_method(name, model, cfg, 1234);
        const Attribution a = method(x);
        CHECK(a.method == name);
        CHECK(a.scores.size() == x.length());
        CHECK(a.scores.allFinite());
        if (name != "random") {
            const Attribution again = method(x);
            CHECK(a.scores == again.scores); // pure per input
        }
    }
}

TEST_CASE("run_evaluate: a method failing on every example is all-failure, not fatal") {
    const TrainedFixture& f = trained_fixture();
    // Two LIME samples can never cover n+1 features, so every example fails.
    ExperimentConfig cfg = parse_config_text(
        base_config_text(f) + "methods = lime\nmetrics = comp\neval_per_class = 3\n"
                              "lime_samples = 2\n",
        "inline");
    const EvaluateOutcome o = run_evaluate(cfg, f.dir + "/allfail_report.json");
    CHECK_FALSE(o.any_success);
    REQUIRE(o.report.cells.size() == 1);
    CHECK(o.report.cells[0].count == 0);
    CHECK(o.report.cells[0].failures == 6);
    for (const auto& rec : o.records) CHECK(rec.failure);
}

TEST_CASE("select_pgd_epsilon: grid member on dev data, 0.5 without") {
    const TrainedFixture& f = trained_fixture();
    const ClassifierModel model = load_checkpoint(f.checkpoint);
    Dataset train_ds = load_dataset(f.corpus.train_tsv, "train");
    const Vocabulary vocab = build_vocabulary(train_ds);
    Dataset dev = load_dataset(f.corpus.dev_tsv, "dev");
    encode_dataset(dev, vocab);
    dev.examples.resize(4);

    ExperimentConfig cfg = parse_config_text(base_config_text(f), "inline");
    const double eps = select_pgd_epsilon(model, dev, cfg);
    const std::vector<double> grid{0.1, 0.5, 1.2, 2.2};
    CHECK(std::find(grid.begin(), grid.end(), eps) != grid.end());

    CHECK(select_pgd_epsilon(model, Dataset{}, cfg) == 0.5);
}

TEST_CASE("cli: exit codes for usage and missing files") {
    const std::string dir = scratch_dir("cli_exit");
    const std::string cfg_path =
        write_file(dir + "/bad.cfg", "train = /nonexistent/zzz.tsv\n"
                                     "embeddings = /nonexistent/e.txt\n"
                                     "checkpoint = " + dir + "/m.ckpt\n");
    const std::string err_path = dir + "/err.txt";

    const std::string tool = FAITHKIT_CLI_PATH;
    auto run = [&](const std::string& args) {
        const std::string cmd = tool + " " + args + " >/dev/null 2>" + err_path;
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };

    CHECK(run("train --config " + cfg_path) == 2);
    const std::string err = slurp(err_path);
    CHECK(err.find("/nonexistent/zzz.tsv") != std::string::npos);

    CHECK(run("train --config /nonexistent/cfg.cfg") == 2);
    CHECK(run("nonsense-subcommand") == 2);
    CHECK(run("report /nonexistent/report.json") == 2);
    CHECK(run("--help") == 0);
}
