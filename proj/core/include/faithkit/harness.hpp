#ifndef FAITHKIT_HARNESS_HPP
#define FAITHKIT_HARNESS_HPP

#include <string>
#include <vector>

#include "faithkit/config.hpp"
#include "faithkit/corpus.hpp"
#include "faithkit/metrics.hpp"
#include "faithkit/model.hpp"
#include "faithkit/report.hpp"

namespace faithkit {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Class-balanced sample without replacement (up to per_class from each
/// label), returned as ascending dataset indices. Seed-derived and
/// independent of traversal order.
std::vector<int> balanced_sample(const Dataset& dataset, int per_class,
                                 std::uint64_t seed);

/// One attribution procedure bound to a model and config. Every call is
/// deterministic; `random` draws a fresh ranking per invocation from its
/// own stream (so re-invocations inside the stability search differ, as a
/// random baseline must), all other methods are pure per input.
AttributionMethod make_method(const std::string& name, const ClassifierModel& model,
                              const ExperimentConfig& cfg, std::uint64_t stream_seed);

/// Grid selection over {0.1, 0.5, 1.2, 2.2}: mean VaPGD sensitivity AUC on
/// up to 50 dev examples, smallest mean wins. Falls back to 0.5 with no dev
/// data.
double select_pgd_epsilon(const ClassifierModel& model, const Dataset& dev,
                          const ExperimentConfig& cfg);

struct TrainOutcome {
    double dev_accuracy = 0.0;
    std::string checkpoint_path;
    int epochs_run = 0;
};

/// train + dev TSVs -> vocabulary -> embeddings -> trained checkpoint.
TrainOutcome run_train(const ExperimentConfig& cfg);

struct EvaluateOutcome {
    FaithfulnessReport report;
    std::vector<PerExampleRecord> records;
    bool any_success = false;
    std::string report_path;
    std::string records_path;
};

/// Full protocol: balanced sampling, one attribution per (method, example),
/// every configured metric, aggregates, pairwise t-tests, JSON + JSONL out.
/// Per-example failures are counted, never fatal.
EvaluateOutcome run_evaluate(const ExperimentConfig& cfg, const std::string& out_path);

/// Per (method, k) comprehensiveness and sensitivity-radius means as CSV.
std::string run_curves(const ExperimentConfig& cfg, const std::vector<int>& ks);

/// Per-example interpolation curves f(0..4) plus the mean row, as CSV.
std::string run_interpolate(const ExperimentConfig& cfg);

} // namespace faithkit

#endif
