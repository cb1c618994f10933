#ifndef FAITHKIT_CONFIG_HPP
#define FAITHKIT_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace faithkit {

/// Everything a run needs, parsed from a flat `key = value` file.
/// Unknown keys and unknown method/metric names are rejected.
struct ExperimentConfig {
    // paths
    std::string checkpoint;
    std::string train_tsv;
    std::string dev_tsv;
    std::string eval_tsv;
    std::string embeddings;
    std::string synonyms;
    std::string out;

    // what to run
    std::vector<std::string> methods = {"random", "vagrad", "gradinp", "inggrad",
                                        "deeplift", "occlusion", "lime", "vapgd",
                                        "pgdinp"};
    std::vector<std::string> metrics = {"comp", "suff", "sens", "stab"};
    std::vector<double> thresholds = {0.1, 0.2, 0.3, 0.4, 0.5};
    std::uint64_t seed = 7;
    int eval_per_class = 50;

    // attribution parameters
    double pgd_epsilon = 0.5;
    bool pgd_epsilon_auto = false; // dev-split selection from the candidate grid
    int pgd_iterations = 50;
    double pgd_step = -1.0;        // negative means epsilon / 5
    int lime_samples = 200;
    double lime_kernel_width = 0.25;
    double lime_ridge = 1e-3;
    int inggrad_steps = 50;
    double certify_delta = 0.1;

    // metric parameters
    int attack_iterations = 100;
    double attack_step = 1.0;
    int stability_k = 4;
    double stability_tau = 0.1;

    // curves / interpolation
    std::vector<int> curve_ks = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int curve_min_len = 1;
    int curve_max_len = 1 << 20;
    std::string interp_method = "vapgd";
    std::string interp_metric = "sens";
    int interp_examples = 50;

    // training
    double learning_rate = 0.5;
    int batch_size = 32;
    int max_epochs = 50;
    int patience = 5;
    int hidden = 64;
    int dim = -1; // negative: take the embedding file's dimension

    /// Raw key/value pairs, echoed into reports.
    std::map<std::string, std::string> raw;

    double effective_pgd_step() const {
        return pgd_step > 0.0 ? pgd_step : pgd_epsilon / 5.0;
    }
};

extern const std::vector<std::string> kKnownMethods;
extern const std::vector<std::string> kKnownMetrics;

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

} // namespace faithkit

#endif
