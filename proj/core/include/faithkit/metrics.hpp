#ifndef FAITHKIT_METRICS_HPP
#define FAITHKIT_METRICS_HPP

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <vector>

#include "faithkit/attribution.hpp"
#include "faithkit/corpus.hpp"
#include "faithkit/model.hpp"

namespace faithkit {

/// Percentage thresholds the removal and sensitivity curves aggregate over.
inline const std::vector<double> kDefaultThresholds = {0.1, 0.2, 0.3, 0.4, 0.5};

/// max(1, round(q * n)) tokens.
int relevant_set_size(double fraction, int n_tokens);

/// The top tokens of the attribution order, most important first.
std::vector<int> relevant_set(const Attribution& attribution, double fraction);

/// Score drop after replacing the given tokens with the PAD embedding.
double comprehensiveness_set(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                             const std::vector<int>& tokens);
double comprehensiveness(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                         const Attribution& attribution, double fraction);

/// Score drop after replacing everything outside the given tokens with PAD.
double sufficiency_set(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                       const std::vector<int>& tokens);
double sufficiency(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                   const Attribution& attribution, double fraction);

/// Arithmetic mean over the per-threshold values.
double removal_auc(const std::vector<double>& per_threshold_values);

struct AttackConfig {
    int iterations = 100;
    double step = 1.0;
};

struct AttackResult {
    bool success = false;
    Eigen::MatrixXd adversarial; // final embeddings (last iterate or first flip)
};

/// Deterministic PGD attack on s_y restricted to the masked token rows:
/// starts from zero perturbation, projects the cumulative perturbation onto
/// the masked Frobenius epsilon ball each step, succeeds as soon as any
/// iterate changes the argmax prediction.
AttackResult pgd_attack(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                        const std::vector<int>& mask, double epsilon,
                        const AttackConfig& cfg = {});

struct SensitivityRadius {
    double radius = 0.0;        // smallest radius observed to succeed
    double largest_failing = 0.0;
    bool succeeded = false;     // false when the doubling cap was exhausted
};

/// Binary search for the minimal flipping radius: doubling from 1.0 (cap
/// 2^10), then 20 bisection rounds between the bracketing radii.
SensitivityRadius sensitivity_radius_set(const ClassifierModel& model,
                                         const Eigen::MatrixXd& embeds,
                                         const std::vector<int>& mask,
                                         const AttackConfig& cfg = {});
SensitivityRadius sensitivity_radius(const ClassifierModel& model,
                                     const Eigen::MatrixXd& embeds,
                                     const Attribution& attribution, double fraction,
                                     const AttackConfig& cfg = {});

struct SensitivityResult {
    std::vector<double> radii;      // +infinity where the attack failed
    std::vector<bool> attack_success;
    double auc = 0.0;               // mean of the finite radii
    int failed_thresholds = 0;
    bool defined = false;           // false when every attack failed
};

SensitivityResult sensitivity_auc(const ClassifierModel& model,
                                  const Eigen::MatrixXd& embeds,
                                  const Attribution& attribution,
                                  const std::vector<double>& thresholds = kDefaultThresholds,
                                  const AttackConfig& cfg = {});

/// Pearson correlation of two rank vectors (use average_ranks upstream for
/// tied scores). Both constant: 1; exactly one constant: 0. n >= 2 required.
double spearman(const Eigen::VectorXd& ranks_a, const Eigen::VectorXd& ranks_b);

struct StabilityConfig {
    int max_substitutions = 4;
    double tau = 0.1; // admissible change in the predicted-class probability
};

/// Any attribution procedure, re-invokable on substituted inputs.
using AttributionMethod = std::function<Attribution(const TokenSequence&)>;

/// Greedy contrast-example search: walk tokens in decreasing importance,
/// substitute each with its best admissible synonym when that strictly
/// lowers the rank correlation, stop after max_substitutions acceptances.
/// Returns the final (minimum) Spearman value; 1.0 when nothing is accepted.
/// `precomputed_base` skips the initial method(x) call when the caller
/// already holds that attribution.
double stability(const ClassifierModel& model, const TokenSequence& x,
                 const AttributionMethod& method, const SynonymLexicon& lexicon,
                 const Vocabulary& vocab, const StabilityConfig& cfg,
                 const Attribution* precomputed_base = nullptr);

enum class InterpolationMetric { kComprehensiveness, kSensitivity };

struct InterpolationCurve {
    std::array<double, 5> values{}; // f(0) .. f(4)
    bool degenerate = false;        // denominator below 1e-12 or infinite radii
};

/// Replaces the i least-important members of the top-4 relevant set with
/// distinct random outside tokens and reports the normalized metric change
/// at each step. Requires n >= 8.
InterpolationCurve interpolation_curve(const ClassifierModel& model,
                                       const Eigen::MatrixXd& embeds,
                                       const Attribution& attribution,
                                       InterpolationMetric metric, Rng& rng,
                                       const AttackConfig& attack_cfg = {});

struct SignificanceResult {
    double t = 0.0;
    double p = 1.0;
    bool significant_90 = false;
    bool significant_95 = false;
};

/// Two-sample pooled-variance Student's t test, two-sided p-value. Zero
/// pooled variance: equal means give t=0, p=1; unequal means give an
/// infinite t and p=0.
SignificanceResult t_test(const std::vector<double>& scores_a,
                          const std::vector<double>& scores_b);

} // namespace faithkit

#endif
