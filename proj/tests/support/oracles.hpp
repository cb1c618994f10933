#ifndef FAITHKIT_TESTS_ORACLES_HPP
#define FAITHKIT_TESTS_ORACLES_HPP

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "faithkit/corpus.hpp"
#include "faithkit/metrics.hpp"
#include "faithkit/model.hpp"

namespace faithkit::testing {

/// Central finite differences of score(model, ., target), entry by entry.
Eigen::MatrixXd fd_score_gradient(const ClassifierModel& model,
                                  const Eigen::MatrixXd& embeds, int target,
                                  double step = 1e-5);

/// Largest per-entry |a-b| / max(|b|, floor), with the floor scale-normalized
/// to the reference matrix: floor = max(1e-12, floor_fraction * max|b|).
double max_relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          double floor_fraction = 1e-3);

/// Random (model, input) pair whose ReLU pre-activations all sit at least
/// `margin` from zero (finite differencing never straddles a kink) and whose
/// score gradient is large enough for a 1e-5-step central difference to
/// resolve (|s_y| differences would otherwise drown in rounding noise).
std::pair<ClassifierModel, Eigen::MatrixXd> kink_free_case(
    int dim, int hidden, int n_tokens, std::uint64_t seed, double margin = 1e-3,
    double min_grad_scale = 5e-3);

/// Unweighted exact least squares on an exhaustive mask design (the lambda->0
/// LIME oracle); solved by QR, independent of the ridge path under test.
Eigen::VectorXd exhaustive_mask_least_squares(const std::vector<std::vector<int>>& masks,
                                              const Eigen::VectorXd& responses);

/// All 2^n binary masks over n tokens.
std::vector<std::vector<int>> all_masks(int n);

/// Closed-form Spearman for tie-free rank vectors: 1 - 6 sum d^2 / (n(n^2-1)).
double spearman_closed_form(const std::vector<int>& rank_positions_a,
                            const std::vector<int>& rank_positions_b);

/// Exhaustive contrast-example search over every combination of at most
/// max_substitutions synonym substitutions; mirrors the stability metric's
/// admissibility rule and returns the minimum Spearman value (1.0 when no
/// admissible contrast exists).
double exhaustive_stability(const ClassifierModel& model, const TokenSequence& x,
                            const AttributionMethod& method, const SynonymLexicon& lexicon,
                            const Vocabulary& vocab, const StabilityConfig& cfg);

} // namespace faithkit::testing

#endif
