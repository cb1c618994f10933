#ifndef FAITHKIT_TESTS_FIXTURES_HPP
#define FAITHKIT_TESTS_FIXTURES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "faithkit/attribution.hpp"
#include "faithkit/corpus.hpp"
#include "faithkit/model.hpp"

namespace faithkit::testing {

/// Dense random model, PAD row zeroed, biases drawn like the weights.
ClassifierModel random_model(int vocab, int dim, int hidden, std::uint64_t seed,
                             double scale = 0.5);

Eigen::MatrixXd random_embeds(int n, int dim, std::uint64_t seed, double lo = -1.0,
                              double hi = 1.0);

/// Raises b1/b2 until every ReLU pre-activation stays >= margin for every
/// given input, everywhere on the segment toward the zero baseline, any
/// single row zeroed, and across the whole radius ball. The model is exactly
/// affine there.
void force_active(ClassifierModel& model, const std::vector<Eigen::MatrixXd>& inputs,
                  double radius, double margin = 1.0);

/// The margin logit(0) - logit(1) of an all-active model is
/// (1/n) sum_i u . e_i + c; returns u and c for a given token count.
Eigen::VectorXd active_margin_weight(const ClassifierModel& model);
double active_margin_offset(const ClassifierModel& model, int n_tokens);

/// Shifts b3[0] so the all-active margin at `embeds` equals `target_margin`.
void set_margin(ClassifierModel& model, const Eigen::MatrixXd& embeds,
                double target_margin);

/// All-active model whose logit margin varies by at most ~1e-3 over the
/// inputs touched by the attribution methods (occlusion rows, reference
/// paths). The sigmoid is linear there to second order, so gradient-,
/// reference-, and perturbation-based scores collapse onto the same
/// per-token value u . e_i up to tiny curvature terms.
struct TinyMarginFixture {
    ClassifierModel model;
    Eigen::MatrixXd embeds;
    Eigen::VectorXd margin_weight; // u: margin(E) = (1/n) sum_i u . e_i + const
};
TinyMarginFixture tiny_margin_fixture(int n, int dim, int hidden, std::uint64_t seed);

/// Saturated-sigmoid model: the margin at the input is `start_margin` (so the
/// score gradient is ~sigma'(start_margin) ~ 0) but the margin slope is steep
/// enough that a default PGD run escapes the plateau within its iteration
/// budget. Linear (all ReLUs active) across the working ball.
struct SaturationFixture {
    ClassifierModel model;
    Eigen::MatrixXd embeds;
    Eigen::VectorXd margin_weight;
};
SaturationFixture saturation_fixture(std::uint64_t seed, double start_margin = 22.0,
                                     double weight_norm = 3e5);

/// Nine tokens whose margin contributions are strictly ordered (0.4, 0.3,
/// 0.2, 0.1 scaled for the top four, near-zero for the rest); the bundled
/// attribution mirrors those contributions. The interpolation curve over the
/// comprehensiveness metric is strictly increasing here.
struct AdditiveCase {
    ClassifierModel model;
    Eigen::MatrixXd embeds;
    Attribution attribution;
};
AdditiveCase additive_case(std::uint64_t seed);

/// Synthetic sentiment corpus written to `dir`: signal words with strongly
/// biased embedding coordinates decide the label among neutral filler.
struct SyntheticCorpus {
    std::string train_tsv;
    std::string dev_tsv;
    std::string eval_tsv;
    std::string embeddings;
    std::string synonyms;
};

SyntheticCorpus make_synthetic_corpus(const std::string& dir, int train_n, int dev_n,
                                      int eval_n, std::uint64_t seed);

/// Unique writable scratch directory under the build tree.
std::string scratch_dir(const std::string& name);

} // namespace faithkit::testing

#endif
