#ifndef FAITHKIT_ATTRIBUTION_HPP
#define FAITHKIT_ATTRIBUTION_HPP

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "faithkit/model.hpp"
#include "faithkit/rng.hpp"

namespace faithkit {

/// Per-token importance scores for one model decision, plus the induced
/// importance order (descending score, ties toward the lower token index).
struct Attribution {
    std::string method;
    Eigen::VectorXd scores;
    std::vector<int> rank;
};

/// Permutation of 0..n-1 sorting scores descending, stable in the index.
std::vector<int> rank_of(const Eigen::VectorXd& scores);

/// Fractional ranks (1 = highest score) with ties given their average rank;
/// this is the form Spearman correlation consumes.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& scores);

Attribution make_attribution(std::string method, Eigen::VectorXd scores);

/// L2 norm of the score gradient at each token.
Attribution attribute_vagrad(const ClassifierModel& model, const Eigen::MatrixXd& embeds);

/// Gradient-times-input at each token.
Attribution attribute_gradinp(const ClassifierModel& model, const Eigen::MatrixXd& embeds);

/// Path-integrated gradients from a reference point (default all zeros),
/// right-endpoint Riemann sum over `steps` points.
Attribution attribute_inggrad(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                              int steps = 50);
Attribution attribute_inggrad(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                              int steps, const Eigen::MatrixXd& baseline);

/// Rescale-rule multiplier propagation against a reference activation
/// (all-zero embeddings). Scores sum to s_y(x) - s_y(reference).
Attribution attribute_deeplift(const ClassifierModel& model, const Eigen::MatrixXd& embeds);
Attribution attribute_deeplift(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                               const Eigen::MatrixXd& baseline);

/// Score drop when one token's embedding row is zeroed.
Attribution attribute_occlusion(const ClassifierModel& model, const Eigen::MatrixXd& embeds);

struct LimeConfig {
    int n_samples = 200;
    double kernel_width = 0.25; // on cosine distance between mask vectors
    double ridge_lambda = 1e-3;
};

/// Local linear surrogate fitted to model outputs on masked inputs.
struct SurrogateModel {
    Eigen::VectorXd weights; // one per token
    double intercept = 0.0;
    double weighted_r2 = 0.0;
};

/// Weighted ridge regression of responses on binary mask features. The
/// intercept is not penalized. A singular system is retried with lambda
/// scaled tenfold, three times, before raising NumericError.
SurrogateModel fit_lime_surrogate(const std::vector<std::vector<int>>& masks,
                                  const Eigen::VectorXd& responses,
                                  const Eigen::VectorXd& sample_weights,
                                  double ridge_lambda);

Attribution attribute_lime(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                           const LimeConfig& cfg, Rng& rng);

struct PgdConfig {
    double epsilon = 0.5; // Frobenius radius over the whole embedding matrix
    int iterations = 50;
    double step = 0.1;    // defaults to epsilon / 5

    static PgdConfig with_epsilon(double eps, int iters = 50) {
        return PgdConfig{eps, iters, eps / 5.0};
    }
};

/// Projected gradient descent on s_y of the clean prediction: all iterations
/// run, the cumulative perturbation is rescaled back onto the epsilon ball,
/// and the prediction is free to stay unchanged. Returns the final iterate.
Eigen::MatrixXd pgd_descend(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                            const PgdConfig& cfg);

/// Per-token displacement norm of the PGD endpoint.
Attribution attribute_vapgd(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                            const PgdConfig& cfg);

/// Per-token displacement dotted with the input embedding.
Attribution attribute_pgdinp(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                             const PgdConfig& cfg);

/// Uniform [0,1) scores; the baseline every method must beat.
Attribution attribute_random(int n_tokens, Rng& rng);

} // namespace faithkit

#endif
