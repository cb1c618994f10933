#ifndef FAITHKIT_CERTIFY_HPP
#define FAITHKIT_CERTIFY_HPP

#include <Eigen/Dense>

#include <utility>

#include "faithkit/attribution.hpp"
#include "faithkit/model.hpp"

namespace faithkit {

struct CertifyConfig {
    double delta = 0.1; // Frobenius radius over the whole embedding matrix
    int target = 0;     // logit index to bound
};

/// Elementwise lower/upper intervals per layer, valid for every embedding
/// matrix within Frobenius distance delta of the input.
struct IntervalBounds {
    Eigen::MatrixXd z1_lo, z1_hi; // n x h
    Eigen::MatrixXd a1_lo, a1_hi;
    Eigen::VectorXd pooled_lo, pooled_hi;
    Eigen::VectorXd z2_lo, z2_hi;
    Eigen::VectorXd a2_lo, a2_hi;
};

/// Two linear functions of the embedding matrix bracketing the target logit
/// over the delta ball: sum(lower_w . e') + lower_b <= logit(e') <=
/// sum(upper_w . e') + upper_b.
struct LinearBounds {
    Eigen::MatrixXd lower_w; // n x d
    double lower_b = 0.0;
    Eigen::MatrixXd upper_w; // n x d
    double upper_b = 0.0;
};

/// Interval bound propagation. The first layer uses the dual-norm closed
/// form per neuron (center +- delta * ||w1 row||); later layers use
/// interval arithmetic through ReLU, mean pooling, and sign-split affines.
IntervalBounds ibp_bounds(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                          double delta);

/// Backward linear-coefficient propagation with per-neuron ReLU relaxations
/// chosen from the IBP pre-activation intervals: dead 0, stable identity,
/// unstable chord above and adaptive (area-heuristic) line below.
LinearBounds backward_bounds(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                             const CertifyConfig& cfg);

/// Worst-case values of the two linear functions over the delta ball.
std::pair<double, double> concretize(const LinearBounds& bounds,
                                     const Eigen::MatrixXd& embeds, double delta);

/// Importance of token i: the i-th row block of the lower coefficients
/// dotted with the token's embedding. Target is the clean predicted logit.
Attribution attribute_certify(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                              double delta);

} // namespace faithkit

#endif
