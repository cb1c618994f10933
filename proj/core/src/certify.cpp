#include "faithkit/certify.hpp"

#include <cmath>

#include "faithkit/errors.hpp"

namespace faithkit {

namespace {

void affine_interval(const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                     const Eigen::VectorXd& in_lo, const Eigen::VectorXd& in_hi,
                     Eigen::VectorXd& out_lo, Eigen::VectorXd& out_hi) {
    const Eigen::MatrixXd pos = w.cwiseMax(0.0);
    const Eigen::MatrixXd neg = w.cwiseMin(0.0);
    out_lo = pos * in_lo + neg * in_hi + b;
    out_hi = pos * in_hi + neg * in_lo + b;
}

/// ReLU relaxation lines for one neuron with pre-activation range [lo, hi].
struct ReluLines {
    double upper_slope, upper_icept;
    double lower_slope, lower_icept;
};

ReluLines relu_lines(double lo, double hi) {
    if (hi <= 0.0) return {0.0, 0.0, 0.0, 0.0};
    if (lo >= 0.0) return {1.0, 0.0, 1.0, 0.0};
    const double chord = hi / (hi - lo);
    const double adaptive = hi >= -lo ? 1.0 : 0.0;
    return {chord, -chord * lo, adaptive, 0.0};
}

/// One linear function being propagated backward: coefficients over the
/// current layer plus an accumulated constant.
struct Backward {
    Eigen::VectorXd coeff;
    double offset;
};

/// Pulls a bound function back through a ReLU layer. `is_upper` selects which
/// relaxation line a positive coefficient takes.
void pull_through_relu(Backward& f, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi, bool is_upper) {
    for (int j = 0; j < f.coeff.size(); ++j) {
        const ReluLines lines = relu_lines(lo[j], hi[j]);
        const bool take_upper = is_upper ? f.coeff[j] >= 0.0 : f.coeff[j] < 0.0;
        const double slope = take_upper ? lines.upper_slope : lines.lower_slope;
        const double icept = take_upper ? lines.upper_icept : lines.lower_icept;
        f.offset += f.coeff[j] * icept;
        f.coeff[j] *= slope;
    }
}

void pull_through_affine(Backward& f, const Eigen::MatrixXd& w,
                         const Eigen::VectorXd& b) {
    f.offset += f.coeff.dot(b);
    f.coeff = (f.coeff.transpose() * w).transpose();
}

} // namespace

IntervalBounds ibp_bounds(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                          double delta) {
    if (delta < 0.0)
        throw DataError("ibp: negative radius");
    const int n = static_cast<int>(embeds.rows());

    IntervalBounds b;
    // First layer: each neuron is a linear functional of the full embedding
    // matrix whose only nonzero block is one w1 row, so its worst case over
    // the joint L2 ball is delta times that row norm.
    Eigen::MatrixXd center = (model.w1 * embeds.transpose()).transpose();
    center.rowwise() += model.b1.transpose();
    const Eigen::VectorXd row_norms = model.w1.rowwise().norm();
    b.z1_lo = center;
    b.z1_hi = center;
    b.z1_lo.rowwise() -= delta * row_norms.transpose();
    b.z1_hi.rowwise() += delta * row_norms.transpose();

    b.a1_lo = b.z1_lo.cwiseMax(0.0);
    b.a1_hi = b.z1_hi.cwiseMax(0.0);

    b.pooled_lo = b.a1_lo.colwise().sum().transpose() / static_cast<double>(n);
    b.pooled_hi = b.a1_hi.colwise().sum().transpose() / static_cast<double>(n);

    affine_interval(model.w2, model.b2, b.pooled_lo, b.pooled_hi, b.z2_lo, b.z2_hi);
    b.a2_lo = b.z2_lo.cwiseMax(0.0);
    b.a2_hi = b.z2_hi.cwiseMax(0.0);
    return b;
}

LinearBounds backward_bounds(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                             const CertifyConfig& cfg) {
    if (cfg.target < 0 || cfg.target >= model.num_classes())
        throw DimensionError("backward_bounds: target logit out of range");
    const IntervalBounds ibp = ibp_bounds(model, embeds, cfg.delta);
    const int n = static_cast<int>(embeds.rows());
    const int d = static_cast<int>(embeds.cols());

    Backward upper{model.w3.row(cfg.target).transpose(), model.b3[cfg.target]};
    Backward lower = upper;

    pull_through_relu(upper, ibp.z2_lo, ibp.z2_hi, /*is_upper=*/true);
    pull_through_relu(lower, ibp.z2_lo, ibp.z2_hi, /*is_upper=*/false);
    pull_through_affine(upper, model.w2, model.b2);
    pull_through_affine(lower, model.w2, model.b2);

    // Mean pooling spreads the same coefficients over every token with a
    // 1/n factor; ReLU relaxations below are token-specific.
    LinearBounds out;
    out.lower_w.resize(n, d);
    out.upper_w.resize(n, d);
    out.lower_b = lower.offset;
    out.upper_b = upper.offset;
    const Eigen::VectorXd upper_row = upper.coeff / static_cast<double>(n);
    const Eigen::VectorXd lower_row = lower.coeff / static_cast<double>(n);
    for (int i = 0; i < n; ++i) {
        Backward up{upper_row, 0.0};
        Backward lo{lower_row, 0.0};
        pull_through_relu(up, ibp.z1_lo.row(i).transpose(), ibp.z1_hi.row(i).transpose(),
                          /*is_upper=*/true);
        pull_through_relu(lo, ibp.z1_lo.row(i).transpose(), ibp.z1_hi.row(i).transpose(),
                          /*is_upper=*/false);
        pull_through_affine(up, model.w1, model.b1);
        pull_through_affine(lo, model.w1, model.b1);
        out.upper_w.row(i) = up.coeff.transpose();
        out.lower_w.row(i) = lo.coeff.transpose();
        out.upper_b += up.offset;
        out.lower_b += lo.offset;
    }
    return out;
}

std::pair<double, double> concretize(const LinearBounds& bounds,
                                     const Eigen::MatrixXd& embeds, double delta) {
    if (delta < 0.0)
        throw DataError("concretize: negative radius");
    const double lo_center = (bounds.lower_w.array() * embeds.array()).sum() + bounds.lower_b;
    const double hi_center = (bounds.upper_w.array() * embeds.array()).sum() + bounds.upper_b;
    return {lo_center - delta * bounds.lower_w.norm(),
            hi_center + delta * bounds.upper_w.norm()};
}

Attribution attribute_certify(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                              double delta) {
    CertifyConfig cfg;
    cfg.delta = delta;
    cfg.target = forward(model, embeds).predicted;
    const LinearBounds bounds = backward_bounds(model, embeds, cfg);
    return make_attribution("certify",
                            (bounds.lower_w.array() * embeds.array()).rowwise().sum());
}

} // namespace faithkit
