#include "faithkit/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faithkit/errors.hpp"

namespace faithkit {

std::vector<int> rank_of(const Eigen::VectorXd& scores) {
    std::vector<int> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&scores](int a, int b) {
        return scores[a] > scores[b];
    });
    return order;
}

Eigen::VectorXd average_ranks(const Eigen::VectorXd& scores) {
    const std::vector<int> order = rank_of(scores);
    const int n = static_cast<int>(order.size());
    Eigen::VectorXd ranks(n);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = 0.5 * (i + j) + 1.0; // ranks are 1-based
        for (int k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

Attribution make_attribution(std::string method, Eigen::VectorXd scores) {
    if (!scores.allFinite())
        throw NumericError("attribution: non-finite score from method " + method);
    Attribution a;
    a.method = std::move(method);
    a.rank = rank_of(scores);
    a.scores = std::move(scores);
    return a;
}

Attribution attribute_vagrad(const ClassifierModel& model, const Eigen::MatrixXd& embeds) {
    const ForwardTrace t = forward(model, embeds);
    const Eigen::MatrixXd g = grad_embeddings(model, embeds, t.predicted);
    return make_attribution("vagrad", g.rowwise().norm());
}

Attribution attribute_gradinp(const ClassifierModel& model, const Eigen::MatrixXd& embeds) {
    const ForwardTrace t = forward(model, embeds);
    const Eigen::MatrixXd g = grad_embeddings(model, embeds, t.predicted);
    return make_attribution("gradinp", (g.array() * embeds.array()).rowwise().sum());
}

Attribution attribute_inggrad(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                              int steps) {
    return attribute_inggrad(model, embeds, steps,
                             Eigen::MatrixXd::Zero(embeds.rows(), embeds.cols()));
}

Attribution attribute_inggrad(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                              int steps, const Eigen::MatrixXd& baseline) {
    if (steps < 1)
        throw DataError("inggrad: need at least one integration step");
    if (baseline.rows() != embeds.rows() || baseline.cols() != embeds.cols())
        throw DimensionError("inggrad: baseline shape disagrees with input");
    const int target = forward(model, embeds).predicted;
    const Eigen::MatrixXd delta = embeds - baseline;
    Eigen::MatrixXd avg_grad = Eigen::MatrixXd::Zero(embeds.rows(), embeds.cols());
    for (int j = 1; j <= steps; ++j) {
        const double alpha = static_cast<double>(j) / static_cast<double>(steps);
        avg_grad += grad_embeddings(model, baseline + alpha * delta, target);
    }
    avg_grad /= static_cast<double>(steps);
    return make_attribution("inggrad", (avg_grad.array() * delta.array()).rowwise().sum());
}

Attribution attribute_deeplift(const ClassifierModel& model, const Eigen::MatrixXd& embeds) {
    return attribute_deeplift(model, embeds,
                              Eigen::MatrixXd::Zero(embeds.rows(), embeds.cols()));
}

Attribution attribute_deeplift(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                               const Eigen::MatrixXd& baseline) {
    if (baseline.rows() != embeds.rows() || baseline.cols() != embeds.cols())
        throw DimensionError("deeplift: baseline shape disagrees with input");
    constexpr double kDeltaFloor = 1e-9;
    const ForwardTrace t = forward(model, embeds);
    const ForwardTrace ref = forward(model, baseline);
    const int y = t.predicted;
    const int other = 1 - y;
    const int n = static_cast<int>(embeds.rows());

    // Binary softmax is exactly a sigmoid of the logit margin, so the output
    // nonlinearity reduces to one scalar Rescale multiplier.
    const double margin = t.logits[y] - t.logits[other];
    const double margin_ref = ref.logits[y] - ref.logits[other];
    const double s = t.probs[y];
    const double s_ref = ref.probs[y];
    double m_sigmoid;
    if (std::abs(margin - margin_ref) < kDeltaFloor)
        m_sigmoid = s * (1.0 - s); // local gradient fallback
    else
        m_sigmoid = (s - s_ref) / (margin - margin_ref);

    // Multipliers over a2 through the margin's affine map.
    Eigen::VectorXd m_a2 =
        m_sigmoid * (model.w3.row(y) - model.w3.row(other)).transpose();

    // ReLU at layer 2 (Rescale).
    Eigen::VectorXd m_z2(m_a2.size());
    for (int k = 0; k < m_a2.size(); ++k) {
        const double dz = t.z2[k] - ref.z2[k];
        const double slope = std::abs(dz) < kDeltaFloor
                                 ? (t.z2[k] > 0.0 ? 1.0 : 0.0)
                                 : (t.a2[k] - ref.a2[k]) / dz;
        m_z2[k] = m_a2[k] * slope;
    }

    Eigen::VectorXd m_pooled = model.w2.transpose() * m_z2;
    Eigen::VectorXd m_a1_row = m_pooled / static_cast<double>(n);

    Eigen::VectorXd scores(n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd m_z1(m_a1_row.size());
        for (int k = 0; k < m_a1_row.size(); ++k) {
            const double dz = t.z1(i, k) - ref.z1(i, k);
            const double slope = std::abs(dz) < kDeltaFloor
                                     ? (t.z1(i, k) > 0.0 ? 1.0 : 0.0)
                                     : (t.a1(i, k) - ref.a1(i, k)) / dz;
            m_z1[k] = m_a1_row[k] * slope;
        }
        const Eigen::VectorXd m_embed = model.w1.transpose() * m_z1;
        scores[i] = m_embed.dot((embeds.row(i) - baseline.row(i)).transpose());
    }
    return make_attribution("deeplift", std::move(scores));
}

Attribution attribute_occlusion(const ClassifierModel& model, const Eigen::MatrixXd& embeds) {
    const ForwardTrace t = forward(model, embeds);
    const double base = t.probs[t.predicted];
    const int n = static_cast<int>(embeds.rows());
    Eigen::VectorXd scores(n);
    Eigen::MatrixXd work = embeds;
    for (int i = 0; i < n; ++i) {
        const Eigen::RowVectorXd saved = work.row(i);
        work.row(i).setZero();
        scores[i] = base - score(model, work, t.predicted);
        work.row(i) = saved;
    }
    return make_attribution("occlusion", std::move(scores));
}

SurrogateModel fit_lime_surrogate(const std::vector<std::vector<int>>& masks,
                                  const Eigen::VectorXd& responses,
                                  const Eigen::VectorXd& sample_weights,
                                  double ridge_lambda) {
    const int m = static_cast<int>(masks.size());
    if (m == 0 || responses.size() != m || sample_weights.size() != m)
        throw DimensionError("lime: masks, responses, and weights disagree");
    const int n = static_cast<int>(masks.front().size());

    Eigen::MatrixXd design(m, n + 1);
    for (int r = 0; r < m; ++r) {
        if (static_cast<int>(masks[r].size()) != n)
            throw DimensionError("lime: ragged mask list");
        design(r, 0) = 1.0;
        for (int c = 0; c < n; ++c) design(r, c + 1) = masks[r][c] ? 1.0 : 0.0;
    }

    const Eigen::MatrixXd weighted = sample_weights.asDiagonal() * design;
    const Eigen::MatrixXd gram = design.transpose() * weighted;
    const Eigen::VectorXd rhs = weighted.transpose() * responses;

    double lambda = ridge_lambda;
    Eigen::VectorXd beta;
    bool solved = false;
    for (int attempt = 0; attempt < 4; ++attempt) {
        Eigen::MatrixXd system = gram;
        system.diagonal().tail(n).array() += lambda; // intercept unpenalized
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
        beta = ldlt.solve(rhs);
        const double residual = (system * beta - rhs).norm();
        if (ldlt.info() == Eigen::Success && beta.allFinite() &&
            residual <= 1e-8 * (rhs.norm() + 1.0)) {
            solved = true;
            break;
        }
        lambda *= 10.0;
    }
    if (!solved)
        throw NumericError("lime: weighted ridge system is singular");

    SurrogateModel sm;
    sm.intercept = beta[0];
    sm.weights = beta.tail(n);

    const Eigen::VectorXd fitted = design * beta;
    const double wsum = sample_weights.sum();
    if (wsum > 0.0) {
        const double mean = sample_weights.dot(responses) / wsum;
        const double ss_tot =
            (sample_weights.array() * (responses.array() - mean).square()).sum();
        const double ss_res =
            (sample_weights.array() * (responses - fitted).array().square()).sum();
        sm.weighted_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    }
    return sm;
}

Attribution attribute_lime(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                           const LimeConfig& cfg, Rng& rng) {
    const int n = static_cast<int>(embeds.rows());
    if (cfg.n_samples < n + 1)
        throw DataError("lime: need at least n+1 samples");
    const ForwardTrace t = forward(model, embeds);
    const int target = t.predicted;

    std::vector<std::vector<int>> masks;
    masks.reserve(static_cast<std::size_t>(cfg.n_samples));
    masks.emplace_back(n, 1); // the intact input is always in the sample
    for (int s = 1; s < cfg.n_samples; ++s) {
        std::vector<int> mask(n);
        for (int i = 0; i < n; ++i) mask[i] = rng.uniform01() < 0.5 ? 1 : 0;
        masks.push_back(std::move(mask));
    }

    Eigen::VectorXd responses(cfg.n_samples);
    Eigen::VectorXd weights(cfg.n_samples);
    Eigen::MatrixXd work(embeds.rows(), embeds.cols());
    for (int s = 0; s < cfg.n_samples; ++s) {
        int kept = 0;
        for (int i = 0; i < n; ++i) {
            if (masks[s][i]) {
                work.row(i) = embeds.row(i);
                ++kept;
            } else {
                work.row(i).setZero();
            }
        }
        responses[s] = score(model, work, target);
        // Cosine distance between the mask and the all-ones mask is
        // 1 - sqrt(kept / n); the empty mask is treated as distance 1.
        const double distance =
            kept == 0 ? 1.0 : 1.0 - std::sqrt(static_cast<double>(kept) / n);
        weights[s] = std::exp(-(distance * distance) /
                              (cfg.kernel_width * cfg.kernel_width));
    }

    SurrogateModel sm = fit_lime_surrogate(masks, responses, weights, cfg.ridge_lambda);
    return make_attribution("lime", sm.weights);
}

namespace {

/// Cumulative PGD perturbation, kept separately from the iterate so the
/// projection and the per-token displacements carry no cancellation error.
Eigen::MatrixXd pgd_delta(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                          const PgdConfig& cfg) {
    if (cfg.epsilon < 0.0 || cfg.iterations < 1 || cfg.step <= 0.0)
        throw DataError("pgd: invalid configuration");
    const int target = forward(model, embeds).predicted;
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(embeds.rows(), embeds.cols());
    for (int j = 0; j < cfg.iterations; ++j) {
        const Eigen::MatrixXd g = grad_embeddings(model, embeds + delta, target);
        delta -= cfg.step * g;
        const double norm = delta.norm();
        if (norm > cfg.epsilon) delta *= cfg.epsilon / norm;
    }
    return delta;
}

} // namespace

Eigen::MatrixXd pgd_descend(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                            const PgdConfig& cfg) {
    return embeds + pgd_delta(model, embeds, cfg);
}

Attribution attribute_vapgd(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                            const PgdConfig& cfg) {
    return make_attribution("vapgd",
                            pgd_delta(model, embeds, cfg).rowwise().norm());
}

Attribution attribute_pgdinp(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                             const PgdConfig& cfg) {
    const Eigen::MatrixXd delta = pgd_delta(model, embeds, cfg);
    return make_attribution("pgdinp",
                            (-delta.array() * embeds.array()).rowwise().sum());
}

Attribution attribute_random(int n_tokens, Rng& rng) {
    if (n_tokens < 1)
        throw DataError("random attribution: need at least one token");
    Eigen::VectorXd scores(n_tokens);
    for (int i = 0; i < n_tokens; ++i) scores[i] = rng.uniform01();
    return make_attribution("random", std::move(scores));
}

} // namespace faithkit
