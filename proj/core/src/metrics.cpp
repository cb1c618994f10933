#include "faithkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "faithkit/errors.hpp"

namespace faithkit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int relevant_set_size(double fraction, int n_tokens) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw DataError("relevant set: fraction must lie in (0, 1]");
    const int size = static_cast<int>(std::llround(fraction * n_tokens));
    return std::min(n_tokens, std::max(1, size));
}

std::vector<int> relevant_set(const Attribution& attribution, double fraction) {
    const int n = static_cast<int>(attribution.rank.size());
    const int size = relevant_set_size(fraction, n);
    return {attribution.rank.begin(), attribution.rank.begin() + size};
}

namespace {

double padded_score(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                    const std::vector<int>& replaced, int target) {
    Eigen::MatrixXd work = embeds;
    for (int i : replaced) {
        if (i < 0 || i >= embeds.rows())
            throw DimensionError("removal metric: token index out of range");
        work.row(i) = model.embedding.row(kPadId);
    }
    return score(model, work, target);
}

} // namespace

double comprehensiveness_set(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                             const std::vector<int>& tokens) {
    const ForwardTrace t = forward(model, embeds);
    return t.probs[t.predicted] - padded_score(model, embeds, tokens, t.predicted);
}

double comprehensiveness(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                         const Attribution& attribution, double fraction) {
    return comprehensiveness_set(model, embeds, relevant_set(attribution, fraction));
}

double sufficiency_set(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                       const std::vector<int>& tokens) {
    const int n = static_cast<int>(embeds.rows());
    std::vector<char> keep(n, 0);
    for (int i : tokens) {
        if (i < 0 || i >= n)
            throw DimensionError("removal metric: token index out of range");
        keep[i] = 1;
    }
    std::vector<int> complement;
    for (int i = 0; i < n; ++i)
        if (!keep[i]) complement.push_back(i);
    const ForwardTrace t = forward(model, embeds);
    return t.probs[t.predicted] - padded_score(model, embeds, complement, t.predicted);
}

double sufficiency(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                   const Attribution& attribution, double fraction) {
    return sufficiency_set(model, embeds, relevant_set(attribution, fraction));
}

double removal_auc(const std::vector<double>& per_threshold_values) {
    if (per_threshold_values.empty())
        throw DataError("removal_auc: no values");
    double sum = 0.0;
    for (double v : per_threshold_values) sum += v;
    return sum / static_cast<double>(per_threshold_values.size());
}

namespace {

/// Attack inner loop with the unmasked pooled contribution precomputed:
/// only the masked rows move, so only their activations are recomputed.
class MaskedAttack {
public:
    MaskedAttack(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                 const std::vector<int>& mask)
        : model_(model), base_(embeds), mask_(mask),
          n_(static_cast<int>(embeds.rows())) {
        if (mask.empty())
            throw DataError("pgd_attack: empty token mask");
        std::vector<char> in_mask(static_cast<std::size_t>(n_), 0);
        for (int i : mask) {
            if (i < 0 || i >= n_)
                throw DimensionError("pgd_attack: mask index out of range");
            in_mask[static_cast<std::size_t>(i)] = 1;
        }
        rest_sum_ = Eigen::VectorXd::Zero(model.hidden_size());
        for (int i = 0; i < n_; ++i) {
            if (in_mask[static_cast<std::size_t>(i)]) continue;
            rest_sum_ += (model.w1 * embeds.row(i).transpose() + model.b1).cwiseMax(0.0);
        }
        clean_prediction_ = forward(model, embeds).predicted;
    }

    int clean_prediction() const { return clean_prediction_; }

    struct Eval {
        int predicted;
        Eigen::VectorXd probs;
        // per masked row: z1 pre-activations, for the backward pass
        Eigen::MatrixXd z1_masked;
        Eigen::VectorXd z2;
    };

    Eval evaluate(const Eigen::MatrixXd& masked_rows) const {
        Eval e;
        e.z1_masked.resize(static_cast<int>(mask_.size()), model_.hidden_size());
        Eigen::VectorXd sum = rest_sum_;
        for (std::size_t k = 0; k < mask_.size(); ++k) {
            const Eigen::VectorXd z1 =
                model_.w1 * masked_rows.row(static_cast<int>(k)).transpose() + model_.b1;
            e.z1_masked.row(static_cast<int>(k)) = z1.transpose();
            sum += z1.cwiseMax(0.0);
        }
        const Eigen::VectorXd pooled = sum / static_cast<double>(n_);
        e.z2 = model_.w2 * pooled + model_.b2;
        const Eigen::VectorXd logits = model_.w3 * e.z2.cwiseMax(0.0) + model_.b3;
        const double m = logits.maxCoeff();
        Eigen::VectorXd ex = (logits.array() - m).exp();
        e.probs = ex / ex.sum();
        e.predicted = 0;
        for (int c = 1; c < logits.size(); ++c)
            if (logits[c] > logits[e.predicted]) e.predicted = c;
        return e;
    }

    /// Gradient of s_target w.r.t. the masked rows only.
    Eigen::MatrixXd gradient(const Eval& e, int target) const {
        Eigen::VectorXd g_logits = -e.probs[target] * e.probs;
        g_logits[target] += e.probs[target];
        const Eigen::VectorXd g_a2 = model_.w3.transpose() * g_logits;
        const Eigen::VectorXd g_z2 =
            (e.z2.array() > 0.0).select(g_a2, Eigen::VectorXd::Zero(g_a2.size()));
        const Eigen::VectorXd g_a1 =
            (model_.w2.transpose() * g_z2) / static_cast<double>(n_);
        Eigen::MatrixXd g(static_cast<int>(mask_.size()), model_.embedding_dim());
        for (std::size_t k = 0; k < mask_.size(); ++k) {
            const Eigen::VectorXd g_z1 =
                (e.z1_masked.row(static_cast<int>(k)).transpose().array() > 0.0)
                    .select(g_a1, Eigen::VectorXd::Zero(g_a1.size()));
            g.row(static_cast<int>(k)) = (model_.w1.transpose() * g_z1).transpose();
        }
        return g;
    }

    Eigen::MatrixXd base_masked_rows() const {
        Eigen::MatrixXd rows(static_cast<int>(mask_.size()), base_.cols());
        for (std::size_t k = 0; k < mask_.size(); ++k)
            rows.row(static_cast<int>(k)) = base_.row(mask_[k]);
        return rows;
    }

    Eigen::MatrixXd full_embeddings(const Eigen::MatrixXd& masked_rows) const {
        Eigen::MatrixXd full = base_;
        for (std::size_t k = 0; k < mask_.size(); ++k)
            full.row(mask_[k]) = masked_rows.row(static_cast<int>(k));
        return full;
    }

private:
    const ClassifierModel& model_;
    const Eigen::MatrixXd& base_;
    std::vector<int> mask_;
    int n_;
    Eigen::VectorXd rest_sum_;
    int clean_prediction_ = 0;
};

} // namespace

AttackResult pgd_attack(const ClassifierModel& model, const Eigen::MatrixXd& embeds,
                        const std::vector<int>& mask, double epsilon,
                        const AttackConfig& cfg) {
    if (epsilon < 0.0)
        throw DataError("pgd_attack: negative radius");
    if (cfg.iterations < 1 || cfg.step <= 0.0)
        throw DataError("pgd_attack: invalid attack configuration");

    const MaskedAttack attack(model, embeds, mask);
    const int clean = attack.clean_prediction();
    const Eigen::MatrixXd base_rows = attack.base_masked_rows();

    Eigen::MatrixXd rows = base_rows;
    AttackResult result;
    MaskedAttack::Eval e = attack.evaluate(rows);
    for (int it = 0; it < cfg.iterations; ++it) {
        rows -= cfg.step * attack.gradient(e, clean);
        Eigen::MatrixXd delta = rows - base_rows;
        const double norm = delta.norm();
        if (norm > epsilon)
            rows = base_rows + delta * (epsilon / norm);
        e = attack.evaluate(rows);
        if (e.predicted != clean) {
            result.success = true;
            result.adversarial = attack.full_embeddings(rows);
            return result;
        }
    }
    result.adversarial = attack.full_embeddings(rows);
    return result;
}

SensitivityRadius sensitivity_radius_set(const ClassifierModel& model,
                                         const Eigen::MatrixXd& embeds,
                                         const std::vector<int>& mask,
                                         const AttackConfig& cfg) {
    constexpr double kRadiusCap = 1024.0; // 2^10
    SensitivityRadius out;

    double lower = 0.0;
    double upper = 1.0;
    bool found = false;
    while (upper <= kRadiusCap) {
        if (pgd_attack(model, embeds, mask, upper, cfg).success) {
            found = true;
            break;
        }
        lower = upper;
        upper *= 2.0;
    }
    if (!found) {
        out.radius = kInf;
        out.largest_failing = lower;
        out.succeeded = false;
        return out;
    }

    for (int round = 0; round < 20; ++round) {
        const double mid = 0.5 * (lower + upper);
        if (pgd_attack(model, embeds, mask, mid, cfg).success)
            upper = mid;
        else
            lower = mid;
    }
    out.radius = upper;
    out.largest_failing = lower;
    out.succeeded = true;
    return out;
}

SensitivityRadius sensitivity_radius(const ClassifierModel& model,
                                     const Eigen::MatrixXd& embeds,
                                     const Attribution& attribution, double fraction,
                                     const AttackConfig& cfg) {
    return sensitivity_radius_set(model, embeds, relevant_set(attribution, fraction), cfg);
}

SensitivityResult sensitivity_auc(const ClassifierModel& model,
                                  const Eigen::MatrixXd& embeds,
                                  const Attribution& attribution,
                                  const std::vector<double>& thresholds,
                                  const AttackConfig& cfg) {
    SensitivityResult result;
    double sum = 0.0;
    int finite = 0;
    for (double q : thresholds) {
        const SensitivityRadius r = sensitivity_radius(model, embeds, attribution, q, cfg);
        result.radii.push_back(r.succeeded ? r.radius : kInf);
        result.attack_success.push_back(r.succeeded);
        if (r.succeeded) {
            sum += r.radius;
            ++finite;
        } else {
            ++result.failed_thresholds;
        }
    }
    result.defined = finite > 0;
    result.auc = result.defined ? sum / finite : kInf;
    return result;
}

double spearman(const Eigen::VectorXd& ranks_a, const Eigen::VectorXd& ranks_b) {
    if (ranks_a.size() != ranks_b.size())
        throw DimensionError("spearman: length mismatch");
    const int n = static_cast<int>(ranks_a.size());
    if (n < 2)
        throw DataError("spearman: undefined for fewer than two items");

    const Eigen::VectorXd da = ranks_a.array() - ranks_a.mean();
    const Eigen::VectorXd db = ranks_b.array() - ranks_b.mean();
    const double va = da.squaredNorm();
    const double vb = db.squaredNorm();
    if (va == 0.0 && vb == 0.0) return 1.0;
    if (va == 0.0 || vb == 0.0) return 0.0;
    return da.dot(db) / std::sqrt(va * vb);
}

double stability(const ClassifierModel& model, const TokenSequence& x,
                 const AttributionMethod& method, const SynonymLexicon& lexicon,
                 const Vocabulary& vocab, const StabilityConfig& cfg,
                 const Attribution* precomputed_base) {
    if (cfg.max_substitutions < 0 || cfg.tau < 0.0 || cfg.tau > 1.0)
        throw DataError("stability: invalid configuration");
    if (cfg.max_substitutions == 0 || lexicon.empty())
        return 1.0;

    const Eigen::MatrixXd base_embeds = model.embed(x);
    const ForwardTrace base_trace = forward(model, base_embeds);
    const int y = base_trace.predicted;
    const double base_score = base_trace.probs[y];

    const Attribution base_attr = precomputed_base ? *precomputed_base : method(x);
    const Eigen::VectorXd base_ranks = average_ranks(base_attr.scores);

    TokenSequence best = x;
    double best_corr = 1.0;
    int accepted = 0;

    for (int pos : base_attr.rank) {
        if (accepted >= cfg.max_substitutions) break;
        const std::vector<std::string>& synonyms = lexicon.lookup(x.tokens[pos]);
        if (synonyms.empty()) continue;

        bool improved = false;
        TokenSequence chosen;
        double chosen_corr = best_corr;
        for (const std::string& synonym : synonyms) {
            TokenSequence candidate = best;
            candidate.tokens[pos] = synonym;
            candidate.ids[pos] = vocab.lookup(synonym);

            const double cand_score = score(model, model.embed(candidate), y);
            if (std::abs(base_score - cand_score) > cfg.tau) continue;

            const Attribution cand_attr = method(candidate);
            const double corr =
                spearman(base_ranks, average_ranks(cand_attr.scores));
            if (corr < chosen_corr) {
                chosen = candidate;
                chosen_corr = corr;
                improved = true;
            }
        }
        if (improved) {
            best = std::move(chosen);
            best_corr = chosen_corr;
            ++accepted;
        }
    }
    return best_corr;
}

InterpolationCurve interpolation_curve(const ClassifierModel& model,
                                       const Eigen::MatrixXd& embeds,
                                       const Attribution& attribution,
                                       InterpolationMetric metric, Rng& rng,
                                       const AttackConfig& attack_cfg) {
    const int n = static_cast<int>(embeds.rows());
    constexpr int kSetSize = 4;
    if (n < 2 * kSetSize)
        throw DataError("interpolation: need at least 8 tokens");

    const std::vector<int> top(attribution.rank.begin(),
                               attribution.rank.begin() + kSetSize);
    std::vector<char> in_top(static_cast<std::size_t>(n), 0);
    for (int i : top) in_top[static_cast<std::size_t>(i)] = 1;
    std::vector<int> outside;
    for (int i = 0; i < n; ++i)
        if (!in_top[static_cast<std::size_t>(i)]) outside.push_back(i);

    // Distinct random replacements, drawn once.
    std::vector<int> replacements;
    for (int k = 0; k < kSetSize; ++k) {
        const std::uint64_t pick = rng.below(outside.size() - k);
        replacements.push_back(outside[pick]);
        std::swap(outside[pick], outside[outside.size() - 1 - k]);
    }

    auto measure = [&](const std::vector<int>& set) {
        if (metric == InterpolationMetric::kComprehensiveness)
            return comprehensiveness_set(model, embeds, set);
        const SensitivityRadius r = sensitivity_radius_set(model, embeds, set, attack_cfg);
        return r.succeeded ? r.radius : kInf;
    };

    std::array<double, 5> m{};
    for (int i = 0; i <= kSetSize; ++i) {
        // Keep the (4 - i) most important members, swap in i replacements
        // for the least important ones.
        std::vector<int> set(top.begin(), top.begin() + (kSetSize - i));
        set.insert(set.end(), replacements.begin(), replacements.begin() + i);
        m[i] = measure(set);
    }

    InterpolationCurve curve;
    const double denom = std::abs(m[0] - m[4]);
    bool finite = true;
    for (double v : m) finite = finite && std::isfinite(v);
    if (!finite || denom < 1e-12) {
        curve.degenerate = true;
        return curve;
    }
    for (int i = 0; i <= kSetSize; ++i)
        curve.values[i] = std::abs(m[0] - m[i]) / denom;
    return curve;
}

SignificanceResult t_test(const std::vector<double>& scores_a,
                          const std::vector<double>& scores_b) {
    const std::size_t na = scores_a.size();
    const std::size_t nb = scores_b.size();
    if (na < 2 || nb < 2)
        throw DataError("t_test: each sample needs at least two values");

    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto sum_sq_dev = [](const std::vector<double>& v, double m) {
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s;
    };

    const double ma = mean(scores_a);
    const double mb = mean(scores_b);
    const double dof = static_cast<double>(na + nb - 2);
    const double pooled_var = (sum_sq_dev(scores_a, ma) + sum_sq_dev(scores_b, mb)) / dof;

    SignificanceResult out;
    if (pooled_var == 0.0) {
        if (ma == mb) {
            out.t = 0.0;
            out.p = 1.0;
        } else {
            out.t = ma > mb ? kInf : -kInf;
            out.p = 0.0;
            out.significant_90 = true;
            out.significant_95 = true;
        }
        return out;
    }

    const double se = std::sqrt(pooled_var * (1.0 / na + 1.0 / nb));
    out.t = (ma - mb) / se;
    const boost::math::students_t dist(dof);
    out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t)));
    out.significant_90 = out.p < 0.10;
    out.significant_95 = out.p < 0.05;
    return out;
}

} // namespace faithkit
