#include "support/fixtures.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "faithkit/rng.hpp"

namespace faithkit::testing {

ClassifierModel random_model(int vocab, int dim, int hidden, std::uint64_t seed,
                             double scale) {
    Rng rng(seed);
    auto fill = [&rng, scale](Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                m(r, c) = rng.uniform(-scale, scale);
    };
    ClassifierModel m;
    m.embedding.resize(vocab, dim);
    fill(m.embedding);
    m.embedding.row(kPadId).setZero();
    m.w1.resize(hidden, dim);
    fill(m.w1);
    m.b1.resize(hidden);
    for (int i = 0; i < hidden; ++i) m.b1[i] = rng.uniform(-scale, scale);
    m.w2.resize(hidden, hidden);
    fill(m.w2);
    m.b2.resize(hidden);
    for (int i = 0; i < hidden; ++i) m.b2[i] = rng.uniform(-scale, scale);
    m.w3.resize(2, hidden);
    fill(m.w3);
    m.b3.resize(2);
    m.b3[0] = rng.uniform(-scale, scale);
    m.b3[1] = rng.uniform(-scale, scale);
    return m;
}

Eigen::MatrixXd random_embeds(int n, int dim, std::uint64_t seed, double lo, double hi) {
    Rng rng(seed);
    Eigen::MatrixXd e(n, dim);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < dim; ++c) e(r, c) = rng.uniform(lo, hi);
    return e;
}

void force_active(ClassifierModel& model, const std::vector<Eigen::MatrixXd>& inputs,
                  double radius, double margin) {
    const int h = model.hidden_size();
    const Eigen::VectorXd row_norms = model.w1.rowwise().norm();

    // Layer 1: cover every token row, its segment toward zero, and the ball.
    Eigen::VectorXd min_z1_no_bias = Eigen::VectorXd::Zero(h); // zero baseline included
    for (const auto& e : inputs) {
        const Eigen::MatrixXd z = model.w1 * e.transpose(); // h x n
        min_z1_no_bias = min_z1_no_bias.cwiseMin(z.rowwise().minCoeff());
    }
    for (int k = 0; k < h; ++k) {
        const double need = margin + radius * row_norms[k] - min_z1_no_bias[k];
        if (model.b1[k] < need) model.b1[k] = need;
    }

    // Layer 2: interval arithmetic over every input's ball.
    Eigen::VectorXd p_lo, p_hi;
    bool first = true;
    for (const auto& e : inputs) {
        const int n = static_cast<int>(e.rows());
        Eigen::MatrixXd z = (model.w1 * e.transpose()).transpose();
        z.rowwise() += model.b1.transpose();
        Eigen::MatrixXd z_lo = z, z_hi = z;
        z_lo.rowwise() -= radius * row_norms.transpose();
        z_hi.rowwise() += radius * row_norms.transpose();
        // Token rows may be zeroed (PAD / occlusion / baseline), so each
        // per-token activation can also be anywhere between 0 and its
        // bias-only value; widen accordingly.
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < h; ++k) {
                z_lo(i, k) = std::min({z_lo(i, k), model.b1[k] - radius * row_norms[k], 0.0});
                z_hi(i, k) = std::max(z_hi(i, k), model.b1[k] + radius * row_norms[k]);
            }
        const Eigen::VectorXd lo =
            z_lo.cwiseMax(0.0).colwise().sum().transpose() / static_cast<double>(n);
        const Eigen::VectorXd hi =
            z_hi.cwiseMax(0.0).colwise().sum().transpose() / static_cast<double>(n);
        if (first) {
            p_lo = lo;
            p_hi = hi;
            first = false;
        } else {
            p_lo = p_lo.cwiseMin(lo);
            p_hi = p_hi.cwiseMax(hi);
        }
    }
    p_lo = p_lo.cwiseMin(0.0); // all-zero input pools to relu(b1)/1 at worst; keep 0 floor

    const Eigen::MatrixXd w2_pos = model.w2.cwiseMax(0.0);
    const Eigen::MatrixXd w2_neg = model.w2.cwiseMin(0.0);
    const Eigen::VectorXd z2_lo = w2_pos * p_lo + w2_neg * p_hi + model.b2;
    for (int j = 0; j < h; ++j) {
        if (z2_lo[j] < margin) model.b2[j] += margin - z2_lo[j];
    }
}

Eigen::VectorXd active_margin_weight(const ClassifierModel& model) {
    const Eigen::VectorXd v =
        (model.w3.row(0) - model.w3.row(1)).transpose(); // over a2
    return model.w1.transpose() * (model.w2.transpose() * v);
}

double active_margin_offset(const ClassifierModel& model, int n_tokens) {
    (void)n_tokens;
    const Eigen::VectorXd v = (model.w3.row(0) - model.w3.row(1)).transpose();
    // pooled = (1/n) sum (w1 e_i + b1) -> the b1 part pools to b1 exactly.
    return v.dot(model.w2 * model.b1 + model.b2) + model.b3[0] - model.b3[1];
}

void set_margin(ClassifierModel& model, const Eigen::MatrixXd& embeds,
                double target_margin) {
    const int n = static_cast<int>(embeds.rows());
    const Eigen::VectorXd u = active_margin_weight(model);
    double m = active_margin_offset(model, n);
    for (int i = 0; i < n; ++i)
        m += u.dot(embeds.row(i).transpose()) / static_cast<double>(n);
    model.b3[0] += target_margin - m;
}

TinyMarginFixture tiny_margin_fixture(int n, int dim, int hidden, std::uint64_t seed) {
    TinyMarginFixture f;
    f.model = random_model(n + 4, dim, hidden, seed);
    f.embeds = random_embeds(n, dim, seed + 1);
    force_active(f.model, {f.embeds}, /*radius=*/1.0);

    const Eigen::VectorXd u0 = active_margin_weight(f.model);
    double max_contribution = 1e-12;
    for (int i = 0; i < n; ++i)
        max_contribution =
            std::max(max_contribution, std::abs(u0.dot(f.embeds.row(i).transpose())));
    const double tau = 2e-4 / max_contribution;
    f.model.w3 *= tau;
    set_margin(f.model, f.embeds, 1e-4);
    f.margin_weight = tau * u0;
    return f;
}

SaturationFixture saturation_fixture(std::uint64_t seed, double start_margin,
                                     double weight_norm) {
    SaturationFixture f;
    const int n = 3, dim = 4, hidden = 6;
    f.model = random_model(n + 4, dim, hidden, seed);
    f.embeds = random_embeds(n, dim, seed + 1);
    force_active(f.model, {f.embeds}, /*radius=*/0.8);

    const Eigen::VectorXd u0 = active_margin_weight(f.model);
    f.model.w3 *= weight_norm / u0.norm();
    set_margin(f.model, f.embeds, start_margin);
    f.margin_weight = (weight_norm / u0.norm()) * u0;
    return f;
}

AdditiveCase additive_case(std::uint64_t seed) {
    AdditiveCase c;
    const int n = 9, dim = 6, hidden = 8;
    c.model = random_model(n + 4, dim, hidden, seed);
    const Eigen::VectorXd u = active_margin_weight(c.model);
    const Eigen::VectorXd u_hat = u / u.norm();

    Eigen::VectorXd beta(n);
    beta << 0.4, 0.3, 0.2, 0.1, 0.004, 0.0035, 0.003, 0.0025, 0.002;
    c.embeds = random_embeds(n, dim, seed + 1, -0.05, 0.05);
    // Project the noise off the margin direction, then add a contribution
    // along it so that u . e_i = 5e-4 * beta_i exactly.
    for (int i = 0; i < n; ++i) {
        const double along = c.embeds.row(i).dot(u_hat);
        c.embeds.row(i) -= along * u_hat.transpose();
        c.embeds.row(i) += (beta[i] * 5e-4 / u.norm()) * u_hat.transpose();
    }
    force_active(c.model, {c.embeds}, 1.0);
    set_margin(c.model, c.embeds, 1e-4);
    c.attribution = make_attribution("manual", beta);
    return c;
}

std::string scratch_dir(const std::string& name) {
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / ("faithkit_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

namespace {

std::string word_name(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%02d", prefix, i);
    return buf;
}

} // namespace

SyntheticCorpus make_synthetic_corpus(const std::string& dir, int train_n, int dev_n,
                                      int eval_n, std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    constexpr int kSignal = 12;
    constexpr int kNeutral = 40;
    constexpr int kDim = 50;

    std::vector<std::string> pos_words, neg_words, neutral_words;
    for (int i = 0; i < kSignal; ++i) pos_words.push_back(word_name("pos", i));
    for (int i = 0; i < kSignal; ++i) neg_words.push_back(word_name("neg", i));
    for (int i = 0; i < kNeutral; ++i) neutral_words.push_back(word_name("neu", i));

    SyntheticCorpus corpus;
    corpus.train_tsv = (fs::path(dir) / "train.tsv").string();
    corpus.dev_tsv = (fs::path(dir) / "dev.tsv").string();
    corpus.eval_tsv = (fs::path(dir) / "eval.tsv").string();
    corpus.embeddings = (fs::path(dir) / "embeddings.txt").string();
    corpus.synonyms = (fs::path(dir) / "synonyms.tsv").string();

    // Embeddings: each class gets a strong bias on its own coordinate block;
    // neutral words are loud unstructured noise. The noise thins a neutral
    // token's active-neuron mask, so gradient magnitudes concentrate on the
    // signal tokens the way they do for the larger models this mirrors.
    {
        Rng rng(derive_seed(seed, 0, 0xE0));
        std::ofstream out(corpus.embeddings);
        auto write_word = [&](const std::string& w, double bias, int coord_start,
                              double noise) {
            out << w;
            for (int c = 0; c < kDim; ++c) {
                double v = rng.uniform(-noise, noise);
                if (c >= coord_start && c < coord_start + 5) v += bias;
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.6f", v);
                out << ' ' << buf;
            }
            out << '\n';
        };
        for (const auto& w : pos_words) write_word(w, 0.9, 0, 0.1);
        for (const auto& w : neg_words) write_word(w, 0.9, 5, 0.1);
        for (const auto& w : neutral_words) write_word(w, 0.0, 0, 0.9);
        write_word(".", 0.0, 0, 0.9);
    }

    // Synonyms: within-class neighbors, two per word; neutral words map to
    // other neutrals. A couple of cross-class traps exercise the tau filter.
    {
        std::ofstream out(corpus.synonyms);
        auto ring = [&out](const std::vector<std::string>& words) {
            for (std::size_t i = 0; i < words.size(); ++i)
                out << words[i] << '\t' << words[(i + 1) % words.size()] << ' '
                    << words[(i + 2) % words.size()] << '\n';
        };
        ring(pos_words);
        ring(neg_words);
        ring(neutral_words);
        out << "pos00\tneg00 pos01 pos02\n"; // cross-class trap, tau should filter it
    }

    auto write_split = [&](const std::string& path, int count, std::uint64_t salt,
                           double distractor_prob) {
        Rng rng(derive_seed(seed, salt, 0xDA7A));
        std::ofstream out(path);
        for (int i = 0; i < count; ++i) {
            const int label = i % 2;
            const auto& own = label == 1 ? pos_words : neg_words;
            const auto& other = label == 1 ? neg_words : pos_words;
            const int len = 8 + static_cast<int>(rng.below(7)); // 8..14 incl '.'
            const int signals = 2 + static_cast<int>(rng.below(2));
            const bool distractor = rng.uniform01() < distractor_prob;

            std::vector<std::string> words;
            for (int s = 0; s < signals; ++s)
                words.push_back(own[rng.below(own.size())]);
            if (distractor) words.push_back(other[rng.below(other.size())]);
            while (static_cast<int>(words.size()) < len - 1)
                words.push_back(neutral_words[rng.below(neutral_words.size())]);
            // deterministic shuffle of word order
            for (int j = static_cast<int>(words.size()) - 1; j > 0; --j) {
                const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(j + 1)));
                std::swap(words[j], words[k]);
            }
            words.push_back(".");

            out << label << '\t';
            for (std::size_t j = 0; j < words.size(); ++j) {
                if (j) out << ' ';
                out << words[j];
            }
            out << '\n';
        }
    };
    // The eval split carries no opposite-class distractors: every signal
    // token is positive evidence, which keeps the removal and perturbation
    // metrics directional for any reasonable method.
    write_split(corpus.train_tsv, train_n, 1, 0.3);
    write_split(corpus.dev_tsv, dev_n, 2, 0.3);
    write_split(corpus.eval_tsv, eval_n, 3, 0.0);
    return corpus;
}

} // namespace faithkit::testing
