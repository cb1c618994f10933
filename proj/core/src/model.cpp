#include "faithkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "faithkit/errors.hpp"

namespace faithkit {

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

int argmax_low_tie(const Eigen::VectorXd& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

} // namespace

void ClassifierModel::validate() const {
    if (w1.rows() != b1.size() || w2.rows() != b2.size() || w3.rows() != b3.size())
        throw DimensionError("model: bias length disagrees with weight rows");
    if (w1.cols() != embedding.cols())
        throw DimensionError("model: w1 columns disagree with embedding dim");
    if (w2.cols() != w1.rows() || w2.rows() != w1.rows())
        throw DimensionError("model: w2 must be square over the hidden size");
    if (w3.cols() != w2.rows())
        throw DimensionError("model: w3 columns disagree with hidden size");
    if (w3.rows() != 2)
        throw DimensionError("model: expected 2 output classes");
    if (!embedding.allFinite() || !w1.allFinite() || !b1.allFinite() ||
        !w2.allFinite() || !b2.allFinite() || !w3.allFinite() || !b3.allFinite())
        throw NumericError("model: non-finite parameter");
    if (embedding.rows() < 2)
        throw DimensionError("model: vocabulary must hold PAD and UNK");
    if (embedding.row(kPadId).cwiseAbs().maxCoeff() != 0.0)
        throw NumericError("model: PAD embedding row must be zero");
}

Eigen::MatrixXd ClassifierModel::embed(const std::vector<int>& ids) const {
    Eigen::MatrixXd out(static_cast<int>(ids.size()), embedding.cols());
    for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
        if (ids[i] < 0 || ids[i] >= embedding.rows())
            throw DimensionError("embed: token id out of vocabulary range");
        out.row(i) = embedding.row(ids[i]);
    }
    return out;
}

Eigen::MatrixXd ClassifierModel::embed(const TokenSequence& x) const {
    return embed(x.ids);
}

ForwardTrace forward(const ClassifierModel& model, const Eigen::MatrixXd& embeds) {
    if (embeds.rows() < 1)
        throw DimensionError("forward: need at least one token");
    if (embeds.cols() != model.w1.cols())
        throw DimensionError("forward: embedding dim disagrees with w1");
    if (!embeds.allFinite())
        throw NumericError("forward: non-finite input embeddings");

    const int n = static_cast<int>(embeds.rows());
    ForwardTrace t;
    t.z1 = (model.w1 * embeds.transpose()).transpose();
    t.z1.rowwise() += model.b1.transpose();
    t.a1 = t.z1.cwiseMax(0.0);
    t.pooled = t.a1.colwise().sum().transpose() / static_cast<double>(n);
    t.z2 = model.w2 * t.pooled + model.b2;
    t.a2 = t.z2.cwiseMax(0.0);
    t.logits = model.w3 * t.a2 + model.b3;
    t.probs = softmax(t.logits);
    t.predicted = argmax_low_tie(t.logits);
    return t;
}

double score(const ClassifierModel& model, const Eigen::MatrixXd& embeds, int target) {
    if (target < 0 || target >= model.num_classes())
        throw DimensionError("score: target class out of range");
    return forward(model, embeds).probs[target];
}

namespace {

/// Backward pass from a gradient at the logits down to the embeddings.
/// ReLU uses subgradient 0 at exactly zero.
Eigen::MatrixXd backward_to_embeddings(const ClassifierModel& model,
                                       const ForwardTrace& t,
                                       const Eigen::VectorXd& g_logits) {
    const int n = static_cast<int>(t.z1.rows());
    Eigen::VectorXd g_a2 = model.w3.transpose() * g_logits;
    Eigen::VectorXd g_z2 =
        (t.z2.array() > 0.0).select(g_a2, Eigen::VectorXd::Zero(g_a2.size()));
    Eigen::VectorXd g_pooled = model.w2.transpose() * g_z2;
    Eigen::VectorXd g_a1_row = g_pooled / static_cast<double>(n);

    Eigen::MatrixXd g_embeds(n, model.w1.cols());
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd g_z1 =
            (t.z1.row(i).transpose().array() > 0.0)
                .select(g_a1_row, Eigen::VectorXd::Zero(g_a1_row.size()));
        g_embeds.row(i) = (model.w1.transpose() * g_z1).transpose();
    }
    return g_embeds;
}

Eigen::VectorXd softmax_jacobian_row(const Eigen::VectorXd& probs, int target) {
    Eigen::VectorXd g = -probs[target] * probs;
    g[target] += probs[target];
    return g;
}

} // namespace

Eigen::MatrixXd grad_embeddings(const ClassifierModel& model,
                                const Eigen::MatrixXd& embeds, int target) {
    if (target < 0 || target >= model.num_classes())
        throw DimensionError("grad_embeddings: target class out of range");
    ForwardTrace t = forward(model, embeds);
    return backward_to_embeddings(model, t, softmax_jacobian_row(t.probs, target));
}

Eigen::MatrixXd logit_gradient(const ClassifierModel& model,
                               const Eigen::MatrixXd& embeds, int target) {
    if (target < 0 || target >= model.num_classes())
        throw DimensionError("logit_gradient: target class out of range");
    ForwardTrace t = forward(model, embeds);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(model.num_classes());
    g[target] = 1.0;
    return backward_to_embeddings(model, t, g);
}

ClassifierModel init_model(const Eigen::MatrixXd& embeddings, int hidden_size, Rng& rng) {
    const int d = static_cast<int>(embeddings.cols());
    const int h = hidden_size;
    auto uniform_matrix = [&rng](int rows, int cols, double scale) {
        Eigen::MatrixXd m(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-scale, scale);
        return m;
    };

    ClassifierModel m;
    m.embedding = embeddings;
    m.embedding.row(kPadId).setZero();
    m.w1 = uniform_matrix(h, d, std::sqrt(6.0 / (h + d)));
    m.b1 = Eigen::VectorXd::Zero(h);
    m.w2 = uniform_matrix(h, h, std::sqrt(6.0 / (h + h)));
    m.b2 = Eigen::VectorXd::Zero(h);
    m.w3 = uniform_matrix(2, h, std::sqrt(6.0 / (2 + h)));
    m.b3 = Eigen::VectorXd::Zero(2);
    return m;
}

double accuracy(const ClassifierModel& model, const std::vector<LabeledExample>& data) {
    if (data.empty()) return 0.0;
    int correct = 0;
    for (const auto& ex : data) {
        if (forward(model, model.embed(ex.sequence)).predicted == ex.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

struct Gradients {
    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;
    // Sparse embedding gradient: accumulated per touched row.
    std::vector<std::pair<int, Eigen::VectorXd>> embedding_rows;

    explicit Gradients(const ClassifierModel& m)
        : w1(Eigen::MatrixXd::Zero(m.w1.rows(), m.w1.cols())),
          w2(Eigen::MatrixXd::Zero(m.w2.rows(), m.w2.cols())),
          w3(Eigen::MatrixXd::Zero(m.w3.rows(), m.w3.cols())),
          b1(Eigen::VectorXd::Zero(m.b1.size())),
          b2(Eigen::VectorXd::Zero(m.b2.size())),
          b3(Eigen::VectorXd::Zero(m.b3.size())) {}
};

/// Cross-entropy backward for one example; returns the loss.
double accumulate_example(const ClassifierModel& model, const LabeledExample& ex,
                          Gradients& g) {
    const Eigen::MatrixXd embeds = model.embed(ex.sequence);
    const int n = static_cast<int>(embeds.rows());
    ForwardTrace t = forward(model, embeds);

    const double p = std::max(t.probs[ex.label], 1e-300);
    const double loss = -std::log(p);

    Eigen::VectorXd g_logits = t.probs;
    g_logits[ex.label] -= 1.0;

    g.w3 += g_logits * t.a2.transpose();
    g.b3 += g_logits;
    Eigen::VectorXd g_a2 = model.w3.transpose() * g_logits;
    Eigen::VectorXd g_z2 =
        (t.z2.array() > 0.0).select(g_a2, Eigen::VectorXd::Zero(g_a2.size()));
    g.w2 += g_z2 * t.pooled.transpose();
    g.b2 += g_z2;
    Eigen::VectorXd g_pooled = model.w2.transpose() * g_z2;
    Eigen::VectorXd g_a1_row = g_pooled / static_cast<double>(n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd g_z1 =
            (t.z1.row(i).transpose().array() > 0.0)
                .select(g_a1_row, Eigen::VectorXd::Zero(g_a1_row.size()));
        g.w1 += g_z1 * embeds.row(i);
        g.b1 += g_z1;
        const int id = ex.sequence.ids[i];
        if (id != kPadId)
            g.embedding_rows.emplace_back(id, model.w1.transpose() * g_z1);
    }
    return loss;
}

void apply(ClassifierModel& model, const Gradients& g, double step) {
    model.w1 -= step * g.w1;
    model.b1 -= step * g.b1;
    model.w2 -= step * g.w2;
    model.b2 -= step * g.b2;
    model.w3 -= step * g.w3;
    model.b3 -= step * g.b3;
    for (const auto& [id, row] : g.embedding_rows)
        model.embedding.row(id) -= step * row.transpose();
}

} // namespace

TrainResult train(const std::vector<LabeledExample>& train_data,
                  const std::vector<LabeledExample>& dev_data,
                  const Eigen::MatrixXd& initial_embeddings,
                  const TrainConfig& cfg) {
    if (cfg.learning_rate <= 0.0 || cfg.batch_size <= 0 || cfg.patience <= 0 ||
        cfg.hidden_size <= 0 || cfg.max_epochs < 0)
        throw DataError("train: non-positive configuration value");
    if (cfg.embedding_dim != initial_embeddings.cols())
        throw DimensionError("train: config embedding_dim disagrees with the table");
    if (train_data.size() < 2)
        throw DataError("train: need at least two examples");
    bool has0 = false, has1 = false;
    for (const auto& ex : train_data) {
        if (ex.label == 0) has0 = true;
        else if (ex.label == 1) has1 = true;
        else throw DataError("train: label outside {0,1}");
        if (ex.sequence.length() < 1)
            throw DataError("train: empty example");
    }
    if (!has0 || !has1)
        throw DataError("train: both classes must be present");

    Rng rng(cfg.seed);
    ClassifierModel model = init_model(initial_embeddings, cfg.hidden_size, rng);
    model.validate();

    TrainResult result;
    result.model = model;
    if (cfg.max_epochs == 0) return result;

    const std::vector<LabeledExample>& checkpoint_data =
        dev_data.empty() ? train_data : dev_data;

    double best_acc = accuracy(model, checkpoint_data);
    ClassifierModel best_model = model;
    int epochs_without_improvement = 0;

    std::vector<int> order(train_data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        // Fisher-Yates with our own generator keeps the permutation
        // platform-independent.
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
            int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[i], order[j]);
        }

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            Gradients g(model);
            for (std::size_t k = start; k < end; ++k)
                epoch_loss += accumulate_example(model, train_data[order[k]], g);
            apply(model, g, cfg.learning_rate / static_cast<double>(end - start));
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<double>(train_data.size());
        stats.train_accuracy = accuracy(model, train_data);
        stats.dev_accuracy = accuracy(model, checkpoint_data);
        result.history.push_back(stats);

        if (stats.dev_accuracy > best_acc) {
            best_acc = stats.dev_accuracy;
            best_model = model;
            epochs_without_improvement = 0;
        } else {
            ++epochs_without_improvement;
            if (epochs_without_improvement >= cfg.patience) break;
        }
    }

    result.model = best_model;
    return result;
}

} // namespace faithkit
