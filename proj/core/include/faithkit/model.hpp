#ifndef FAITHKIT_MODEL_HPP
#define FAITHKIT_MODEL_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "faithkit/rng.hpp"

namespace faithkit {

/// Reserved vocabulary ids.
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;

/// A tokenized input: surface forms and their vocabulary ids, same length.
struct TokenSequence {
    std::vector<std::string> tokens;
    std::vector<int> ids;

    int length() const { return static_cast<int>(ids.size()); }
};

/// Binary classifier over token embeddings:
///   per-token affine + ReLU, mean pool, affine + ReLU, affine, softmax.
/// Every layer is affine or ReLU, which keeps the network decomposable for
/// reference-based attribution and boundable by linear relaxation.
struct ClassifierModel {
    Eigen::MatrixXd embedding; // |V| x d, row kPadId pinned to zero
    Eigen::MatrixXd w1;        // h x d
    Eigen::VectorXd b1;        // h
    Eigen::MatrixXd w2;        // h x h
    Eigen::VectorXd b2;        // h
    Eigen::MatrixXd w3;        // C x h, C = 2
    Eigen::VectorXd b3;        // C

    int vocab_size() const { return static_cast<int>(embedding.rows()); }
    int embedding_dim() const { return static_cast<int>(embedding.cols()); }
    int hidden_size() const { return static_cast<int>(w1.rows()); }
    int num_classes() const { return static_cast<int>(w3.rows()); }

    /// Throws DimensionError / NumericError if shapes disagree, a parameter
    /// is non-finite, or the PAD row is not zero.
    void validate() const;

    /// Embedding rows for a token sequence (n x d).
    Eigen::MatrixXd embed(const TokenSequence& x) const;
    Eigen::MatrixXd embed(const std::vector<int>& ids) const;
};

/// Every intermediate of one forward pass.
struct ForwardTrace {
    Eigen::MatrixXd z1; // n x h pre-activations
    Eigen::MatrixXd a1; // n x h activations
    Eigen::VectorXd pooled;
    Eigen::VectorXd z2;
    Eigen::VectorXd a2;
    Eigen::VectorXd logits;
    Eigen::VectorXd probs;
    int predicted = 0; // argmax of logits, ties to the lower index
};

ForwardTrace forward(const ClassifierModel& model, const Eigen::MatrixXd& embeds);

/// Softmax probability of `target` (the s_y the attribution methods explain).
double score(const ClassifierModel& model, const Eigen::MatrixXd& embeds, int target);

/// Exact analytic gradient of score(...) w.r.t. every embedding entry (n x d).
Eigen::MatrixXd grad_embeddings(const ClassifierModel& model,
                                const Eigen::MatrixXd& embeds, int target);

/// Gradient of the raw logit of `target` w.r.t. the embeddings (n x d).
Eigen::MatrixXd logit_gradient(const ClassifierModel& model,
                               const Eigen::MatrixXd& embeds, int target);

struct TrainConfig {
    double learning_rate = 0.1;
    int batch_size = 32;
    int max_epochs = 50;   // 0 returns the initialization unchanged
    int patience = 5;
    std::uint64_t seed = 1;
    int hidden_size = 64;
    int embedding_dim = 50;
};

struct LabeledExample {
    int label = 0; // 0 or 1
    TokenSequence sequence;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double dev_accuracy = 0.0;
};

struct TrainResult {
    ClassifierModel model;
    std::vector<EpochStats> history;
};

/// Mini-batch gradient descent on cross-entropy with a fixed learning rate.
/// Keeps the checkpoint with the best dev accuracy (dev falls back to the
/// training examples when empty). The PAD embedding row is never updated.
/// Identical (data, init, config) reproduce the model bit for bit.
TrainResult train(const std::vector<LabeledExample>& train_data,
                  const std::vector<LabeledExample>& dev_data,
                  const Eigen::MatrixXd& initial_embeddings,
                  const TrainConfig& cfg);

double accuracy(const ClassifierModel& model, const std::vector<LabeledExample>& data);

/// Uniformly initialized parameters around a given embedding table.
ClassifierModel init_model(const Eigen::MatrixXd& embeddings, int hidden_size, Rng& rng);

/// Line-oriented text checkpoint, exact round trip (see README for layout).
void save_checkpoint(const ClassifierModel& model, const std::string& path);
ClassifierModel load_checkpoint(const std::string& path);

} // namespace faithkit

#endif
