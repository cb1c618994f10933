#ifndef FAITHKIT_CORPUS_HPP
#define FAITHKIT_CORPUS_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "faithkit/model.hpp"

namespace faithkit {

/// Lowercases, splits on whitespace, and peels leading/trailing ASCII
/// punctuation into separate single-character tokens. Throws EmptyInputError
/// when nothing survives.
std::vector<std::string> tokenize(const std::string& text);

struct Dataset {
    std::string split;
    std::vector<LabeledExample> examples;
};

/// TSV loader: `label<TAB>text`, labels in {0,1}, CRLF tolerated, blank
/// lines skipped. Errors carry the 1-based line number.
Dataset load_dataset(const std::string& path, const std::string& split_name = "");

/// Token ids with PAD=0 and UNK=1 reserved; insertion order is stable.
class Vocabulary {
public:
    Vocabulary();

    int add(const std::string& token);            // returns existing id if present
    int lookup(const std::string& token) const;   // kUnkId when unknown
    bool contains(const std::string& token) const;
    const std::string& token_of(int id) const;
    int size() const { return static_cast<int>(id_to_token_.size()); }

    std::vector<int> encode(const std::vector<std::string>& tokens) const;
    TokenSequence make_sequence(const std::vector<std::string>& tokens) const;

private:
    std::unordered_map<std::string, int> token_to_id_;
    std::vector<std::string> id_to_token_;
};

/// Vocabulary as a pure function of the training split's token order.
Vocabulary build_vocabulary(const Dataset& train_split);

/// Fills every example's ids from the vocabulary (UNK for unknown tokens).
void encode_dataset(Dataset& dataset, const Vocabulary& vocab);

/// Text embedding file `word v1 ... vd`. In-vocabulary rows are copied;
/// UNK and words absent from the file get seeded uniform(-0.1, 0.1) rows;
/// PAD is forced to zero. Inconsistent dimensions raise DimensionError.
Eigen::MatrixXd load_embeddings(const std::string& path, const Vocabulary& vocab,
                                std::uint64_t seed);

class SynonymLexicon {
public:
    /// Case-normalized lookup; unknown words get the empty list.
    const std::vector<std::string>& lookup(const std::string& token) const;
    void set(const std::string& word, std::vector<std::string> synonyms);
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

private:
    std::unordered_map<std::string, std::vector<std::string>> entries_;
    static const std::vector<std::string> kEmpty;
};

/// TSV lexicon `word<TAB>syn1 syn2 ...`; self-references dropped; a duplicate
/// head word overwrites the earlier entry with a warning on stderr.
SynonymLexicon load_synonyms(const std::string& path);

} // namespace faithkit

#endif
