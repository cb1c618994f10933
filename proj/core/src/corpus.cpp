#include "faithkit/corpus.hpp"

#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include "faithkit/errors.hpp"
#include "faithkit/rng.hpp"

namespace faithkit {

namespace {

bool is_ascii_punct(char c) {
    return c >= 0 && c < 128 && std::ispunct(static_cast<unsigned char>(c));
}

std::string lowercase(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

} // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    const std::string lowered = lowercase(text);
    std::istringstream stream(lowered);
    std::string chunk;
    while (stream >> chunk) {
        std::size_t begin = 0, end = chunk.size();
        std::vector<std::string> lead, trail;
        while (begin < end && is_ascii_punct(chunk[begin]))
            lead.emplace_back(1, chunk[begin++]);
        while (end > begin && is_ascii_punct(chunk[end - 1]))
            trail.emplace_back(1, chunk[--end]);
        for (auto& t : lead) out.push_back(std::move(t));
        if (end > begin) out.push_back(chunk.substr(begin, end - begin));
        for (auto it = trail.rbegin(); it != trail.rend(); ++it)
            out.push_back(std::move(*it));
    }
    if (out.empty())
        throw EmptyInputError("tokenize: no tokens in input");
    return out;
}

Dataset load_dataset(const std::string& path, const std::string& split_name) {
    std::ifstream in(path);
    if (!in)
        throw IoError("dataset: cannot read " + path);

    Dataset ds;
    ds.split = split_name.empty() ? path : split_name;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError("dataset: line " + std::to_string(line_no) +
                             " has no tab separator in " + path);
        const std::string label_field = line.substr(0, tab);
        const std::string text = line.substr(tab + 1);
        int label;
        if (label_field == "0") label = 0;
        else if (label_field == "1") label = 1;
        else
            throw DataError("dataset: line " + std::to_string(line_no) +
                            " label '" + label_field + "' outside {0,1} in " + path);

        LabeledExample ex;
        ex.label = label;
        try {
            ex.sequence.tokens = tokenize(text);
        } catch (const EmptyInputError&) {
            throw ParseError("dataset: line " + std::to_string(line_no) +
                             " has empty text in " + path);
        }
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

Vocabulary::Vocabulary() {
    id_to_token_ = {"<pad>", "<unk>"};
    token_to_id_ = {{"<pad>", kPadId}, {"<unk>", kUnkId}};
}

int Vocabulary::add(const std::string& token) {
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    const int id = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(token);
    token_to_id_.emplace(token, id);
    return id;
}

int Vocabulary::lookup(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
    return token_to_id_.count(token) != 0;
}

const std::string& Vocabulary::token_of(int id) const {
    if (id < 0 || id >= size())
        throw DimensionError("vocabulary: id out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(lookup(t));
    return ids;
}

TokenSequence Vocabulary::make_sequence(const std::vector<std::string>& tokens) const {
    TokenSequence seq;
    seq.tokens = tokens;
    seq.ids = encode(tokens);
    return seq;
}

Vocabulary build_vocabulary(const Dataset& train_split) {
    Vocabulary vocab;
    for (const auto& ex : train_split.examples)
        for (const auto& token : ex.sequence.tokens) vocab.add(token);
    return vocab;
}

void encode_dataset(Dataset& dataset, const Vocabulary& vocab) {
    for (auto& ex : dataset.examples)
        ex.sequence.ids = vocab.encode(ex.sequence.tokens);
}

Eigen::MatrixXd load_embeddings(const std::string& path, const Vocabulary& vocab,
                                std::uint64_t seed) {
    std::ifstream in(path);
    if (!in)
        throw IoError("embeddings: cannot read " + path);

    std::unordered_map<std::string, Eigen::VectorXd> rows;
    int dim = -1;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string word;
        fields >> word;
        std::vector<double> values;
        double v;
        while (fields >> v) values.push_back(v);
        if (values.empty())
            throw ParseError("embeddings: line " + std::to_string(line_no) +
                             " has no values in " + path);
        if (dim < 0) dim = static_cast<int>(values.size());
        else if (static_cast<int>(values.size()) != dim)
            throw DimensionError("embeddings: line " + std::to_string(line_no) +
                                 " has " + std::to_string(values.size()) +
                                 " values, expected " + std::to_string(dim));
        rows[word] = Eigen::Map<Eigen::VectorXd>(values.data(), dim);
    }
    if (dim < 0)
        throw ParseError("embeddings: no vectors in " + path);

    Rng rng(seed);
    Eigen::MatrixXd table(vocab.size(), dim);
    for (int id = 0; id < vocab.size(); ++id) {
        if (id == kPadId) {
            table.row(id).setZero();
            continue;
        }
        auto it = rows.find(vocab.token_of(id));
        if (it != rows.end()) {
            table.row(id) = it->second.transpose();
        } else {
            for (int c = 0; c < dim; ++c) table(id, c) = rng.uniform(-0.1, 0.1);
        }
    }
    return table;
}

const std::vector<std::string> SynonymLexicon::kEmpty;

const std::vector<std::string>& SynonymLexicon::lookup(const std::string& token) const {
    auto it = entries_.find(lowercase(token));
    return it == entries_.end() ? kEmpty : it->second;
}

void SynonymLexicon::set(const std::string& word, std::vector<std::string> synonyms) {
    const std::string head = lowercase(word);
    std::vector<std::string> kept;
    kept.reserve(synonyms.size());
    for (auto& s : synonyms) {
        std::string low = lowercase(s);
        if (low != head) kept.push_back(std::move(low));
    }
    entries_[head] = std::move(kept);
}

SynonymLexicon load_synonyms(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("synonyms: cannot read " + path);

    SynonymLexicon lex;
    std::unordered_map<std::string, int> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError("synonyms: line " + std::to_string(line_no) +
                             " has no tab separator in " + path);
        const std::string head = lowercase(line.substr(0, tab));
        std::istringstream rest(line.substr(tab + 1));
        std::vector<std::string> syns;
        std::string s;
        while (rest >> s) syns.push_back(s);
        if (seen.count(head))
            std::cerr << "warning: synonyms: duplicate head word '" << head
                      << "' at line " << line_no << ", last entry wins\n";
        seen[head] = line_no;
        lex.set(head, std::move(syns));
    }
    return lex;
}

} // namespace faithkit
