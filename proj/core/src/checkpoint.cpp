#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "faithkit/errors.hpp"
#include "faithkit/model.hpp"

namespace faithkit {

namespace {

constexpr const char* kMagic = "faithkit-ckpt";
constexpr const char* kVersion = "v1";

void write_matrix(std::ostream& out, const std::string& name,
                  const Eigen::MatrixXd& m) {
    out << "param " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    char buf[32];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
            if (c) out << ' ';
            out << buf;
        }
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix(std::istream& in, const std::string& expect_name,
                            Eigen::Index expect_rows, Eigen::Index expect_cols) {
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("checkpoint: truncated before block " + expect_name);
    std::istringstream head(line);
    std::string tag, name;
    Eigen::Index rows = 0, cols = 0;
    if (!(head >> tag >> name >> rows >> cols) || tag != "param")
        throw ParseError("checkpoint: malformed block header: " + line);
    if (name != expect_name)
        throw ParseError("checkpoint: expected block " + expect_name + ", found " + name);
    if (rows != expect_rows || cols != expect_cols)
        throw DimensionError("checkpoint: block " + name +
                             " disagrees with declared dims");

    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!std::getline(in, line))
            throw ParseError("checkpoint: truncated inside block " + name);
        const char* p = line.c_str();
        char* end = nullptr;
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double v = std::strtod(p, &end);
            if (end == p)
                throw ParseError("checkpoint: bad value in block " + name);
            m(r, c) = v;
            p = end;
        }
        while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
        if (*p != '\0')
            throw ParseError("checkpoint: trailing data in block " + name);
    }
    return m;
}

} // namespace

void save_checkpoint(const ClassifierModel& model, const std::string& path) {
    model.validate();
    std::ofstream out(path);
    if (!out)
        throw IoError("checkpoint: cannot write " + path);
    out << kMagic << ' ' << kVersion << '\n';
    out << "dims " << model.vocab_size() << ' ' << model.embedding_dim() << ' '
        << model.hidden_size() << ' ' << model.num_classes() << '\n';
    write_matrix(out, "embedding", model.embedding);
    write_matrix(out, "w1", model.w1);
    write_matrix(out, "b1", model.b1);
    write_matrix(out, "w2", model.w2);
    write_matrix(out, "b2", model.b2);
    write_matrix(out, "w3", model.w3);
    write_matrix(out, "b3", model.b3);
    out.flush();
    if (!out)
        throw IoError("checkpoint: write failed for " + path);
}

ClassifierModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("checkpoint: cannot read " + path);

    std::string line;
    if (!std::getline(in, line))
        throw ParseError("checkpoint: empty file " + path);
    {
        std::istringstream head(line);
        std::string magic, version;
        if (!(head >> magic >> version) || magic != kMagic)
            throw ParseError("checkpoint: not a checkpoint file: " + path);
        if (version != kVersion)
            throw VersionError("checkpoint: unsupported version " + version);
    }

    Eigen::Index vocab = 0, dim = 0, hidden = 0, classes = 0;
    if (!std::getline(in, line))
        throw ParseError("checkpoint: missing dims line");
    {
        std::istringstream dims(line);
        std::string tag;
        if (!(dims >> tag >> vocab >> dim >> hidden >> classes) || tag != "dims")
            throw ParseError("checkpoint: malformed dims line: " + line);
        if (vocab < 2 || dim < 1 || hidden < 1 || classes != 2)
            throw DimensionError("checkpoint: implausible dims line: " + line);
    }

    ClassifierModel m;
    m.embedding = read_matrix(in, "embedding", vocab, dim);
    m.w1 = read_matrix(in, "w1", hidden, dim);
    m.b1 = read_matrix(in, "b1", hidden, 1);
    m.w2 = read_matrix(in, "w2", hidden, hidden);
    m.b2 = read_matrix(in, "b2", hidden, 1);
    m.w3 = read_matrix(in, "w3", classes, hidden);
    m.b3 = read_matrix(in, "b3", classes, 1);
    m.validate();
    return m;
}

} // namespace faithkit
