#include "faithkit/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "faithkit/errors.hpp"

namespace faithkit {

const std::vector<std::string> kKnownMethods = {
    "random", "vagrad", "gradinp", "inggrad", "deeplift",
    "occlusion", "lime", "vapgd", "pgdinp", "certify"};
const std::vector<std::string> kKnownMetrics = {"comp", "suff", "sens", "stab"};

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream stream(s);
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ParseError("config: key '" + key + "' has non-numeric value '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ParseError("config: key '" + key + "' has non-integer value '" + value + "'");
    }
}

void check_names(const std::vector<std::string>& names,
                 const std::vector<std::string>& known, const std::string& what) {
    for (const auto& n : names) {
        if (std::find(known.begin(), known.end(), n) == known.end())
            throw DataError("config: unknown " + what + " '" + n + "'");
    }
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config: line " + std::to_string(line_no) +
                             " has no '=' in " + origin);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        cfg.raw[key] = value;

        if (key == "checkpoint") cfg.checkpoint = value;
        else if (key == "train") cfg.train_tsv = value;
        else if (key == "dev") cfg.dev_tsv = value;
        else if (key == "eval") cfg.eval_tsv = value;
        else if (key == "embeddings") cfg.embeddings = value;
        else if (key == "synonyms") cfg.synonyms = value;
        else if (key == "out") cfg.out = value;
        else if (key == "methods") cfg.methods = split_list(value);
        else if (key == "metrics") cfg.metrics = split_list(value);
        else if (key == "thresholds") {
            cfg.thresholds.clear();
            for (const auto& t : split_list(value))
                cfg.thresholds.push_back(parse_double(key, t));
        } else if (key == "seed") {
            try {
                std::size_t used = 0;
                cfg.seed = std::stoull(value, &used); // full 64-bit range
                if (used != value.size()) throw std::invalid_argument(value);
            } catch (const std::exception&) {
                throw ParseError("config: key 'seed' has non-integer value '" + value + "'");
            }
        } else if (key == "eval_per_class") cfg.eval_per_class = static_cast<int>(parse_int(key, value));
        else if (key == "pgd_epsilon") {
            if (value == "auto") cfg.pgd_epsilon_auto = true;
            else cfg.pgd_epsilon = parse_double(key, value);
        }
        else if (key == "pgd_iterations") cfg.pgd_iterations = static_cast<int>(parse_int(key, value));
        else if (key == "pgd_step") cfg.pgd_step = parse_double(key, value);
        else if (key == "lime_samples") cfg.lime_samples = static_cast<int>(parse_int(key, value));
        else if (key == "lime_kernel_width") cfg.lime_kernel_width = parse_double(key, value);
        else if (key == "lime_ridge") cfg.lime_ridge = parse_double(key, value);
        else if (key == "inggrad_steps") cfg.inggrad_steps = static_cast<int>(parse_int(key, value));
        else if (key == "certify_delta") cfg.certify_delta = parse_double(key, value);
        else if (key == "attack_iterations") cfg.attack_iterations = static_cast<int>(parse_int(key, value));
        else if (key == "attack_step") cfg.attack_step = parse_double(key, value);
        else if (key == "stability_k") cfg.stability_k = static_cast<int>(parse_int(key, value));
        else if (key == "stability_tau") cfg.stability_tau = parse_double(key, value);
        else if (key == "curve_ks") {
            cfg.curve_ks.clear();
            for (const auto& t : split_list(value))
                cfg.curve_ks.push_back(static_cast<int>(parse_int(key, t)));
        }
        else if (key == "curve_min_len") cfg.curve_min_len = static_cast<int>(parse_int(key, value));
        else if (key == "curve_max_len") cfg.curve_max_len = static_cast<int>(parse_int(key, value));
        else if (key == "interp_method") cfg.interp_method = value;
        else if (key == "interp_metric") cfg.interp_metric = value;
        else if (key == "interp_examples") cfg.interp_examples = static_cast<int>(parse_int(key, value));
        else if (key == "learning_rate") cfg.learning_rate = parse_double(key, value);
        else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_int(key, value));
        else if (key == "max_epochs") cfg.max_epochs = static_cast<int>(parse_int(key, value));
        else if (key == "patience") cfg.patience = static_cast<int>(parse_int(key, value));
        else if (key == "hidden") cfg.hidden = static_cast<int>(parse_int(key, value));
        else if (key == "dim") cfg.dim = static_cast<int>(parse_int(key, value));
        else
            throw ParseError("config: unknown key '" + key + "' at line " +
                             std::to_string(line_no) + " in " + origin);
    }

    check_names(cfg.methods, kKnownMethods, "method");
    check_names(cfg.metrics, kKnownMetrics, "metric");
    check_names({cfg.interp_method}, kKnownMethods, "method");
    check_names({cfg.interp_metric}, {"comp", "sens"}, "interpolation metric");
    for (double q : cfg.thresholds)
        if (q <= 0.0 || q > 1.0)
            throw DataError("config: thresholds must lie in (0, 1]");
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("config: cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

} // namespace faithkit
