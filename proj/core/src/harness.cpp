#include "faithkit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

#include "faithkit/attribution.hpp"
#include "faithkit/certify.hpp"
#include "faithkit/errors.hpp"

namespace faithkit {

namespace {

constexpr std::uint64_t kSampleSalt = 0x5eedb001;
constexpr std::uint64_t kMethodSalt = 0x0a77a1b0;
constexpr std::uint64_t kInterpSalt = 0xc0ffee11;

std::string full_precision(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int method_index(const std::string& name) {
    for (std::size_t i = 0; i < kKnownMethods.size(); ++i)
        if (kKnownMethods[i] == name) return static_cast<int>(i);
    throw DataError("harness: unknown method '" + name + "'");
}

} // namespace

std::vector<int> balanced_sample(const Dataset& dataset, int per_class,
                                 std::uint64_t seed) {
    if (per_class < 1)
        throw DataError("sample: per-class cap must be positive");
    std::vector<int> by_class[2];
    for (int i = 0; i < static_cast<int>(dataset.examples.size()); ++i)
        by_class[dataset.examples[static_cast<std::size_t>(i)].label].push_back(i);

    std::vector<int> chosen;
    for (int label = 0; label < 2; ++label) {
        auto& pool = by_class[label];
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label), kSampleSalt));
        for (int i = static_cast<int>(pool.size()) - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        const int take = std::min<int>(per_class, static_cast<int>(pool.size()));
        chosen.insert(chosen.end(), pool.begin(), pool.begin() + take);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

AttributionMethod make_method(const std::string& name, const ClassifierModel& model,
                              const ExperimentConfig& cfg, std::uint64_t stream_seed) {
    if (name == "random") {
        auto rng = std::make_shared<Rng>(stream_seed);
        return [rng](const TokenSequence& x) {
            return attribute_random(x.length(), *rng);
        };
    }
    if (name == "vagrad")
        return [&model](const TokenSequence& x) {
            return attribute_vagrad(model, model.embed(x));
        };
    if (name == "gradinp")
        return [&model](const TokenSequence& x) {
            return attribute_gradinp(model, model.embed(x));
        };
    if (name == "inggrad") {
        const int steps = cfg.inggrad_steps;
        return [&model, steps](const TokenSequence& x) {
            return attribute_inggrad(model, model.embed(x), steps);
        };
    }
    if (name == "deeplift")
        return [&model](const TokenSequence& x) {
            return attribute_deeplift(model, model.embed(x));
        };
    if (name == "occlusion")
        return [&model](const TokenSequence& x) {
            return attribute_occlusion(model, model.embed(x));
        };
    if (name == "lime") {
        LimeConfig lime{cfg.lime_samples, cfg.lime_kernel_width, cfg.lime_ridge};
        return [&model, lime, stream_seed](const TokenSequence& x) {
            Rng rng(stream_seed); // fresh stream per call keeps the method pure
            return attribute_lime(model, model.embed(x), lime, rng);
        };
    }
    if (name == "vapgd" || name == "pgdinp") {
        PgdConfig pgd{cfg.pgd_epsilon, cfg.pgd_iterations, cfg.effective_pgd_step()};
        const bool vanilla = name == "vapgd";
        return [&model, pgd, vanilla](const TokenSequence& x) {
            return vanilla ? attribute_vapgd(model, model.embed(x), pgd)
                           : attribute_pgdinp(model, model.embed(x), pgd);
        };
    }
    if (name == "certify") {
        const double delta = cfg.certify_delta;
        return [&model, delta](const TokenSequence& x) {
            return attribute_certify(model, model.embed(x), delta);
        };
    }
    throw DataError("harness: unknown method '" + name + "'");
}

double select_pgd_epsilon(const ClassifierModel& model, const Dataset& dev,
                          const ExperimentConfig& cfg) {
    static const std::vector<double> kCandidates = {0.1, 0.5, 1.2, 2.2};
    if (dev.examples.empty()) return 0.5;

    const std::vector<int> sample =
        balanced_sample(dev, 25, derive_seed(cfg.seed, 0, kMethodSalt));
    const AttackConfig attack{cfg.attack_iterations, cfg.attack_step};

    double best_eps = 0.5;
    double best_auc = std::numeric_limits<double>::infinity();
    for (double eps : kCandidates) {
        const PgdConfig pgd = PgdConfig::with_epsilon(eps, cfg.pgd_iterations);
        double sum = 0.0;
        int count = 0;
        for (int idx : sample) {
            const auto& ex = dev.examples[static_cast<std::size_t>(idx)];
            const Eigen::MatrixXd embeds = model.embed(ex.sequence);
            const Attribution attr = attribute_vapgd(model, embeds, pgd);
            const SensitivityResult sens =
                sensitivity_auc(model, embeds, attr, cfg.thresholds, attack);
            if (sens.defined) {
                sum += sens.auc;
                ++count;
            }
        }
        if (count == 0) continue;
        const double mean = sum / count;
        if (mean < best_auc) {
            best_auc = mean;
            best_eps = eps;
        }
    }
    return best_eps;
}

TrainOutcome run_train(const ExperimentConfig& cfg) {
    if (cfg.train_tsv.empty())
        throw DataError("train: config key 'train' is required");
    if (cfg.embeddings.empty())
        throw DataError("train: config key 'embeddings' is required");
    if (cfg.checkpoint.empty())
        throw DataError("train: config key 'checkpoint' is required");

    Dataset train_ds = load_dataset(cfg.train_tsv, "train");
    if (train_ds.examples.empty())
        throw DataError("train: no examples in " + cfg.train_tsv);
    Dataset dev_ds;
    if (!cfg.dev_tsv.empty()) dev_ds = load_dataset(cfg.dev_tsv, "dev");

    const Vocabulary vocab = build_vocabulary(train_ds);
    encode_dataset(train_ds, vocab);
    encode_dataset(dev_ds, vocab);

    const Eigen::MatrixXd table =
        load_embeddings(cfg.embeddings, vocab, derive_seed(cfg.seed, 0, 0));
    if (cfg.dim > 0 && cfg.dim != table.cols())
        throw DimensionError("train: config dim " + std::to_string(cfg.dim) +
                             " disagrees with embedding file dim " +
                             std::to_string(table.cols()));

    TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.batch_size = cfg.batch_size;
    tc.max_epochs = cfg.max_epochs;
    tc.patience = cfg.patience;
    tc.seed = cfg.seed;
    tc.hidden_size = cfg.hidden;
    tc.embedding_dim = static_cast<int>(table.cols());

    const TrainResult result = train(train_ds.examples, dev_ds.examples, table, tc);
    save_checkpoint(result.model, cfg.checkpoint);

    TrainOutcome out;
    out.checkpoint_path = cfg.checkpoint;
    out.epochs_run = static_cast<int>(result.history.size());
    out.dev_accuracy = accuracy(result.model,
                                dev_ds.examples.empty() ? train_ds.examples
                                                        : dev_ds.examples);
    return out;
}

namespace {

struct LoadedExperiment {
    ClassifierModel model;
    Vocabulary vocab;
    Dataset eval;
    Dataset dev;
    SynonymLexicon lexicon;
};

LoadedExperiment load_experiment(const ExperimentConfig& cfg, bool need_lexicon) {
    if (cfg.checkpoint.empty())
        throw DataError("evaluate: config key 'checkpoint' is required");
    if (cfg.train_tsv.empty())
        throw DataError("evaluate: config key 'train' is required (vocabulary source)");
    if (cfg.eval_tsv.empty())
        throw DataError("evaluate: config key 'eval' is required");

    LoadedExperiment exp;
    exp.model = load_checkpoint(cfg.checkpoint);

    Dataset train_ds = load_dataset(cfg.train_tsv, "train");
    exp.vocab = build_vocabulary(train_ds);
    if (exp.vocab.size() != exp.model.vocab_size())
        throw DimensionError(
            "evaluate: vocabulary from " + cfg.train_tsv + " has " +
            std::to_string(exp.vocab.size()) + " entries but checkpoint declares " +
            std::to_string(exp.model.vocab_size()));

    exp.eval = load_dataset(cfg.eval_tsv, "eval");
    encode_dataset(exp.eval, exp.vocab);

    if (!cfg.dev_tsv.empty()) {
        exp.dev = load_dataset(cfg.dev_tsv, "dev");
        encode_dataset(exp.dev, exp.vocab);
    }

    if (need_lexicon) {
        if (cfg.synonyms.empty())
            throw DataError("evaluate: the stab metric needs the 'synonyms' key");
        exp.lexicon = load_synonyms(cfg.synonyms);
    }
    return exp;
}

} // namespace

EvaluateOutcome run_evaluate(const ExperimentConfig& cfg, const std::string& out_path) {
    const bool wants_stability =
        std::find(cfg.metrics.begin(), cfg.metrics.end(), "stab") != cfg.metrics.end();
    LoadedExperiment exp = load_experiment(cfg, wants_stability);

    ExperimentConfig effective = cfg;
    if (cfg.pgd_epsilon_auto)
        effective.pgd_epsilon = select_pgd_epsilon(exp.model, exp.dev, cfg);

    const std::vector<int> sample =
        balanced_sample(exp.eval, cfg.eval_per_class, cfg.seed);
    const AttackConfig attack{cfg.attack_iterations, cfg.attack_step};
    const StabilityConfig stab_cfg{cfg.stability_k, cfg.stability_tau};

    EvaluateOutcome out;
    // value streams per (method, metric), in example order
    std::map<std::pair<std::string, std::string>, std::vector<double>> values;
    std::map<std::pair<std::string, std::string>, int> failures;

    for (int example_idx : sample) {
        const auto& ex = exp.eval.examples[static_cast<std::size_t>(example_idx)];
        const Eigen::MatrixXd embeds = exp.model.embed(ex.sequence);

        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            const std::string& method_name = cfg.methods[mi];
            const std::uint64_t stream_seed =
                derive_seed(cfg.seed, static_cast<std::uint64_t>(example_idx),
                            kMethodSalt + static_cast<std::uint64_t>(
                                              method_index(method_name)));
            const AttributionMethod method =
                make_method(method_name, exp.model, effective, stream_seed);

            Attribution attribution;
            bool attribution_ok = true;
            try {
                attribution = method(ex.sequence);
            } catch (const Error&) {
                attribution_ok = false;
            }

            for (const std::string& metric : cfg.metrics) {
                PerExampleRecord rec;
                rec.example = example_idx;
                rec.method = method_name;
                rec.metric = metric;
                if (!attribution_ok) {
                    rec.failure = true;
                } else {
                    try {
                        if (metric == "comp" || metric == "suff") {
                            std::vector<double> per_threshold;
                            for (double q : cfg.thresholds)
                                per_threshold.push_back(
                                    metric == "comp"
                                        ? comprehensiveness(exp.model, embeds, attribution, q)
                                        : sufficiency(exp.model, embeds, attribution, q));
                            rec.value = removal_auc(per_threshold);
                        } else if (metric == "sens") {
                            const SensitivityResult sens = sensitivity_auc(
                                exp.model, embeds, attribution, cfg.thresholds, attack);
                            if (!sens.defined)
                                rec.failure = true;
                            else
                                rec.value = sens.auc;
                        } else if (metric == "stab") {
                            rec.value = stability(exp.model, ex.sequence, method,
                                                  exp.lexicon, exp.vocab, stab_cfg,
                                                  &attribution);
                        } else {
                            throw DataError("evaluate: unknown metric " + metric);
                        }
                    } catch (const Error&) {
                        rec.failure = true;
                    }
                }
                const auto key = std::make_pair(method_name, metric);
                if (rec.failure) {
                    ++failures[key];
                } else {
                    values[key].push_back(rec.value);
                    out.any_success = true;
                }
                out.records.push_back(std::move(rec));
            }
        }
    }

    FaithfulnessReport& report = out.report;
    report.toolkit_version = kToolkitVersion;
    report.seed = cfg.seed;
    report.config_echo = cfg.raw;
    report.config_echo["effective_pgd_epsilon"] = full_precision(effective.pgd_epsilon);
    report.methods = cfg.methods;
    report.metrics = cfg.metrics;
    report.examples_evaluated = static_cast<int>(sample.size());

    for (const auto& method : cfg.methods) {
        for (const auto& metric : cfg.metrics) {
            const auto key = std::make_pair(method, metric);
            CellStats cell;
            cell.method = method;
            cell.metric = metric;
            cell.failures = failures.count(key) ? failures[key] : 0;
            const auto it = values.find(key);
            if (it != values.end() && !it->second.empty()) {
                const auto& v = it->second;
                cell.count = static_cast<int>(v.size());
                double sum = 0.0;
                for (double x : v) sum += x;
                cell.mean = sum / cell.count;
                if (cell.count >= 2) {
                    double ss = 0.0;
                    for (double x : v) ss += (x - cell.mean) * (x - cell.mean);
                    cell.stddev = std::sqrt(ss / (cell.count - 1));
                }
            }
            report.cells.push_back(std::move(cell));
        }
    }

    for (const auto& metric : cfg.metrics) {
        for (std::size_t a = 0; a < cfg.methods.size(); ++a) {
            for (std::size_t b = a + 1; b < cfg.methods.size(); ++b) {
                const auto va = values.find({cfg.methods[a], metric});
                const auto vb = values.find({cfg.methods[b], metric});
                if (va == values.end() || vb == values.end()) continue;
                if (va->second.size() < 2 || vb->second.size() < 2) continue;
                SignificancePair pair;
                pair.metric = metric;
                pair.method_a = cfg.methods[a];
                pair.method_b = cfg.methods[b];
                const SignificanceResult sig = t_test(va->second, vb->second);
                pair.t = sig.t;
                pair.p = sig.p;
                pair.significant_90 = sig.significant_90;
                pair.significant_95 = sig.significant_95;
                report.significance.push_back(std::move(pair));
            }
        }
    }

    out.report_path = out_path;
    out.records_path = sibling_jsonl_path(out_path);
    write_report_json(report, out.report_path);
    write_records_jsonl(out.records, out.records_path);
    return out;
}

std::string run_curves(const ExperimentConfig& cfg, const std::vector<int>& ks) {
    if (ks.empty())
        throw DataError("curves: no k values given");
    LoadedExperiment exp = load_experiment(cfg, /*need_lexicon=*/false);
    const AttackConfig attack{cfg.attack_iterations, cfg.attack_step};

    std::vector<int> sample = balanced_sample(exp.eval, cfg.eval_per_class, cfg.seed);
    sample.erase(std::remove_if(sample.begin(), sample.end(),
                                [&](int idx) {
                                    const int n = exp.eval.examples[idx].sequence.length();
                                    return n < cfg.curve_min_len || n > cfg.curve_max_len;
                                }),
                 sample.end());

    std::ostringstream csv;
    csv << "method,k,examples,clamped,mean_comp,comp_count,mean_sens_radius,"
           "sens_count,sens_failures\n";
    for (const auto& method_name : cfg.methods) {
        // per-k accumulators
        std::vector<double> comp_sum(ks.size(), 0.0), sens_sum(ks.size(), 0.0);
        std::vector<int> comp_count(ks.size(), 0), sens_count(ks.size(), 0),
            sens_fail(ks.size(), 0), clamped(ks.size(), 0);

        for (int example_idx : sample) {
            const auto& ex = exp.eval.examples[static_cast<std::size_t>(example_idx)];
            const Eigen::MatrixXd embeds = exp.model.embed(ex.sequence);
            const std::uint64_t stream_seed =
                derive_seed(cfg.seed, static_cast<std::uint64_t>(example_idx),
                            kMethodSalt + static_cast<std::uint64_t>(
                                              method_index(method_name)));
            Attribution attribution;
            try {
                attribution = make_method(method_name, exp.model, cfg,
                                          stream_seed)(ex.sequence);
            } catch (const Error&) {
                continue;
            }
            const int n = ex.sequence.length();
            for (std::size_t ki = 0; ki < ks.size(); ++ki) {
                int k = ks[ki];
                if (k > n) {
                    k = n;
                    ++clamped[ki];
                }
                if (k < 1) continue;
                const std::vector<int> set(attribution.rank.begin(),
                                           attribution.rank.begin() + k);
                try {
                    comp_sum[ki] += comprehensiveness_set(exp.model, embeds, set);
                    ++comp_count[ki];
                } catch (const Error&) {
                }
                try {
                    const SensitivityRadius r =
                        sensitivity_radius_set(exp.model, embeds, set, attack);
                    if (r.succeeded) {
                        sens_sum[ki] += r.radius;
                        ++sens_count[ki];
                    } else {
                        ++sens_fail[ki];
                    }
                } catch (const Error&) {
                    ++sens_fail[ki];
                }
            }
        }

        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            csv << method_name << ',' << ks[ki] << ',' << sample.size() << ','
                << clamped[ki] << ','
                << (comp_count[ki] ? full_precision(comp_sum[ki] / comp_count[ki]) : "nan")
                << ',' << comp_count[ki] << ','
                << (sens_count[ki] ? full_precision(sens_sum[ki] / sens_count[ki]) : "nan")
                << ',' << sens_count[ki] << ',' << sens_fail[ki] << '\n';
        }
    }
    return csv.str();
}

std::string run_interpolate(const ExperimentConfig& cfg) {
    LoadedExperiment exp = load_experiment(cfg, /*need_lexicon=*/false);
    const AttackConfig attack{cfg.attack_iterations, cfg.attack_step};
    const InterpolationMetric metric = cfg.interp_metric == "comp"
                                           ? InterpolationMetric::kComprehensiveness
                                           : InterpolationMetric::kSensitivity;

    std::vector<int> sample = balanced_sample(exp.eval, cfg.eval_per_class, cfg.seed);
    sample.erase(std::remove_if(sample.begin(), sample.end(),
                                [&](int idx) {
                                    return exp.eval.examples[idx].sequence.length() < 8;
                                }),
                 sample.end());
    if (static_cast<int>(sample.size()) > cfg.interp_examples)
        sample.resize(static_cast<std::size_t>(cfg.interp_examples));

    std::ostringstream csv;
    csv << "example,f0,f1,f2,f3,f4\n";
    std::array<double, 5> sums{};
    int used = 0;
    int skipped = 0;
    for (int example_idx : sample) {
        const auto& ex = exp.eval.examples[static_cast<std::size_t>(example_idx)];
        const Eigen::MatrixXd embeds = exp.model.embed(ex.sequence);
        const std::uint64_t stream_seed =
            derive_seed(cfg.seed, static_cast<std::uint64_t>(example_idx),
                        kMethodSalt + static_cast<std::uint64_t>(
                                          method_index(cfg.interp_method)));
        try {
            const Attribution attribution =
                make_method(cfg.interp_method, exp.model, cfg, stream_seed)(ex.sequence);
            Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(example_idx),
                                kInterpSalt));
            const InterpolationCurve curve =
                interpolation_curve(exp.model, embeds, attribution, metric, rng, attack);
            if (curve.degenerate) {
                ++skipped;
                continue;
            }
            csv << example_idx;
            for (int i = 0; i < 5; ++i) {
                csv << ',' << full_precision(curve.values[i]);
                sums[static_cast<std::size_t>(i)] += curve.values[i];
            }
            csv << '\n';
            ++used;
        } catch (const Error&) {
            ++skipped;
        }
    }
    csv << "mean";
    for (int i = 0; i < 5; ++i)
        csv << ',' << (used ? full_precision(sums[static_cast<std::size_t>(i)] / used) : "nan");
    csv << '\n';
    csv << "# used=" << used << " skipped=" << skipped << '\n';
    return csv.str();
}

} // namespace faithkit
