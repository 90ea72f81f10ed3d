#include "rapidlog/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "rapidlog/errors.hpp"
#include "rapidlog/rng.hpp"

namespace rapidlog {

namespace {

double parse_number(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("expected a number, got \"" + s + "\"");
}

nlohmann::ordered_json core_json(const CoreSetConfig& c) {
    nlohmann::ordered_json j;
    if (c.k) j["k"] = *c.k;
    if (c.ratio) j["ratio"] = *c.ratio;
    j["feature_mode"] = to_string(c.feature_mode);
    j["score_mode"] = to_string(c.score_mode);
    j["aggregation"] = to_string(c.aggregation);
    return j;
}

bool is_abnormal(const RawLogRecord& r) { return r.label == Label::abnormal; }

}  // namespace

std::string ExperimentConfig::to_json() const {
    nlohmann::ordered_json j;
    j["provider"] = {{"kind", provider.provider == Provider::hash ? "hash" : "file"},
                     {"dim", provider.dim},
                     {"max_tokens", provider.max_tokens},
                     {"normalize_rows", provider.normalize_rows},
                     {"seed", provider.seed}};
    j["core"] = core_json(core);
    j["known_ratio"] = known_ratio;
    j["train_fraction"] = train_fraction;
    j["seed"] = seed;
    j["block_mode"] = block_mode;
    return j.dump();
}

Split split_corpus(std::span<const RawLogRecord> corpus, double train_fraction, bool block_mode) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train fraction must be in (0, 1)");
    }
    Split split;
    if (!block_mode) {
        const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(corpus.size())));
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            if (i >= n_train) {
                split.test.push_back(corpus[i]);
            } else if (!is_abnormal(corpus[i])) {
                split.known_normal.push_back(corpus[i]);
            }
        }
        return split;
    }

    std::vector<std::string> order;
    std::unordered_map<std::string, std::size_t> block_pos;
    std::vector<bool> block_abnormal;
    for (const auto& r : corpus) {
        if (!r.block_id) {
            throw ConfigError("record " + std::to_string(r.index) + " has no block_id in block mode");
        }
        auto [it, inserted] = block_pos.try_emplace(*r.block_id, order.size());
        if (inserted) {
            order.push_back(*r.block_id);
            block_abnormal.push_back(false);
        }
        if (is_abnormal(r)) block_abnormal[it->second] = true;
    }
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(order.size())));
    for (const auto& r : corpus) {
        const std::size_t b = block_pos.at(*r.block_id);
        if (b >= n_train) {
            split.test.push_back(r);
        } else if (!block_abnormal[b]) {
            split.known_normal.push_back(r);
        }
    }
    return split;
}

SequenceDB build_known_db(std::span<const RawLogRecord> known_normal, const RuleSet& rules,
                          const ExperimentConfig& config) {
    if (!(config.known_ratio > 0.0 && config.known_ratio <= 1.0)) {
        throw ConfigError("known ratio must be in (0, 1]");
    }
    SequenceDB all;
    if (config.block_mode) {
        for (const auto& b : build_block_views(known_normal, rules)) all.intern(b.canonical_text);
    } else {
        for (const auto& s : apply_masks(known_normal, rules)) all.intern(s.text);
    }
    const auto keep = static_cast<std::size_t>(std::floor(config.known_ratio * static_cast<double>(all.size()) + 1e-9));
    if (keep == 0) {
        throw ConfigError("known ratio " + std::to_string(config.known_ratio) + " of " + std::to_string(all.size()) +
                          " known-normal sequences leaves D empty");
    }
    if (keep == all.size()) {
        return all;
    }
    std::vector<std::size_t> pick(all.size());
    for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
    Rng rng(splitmix64(config.seed ^ 0x4B4E4F574EULL));
    rng.shuffle(pick.begin(), pick.end());
    pick.resize(keep);
    std::sort(pick.begin(), pick.end());
    SequenceDB sampled;
    for (auto i : pick) sampled.intern(all.texts()[i]);
    return sampled;
}

ExperimentResult run_experiment(std::span<const RawLogRecord> corpus, const RuleSet& rules,
                                const ExperimentConfig& config) {
    const Split split = split_corpus(corpus, config.train_fraction, config.block_mode);
    if (split.test.empty()) {
        throw ConfigError("test split is empty");
    }
    const SequenceDB known = build_known_db(split.known_normal, rules, config);
    const EmbeddingMap docs = embed_batch(known, config.provider);
    const DocumentIndex index(docs);

    ExperimentResult out;
    out.documents = index.size();
    out.core_size = config.core.resolve_k(index.size());

    DetectorConfig dc{config.provider, config.core, config.block_mode, config.workers};
    const PeriodOutput period =
        detect_period(split.test, rules, index, dc, std::numeric_limits<double>::infinity());
    out.stats = period.stats;

    if (config.block_mode) {
        std::vector<std::string> order;
        std::map<std::string, LabeledScore> by_block;
        for (std::size_t i = 0; i < split.test.size(); ++i) {
            const auto& res = period.results[i];
            auto [it, inserted] = by_block.try_emplace(*res.block_id, LabeledScore{res.abnormal_score, Label::normal});
            if (inserted) order.push_back(*res.block_id);
            if (!split.test[i].label) {
                throw ConfigError("record " + std::to_string(split.test[i].index) + " has no label");
            }
            if (is_abnormal(split.test[i])) it->second.label = Label::abnormal;
        }
        for (const auto& b : order) out.scores.push_back(by_block.at(b));
    } else {
        for (std::size_t i = 0; i < split.test.size(); ++i) {
            if (!split.test[i].label) {
                throw ConfigError("record " + std::to_string(split.test[i].index) + " has no label");
            }
            out.scores.push_back({period.results[i].abnormal_score, *split.test[i].label});
        }
    }
    out.report = evaluate_at_best(out.scores);
    out.report.config_json = config.to_json();
    return out;
}

AblationAxis parse_axis(std::string_view s) {
    if (s == "core_ratios") return AblationAxis::core_ratios;
    if (s == "core_sizes") return AblationAxis::core_sizes;
    if (s == "known_ratios") return AblationAxis::known_ratios;
    if (s == "score_modes") return AblationAxis::score_modes;
    if (s == "feature_modes") return AblationAxis::feature_modes;
    throw ConfigError("unknown ablation axis \"" + std::string(s) + "\"");
}

std::string_view to_string(AblationAxis a) {
    switch (a) {
        case AblationAxis::core_ratios: return "core_ratios";
        case AblationAxis::core_sizes: return "core_sizes";
        case AblationAxis::known_ratios: return "known_ratios";
        case AblationAxis::score_modes: return "score_modes";
        case AblationAxis::feature_modes: return "feature_modes";
    }
    return "";
}

std::vector<AblationCell> ablate(std::span<const RawLogRecord> corpus, const RuleSet& rules, AblationAxis axis,
                                 std::span<const std::string> values, const ExperimentConfig& base) {
    if (values.empty()) {
        throw ConfigError("ablation needs at least one value");
    }
    std::vector<AblationCell> cells;
    for (const auto& value : values) {
        ExperimentConfig cfg = base;
        switch (axis) {
            case AblationAxis::core_ratios: {
                const CoreSetConfig modes = cfg.core;
                cfg.core = CoreSetConfig::with_ratio(parse_number(value));
                cfg.core.feature_mode = modes.feature_mode;
                cfg.core.score_mode = modes.score_mode;
                cfg.core.aggregation = modes.aggregation;
                break;
            }
            case AblationAxis::core_sizes: {
                const CoreSetConfig modes = cfg.core;
                std::size_t k;
                if (value == "all") {
                    const Split split = split_corpus(corpus, cfg.train_fraction, cfg.block_mode);
                    k = build_known_db(split.known_normal, rules, cfg).size();
                } else {
                    const double v = parse_number(value);
                    if (!(v >= 1.0) || v != std::floor(v)) {
                        throw ConfigError("core size must be a positive integer or \"all\"");
                    }
                    k = static_cast<std::size_t>(v);
                }
                cfg.core = CoreSetConfig::with_k(k);
                cfg.core.feature_mode = modes.feature_mode;
                cfg.core.score_mode = modes.score_mode;
                cfg.core.aggregation = modes.aggregation;
                break;
            }
            case AblationAxis::known_ratios:
                cfg.known_ratio = parse_number(value);
                break;
            case AblationAxis::score_modes:
                cfg.core.score_mode = parse_score_mode(value);
                break;
            case AblationAxis::feature_modes:
                cfg.core.feature_mode = parse_feature_mode(value);
                break;
        }
        cells.push_back({std::string(to_string(axis)), value, run_experiment(corpus, rules, cfg)});
    }
    return cells;
}

namespace {

std::string fmt(double v) {
    if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
    nlohmann::json j = v;
    return j.dump();
}

}  // namespace

std::string ablation_csv(std::span<const AblationCell> cells, bool include_timing) {
    std::ostringstream out;
    out << "axis,value,documents,core_size,unique_queries,best_f1,best_threshold,auroc,precision,recall";
    if (include_timing) out << ",scoring_seconds";
    out << '\n';
    for (const auto& c : cells) {
        const auto& r = c.result.report;
        out << c.axis << ',' << c.value << ',' << c.result.documents << ',' << c.result.core_size << ','
            << c.result.stats.unique_queries << ',' << fmt(r.best.f1) << ',' << fmt(r.best.threshold) << ','
            << (r.auroc ? fmt(*r.auroc) : "") << ',' << fmt(r.at_threshold.precision) << ','
            << fmt(r.at_threshold.recall);
        if (include_timing) out << ',' << fmt(c.result.stats.scoring_seconds);
        out << '\n';
    }
    return out.str();
}

std::string ablation_json(std::span<const AblationCell> cells, bool include_timing) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& c : cells) {
        nlohmann::ordered_json j;
        j["axis"] = c.axis;
        j["value"] = c.value;
        j["documents"] = c.result.documents;
        j["core_size"] = c.result.core_size;
        j["unique_queries"] = c.result.stats.unique_queries;
        j["report"] = nlohmann::ordered_json::parse(to_json(c.result.report));
        if (include_timing) j["scoring_seconds"] = c.result.stats.scoring_seconds;
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

std::string ablation_text(std::span<const AblationCell> cells, bool include_timing) {
    std::ostringstream out;
    char line[200];
    std::snprintf(line, sizeof line, "%-14s %-14s %9s %6s %8s %9s %9s", "axis", "value", "docs", "k", "queries",
                  "best_f1", "auroc");
    out << line << (include_timing ? "   scoring_s\n" : "\n");
    for (const auto& c : cells) {
        const auto& r = c.result.report;
        std::snprintf(line, sizeof line, "%-14s %-14s %9zu %6zu %8zu %9.4f %9s", c.axis.c_str(), c.value.c_str(),
                      c.result.documents, c.result.core_size, c.result.stats.unique_queries, r.best.f1,
                      r.auroc ? fmt(std::round(*r.auroc * 1e4) / 1e4).c_str() : "n/a");
        out << line;
        if (include_timing) {
            std::snprintf(line, sizeof line, " %11.6f", c.result.stats.scoring_seconds);
            out << line;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace rapidlog
