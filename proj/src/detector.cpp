#include "rapidlog/detector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>

#include <nlohmann/json.hpp>

#include "rapidlog/errors.hpp"

namespace rapidlog {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<EmbeddedSequence> as_vector(EmbeddingMap&& map) {
    std::vector<EmbeddedSequence> out;
    out.reserve(map.size());
    for (auto& [id, e] : map) out.push_back(std::move(e));
    return out;
}

}  // namespace

ThresholdPolicy ThresholdPolicy::parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw ConfigError("threshold policy must look like fixed:<delta> or quantile:<level>");
    }
    const std::string kind(text.substr(0, colon));
    const std::string value(text.substr(colon + 1));
    double v;
    try {
        std::size_t used = 0;
        v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
        throw ConfigError("bad threshold value \"" + value + "\"");
    }
    if (kind == "fixed") {
        return fixed(v);
    }
    if (kind == "quantile") {
        if (!(v > 0.0 && v < 1.0)) {
            throw ConfigError("quantile level must be in (0, 1)");
        }
        return quantile(v);
    }
    throw ConfigError("unknown threshold policy \"" + kind + "\"");
}

std::string ThresholdPolicy::to_string() const {
    nlohmann::json v = value;
    return (kind == Kind::fixed ? "fixed:" : "quantile:") + v.dump();
}

std::vector<DetectionResult> allocate(const std::map<SeqId, ScoreRecord>& scores, const LookupTable& lookup,
                                      double threshold) {
    std::vector<DetectionResult> out;
    out.reserve(lookup.ids.size());
    for (std::size_t i = 0; i < lookup.ids.size(); ++i) {
        const SeqId id = lookup.ids[i];
        auto it = scores.find(id);
        if (it == scores.end()) {
            throw AllocationError(id);
        }
        DetectionResult r;
        r.record_index = i;
        r.seq_id = id;
        r.abnormal_score = it->second.abnormal_score;
        r.prediction = r.abnormal_score >= threshold ? Label::abnormal : Label::normal;
        r.threshold_used = threshold;
        r.nearest_doc = it->second.nearest_doc_id;
        out.push_back(std::move(r));
    }
    return out;
}

double choose_threshold(std::span<const double> known_normal_scores, const ThresholdPolicy& policy) {
    if (policy.kind == ThresholdPolicy::Kind::fixed) {
        return policy.value;
    }
    if (!(policy.value > 0.0 && policy.value < 1.0)) {
        throw ConfigError("quantile level must be in (0, 1)");
    }
    if (known_normal_scores.empty()) {
        throw ConfigError("quantile threshold needs at least one known-normal score");
    }
    std::vector<double> s(known_normal_scores.begin(), known_normal_scores.end());
    std::sort(s.begin(), s.end());
    const double pos = policy.value * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return s[lo] + frac * (s[hi] - s[lo]);
}

PeriodOutput detect_period(std::span<const RawLogRecord> records, const RuleSet& rules, const DocumentIndex& docs,
                           const DetectorConfig& config, double threshold) {
    PeriodOutput out;
    out.stats.records = records.size();
    if (records.empty()) {
        return out;
    }

    const auto masked = apply_masks(records, rules);
    std::vector<const std::string*> block_of_record;
    std::vector<BlockView> blocks;
    if (config.block_mode) {
        blocks = build_block_views(records, masked);
        // Each record's query text is its block's canonical text.
        std::map<std::string_view, const BlockView*> by_id;
        for (const auto& b : blocks) {
            by_id.emplace(b.block_id, &b);
            out.queries.intern(b.canonical_text);
        }
        for (const auto& r : records) {
            const BlockView* b = by_id.at(*r.block_id);
            out.lookup.ids.push_back(*out.queries.find(b->canonical_text));
            block_of_record.push_back(&b->block_id);
        }
    } else {
        auto [db, lookup] = build_db(masked);
        out.queries = std::move(db);
        out.lookup = std::move(lookup);
    }
    out.stats.unique_queries = out.queries.size();

    auto t0 = Clock::now();
    auto embedded = as_vector(embed_batch(out.queries, config.provider));
    out.stats.embed_seconds = seconds_since(t0);

    t0 = Clock::now();
    auto scored = score_queries(embedded, docs, config.core, config.workers);
    out.stats.scoring_seconds = seconds_since(t0);
    out.stats.scoring_passes = scored.size();
    for (auto& s : scored) {
        out.stats.distance_evaluations += s.core_set_ids.size();
        const SeqId id = s.query_seq_id;
        out.scores.emplace(id, std::move(s));
    }

    out.results = allocate(out.scores, out.lookup, threshold);
    for (std::size_t i = 0; i < out.results.size(); ++i) {
        out.results[i].record_index = records[i].index;
        if (config.block_mode) {
            out.results[i].block_id = *block_of_record[i];
        }
    }
    return out;
}

std::vector<double> holdout_scores(std::span<const RawLogRecord> records, const RuleSet& rules,
                                   const DocumentIndex& docs, const DetectorConfig& config) {
    const auto period = detect_period(records, rules, docs, config, std::numeric_limits<double>::infinity());
    std::vector<double> out;
    out.reserve(period.results.size());
    for (const auto& r : period.results) out.push_back(r.abnormal_score);
    return out;
}

std::vector<double> leave_one_out_scores(const EmbeddingMap& docs, const DocumentIndex& index,
                                         const CoreSetConfig& config, int workers) {
    std::vector<const EmbeddedSequence*> order;
    for (const auto& [id, e] : docs) order.push_back(&e);
    std::vector<double> out(order.size());
    std::exception_ptr failure;
    const long n = static_cast<long>(order.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(std::max(1, workers))
    for (long i = 0; i < n; ++i) {
        try {
            const auto& e = *order[static_cast<std::size_t>(i)];
            out[static_cast<std::size_t>(i)] = abnormal_score_excluding(e, index, config, e.seq_id).abnormal_score;
        } catch (...) {
#pragma omp critical(rapidlog_loo_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

void write_results_jsonl(std::ostream& out, std::span<const DetectionResult> results) {
    for (const auto& r : results) {
        nlohmann::ordered_json obj;
        obj["index"] = r.record_index;
        if (r.block_id) {
            obj["block_id"] = *r.block_id;
        } else {
            obj["seq_id"] = r.seq_id;
        }
        obj["score"] = r.abnormal_score;
        obj["pred"] = static_cast<int>(r.prediction);
        obj["threshold"] = r.threshold_used;
        obj["nearest_doc"] = r.nearest_doc;
        out << obj.dump() << '\n';
    }
}

}  // namespace rapidlog
