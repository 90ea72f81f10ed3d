#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rapidlog/ingest.hpp"
#include "rapidlog/retrieval.hpp"

namespace rapidlog {

struct DetectionResult {
    std::size_t record_index = 0;
    SeqId seq_id = 0;
    std::optional<std::string> block_id;
    double abnormal_score = 0.0;
    Label prediction = Label::normal;
    double threshold_used = 0.0;
    SeqId nearest_doc = 0;

    bool operator==(const DetectionResult&) const = default;
};

struct ThresholdPolicy {
    enum class Kind { fixed, normal_quantile };
    Kind kind = Kind::normal_quantile;
    double value = 0.999;

    static ThresholdPolicy fixed(double delta) { return {Kind::fixed, delta}; }
    static ThresholdPolicy quantile(double level) { return {Kind::normal_quantile, level}; }

    // "fixed:0.5" or "quantile:0.999".
    static ThresholdPolicy parse(std::string_view text);
    std::string to_string() const;
};

// One result per lookup position, abnormal iff score >= threshold. Throws
// AllocationError naming the first seq_id that has no score.
std::vector<DetectionResult> allocate(const std::map<SeqId, ScoreRecord>& scores, const LookupTable& lookup,
                                      double threshold);

// fixed -> the value; normal_quantile -> the linearly interpolated quantile
// of the known-normal scores (ConfigError on empty input).
double choose_threshold(std::span<const double> known_normal_scores, const ThresholdPolicy& policy);

struct DetectorConfig {
    ProviderConfig provider;
    CoreSetConfig core;
    bool block_mode = false;
    int workers = 1;
};

struct PeriodStats {
    std::size_t records = 0;
    std::size_t unique_queries = 0;
    // One scoring pass per unique query.
    std::size_t scoring_passes = 0;
    std::size_t distance_evaluations = 0;
    double embed_seconds = 0.0;
    double scoring_seconds = 0.0;
};

struct PeriodOutput {
    SequenceDB queries;
    LookupTable lookup;
    std::map<SeqId, ScoreRecord> scores;
    std::vector<DetectionResult> results;
    PeriodStats stats;
};

// Masks the period's records, builds the query database Q and its lookup,
// embeds Q once, scores each unique query against D and allocates the scores
// back to every record. In block mode the unit is the block: its canonical
// text is the query and all members inherit the block's result.
PeriodOutput detect_period(std::span<const RawLogRecord> records, const RuleSet& rules, const DocumentIndex& docs,
                           const DetectorConfig& config, double threshold);

// Per-record scores for a known-normal hold-out, for quantile thresholds.
std::vector<double> holdout_scores(std::span<const RawLogRecord> records, const RuleSet& rules,
                                   const DocumentIndex& docs, const DetectorConfig& config);

// Each document scored against D without itself; a hold-out substitute when
// no separate known-normal sample is available.
std::vector<double> leave_one_out_scores(const EmbeddingMap& docs, const DocumentIndex& index,
                                         const CoreSetConfig& config, int workers);

// JSONL: {index, seq_id | block_id, score, pred, threshold, nearest_doc}.
void write_results_jsonl(std::ostream& out, std::span<const DetectionResult> results);

}  // namespace rapidlog
