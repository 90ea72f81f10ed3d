#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rapidlog/detector.hpp"
#include "rapidlog/evaluation.hpp"

namespace rapidlog {

struct ExperimentConfig {
    ProviderConfig provider;
    CoreSetConfig core;
    // Fraction of known-normal unique sequences kept in D (uniform sample
    // without replacement, floor(ratio * uniques) kept).
    double known_ratio = 1.0;
    // Leading fraction of the stream (by record order) treated as history;
    // its normal records form the known-normal set, the rest is the test set.
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    int workers = 1;
    bool block_mode = false;

    // Everything except `workers`, which never changes results.
    std::string to_json() const;
};

struct Split {
    std::vector<RawLogRecord> known_normal;
    std::vector<RawLogRecord> test;
};

// Records are split by position; unlabeled history records count as normal,
// labeled-abnormal history records are dropped. In block mode the split is
// over blocks in first-appearance order and a block is abnormal if any member
// is.
Split split_corpus(std::span<const RawLogRecord> corpus, double train_fraction, bool block_mode);

// Builds D from the known-normal uniques, subsampled to known_ratio.
SequenceDB build_known_db(std::span<const RawLogRecord> known_normal, const RuleSet& rules,
                          const ExperimentConfig& config);

struct ExperimentResult {
    EvalReport report;
    PeriodStats stats;
    std::size_t documents = 0;
    std::size_t core_size = 0;
    std::vector<LabeledScore> scores;
};

// Full pipeline on a labeled corpus: split, build and embed D, score the test
// period, evaluate per record (per block in block mode) at the best-F1
// threshold.
ExperimentResult run_experiment(std::span<const RawLogRecord> corpus, const RuleSet& rules,
                                const ExperimentConfig& config);

enum class AblationAxis { core_ratios, core_sizes, known_ratios, score_modes, feature_modes };

AblationAxis parse_axis(std::string_view s);
std::string_view to_string(AblationAxis a);

struct AblationCell {
    std::string axis;
    std::string value;
    ExperimentResult result;
};

// One experiment per value on the chosen axis, all other settings from
// `base`. core_sizes accepts integers or "all" (k = |D|). Cells run one after
// another so their scoring times are comparable.
std::vector<AblationCell> ablate(std::span<const RawLogRecord> corpus, const RuleSet& rules, AblationAxis axis,
                                 std::span<const std::string> values, const ExperimentConfig& base);

// Timing columns are wall-clock and vary run to run; leave them out when the
// output must be reproducible byte for byte.
std::string ablation_csv(std::span<const AblationCell> cells, bool include_timing);
std::string ablation_json(std::span<const AblationCell> cells, bool include_timing);
std::string ablation_text(std::span<const AblationCell> cells, bool include_timing);

}  // namespace rapidlog
