#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rapidlog/ingest.hpp"
#include "rapidlog/sequence_store.hpp"

namespace rapidlog {

struct LabeledScore {
    double score = 0.0;
    Label label = Label::normal;
};

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
};

struct PrF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Confusion counts;
    // No predicted positives: precision reported as 0.
    bool precision_undefined = false;
};

// Predicted abnormal iff score >= threshold.
PrF1 prf1(std::span<const LabeledScore> scores, double threshold);

struct BestF1 {
    double f1 = 0.0;
    double threshold = 0.0;
    // No positive labels: best F1 is 0 by convention.
    bool degenerate = false;
};

// Evaluates every distinct score value (and +inf) as the threshold and returns
// the best F1 with the smallest threshold attaining it.
BestF1 best_f1_sweep(std::span<const LabeledScore> scores);

// Mann-Whitney statistic (ties count one half), computed from ranks after a
// sort. Throws ContractError if either class is absent.
double auroc(std::span<const LabeledScore> scores);

struct Coverage {
    // Occurrence-weighted fractions (headline).
    double seq_coverage = 0.0;
    double token_coverage = 0.0;
    // Same ratios over distinct test sequences / distinct test tokens.
    double seq_coverage_unique = 0.0;
    double token_coverage_unique = 0.0;
};

// Fraction of test records whose masked text is in `known`, and fraction of
// test token occurrences whose surface token occurs anywhere in `known`.
Coverage coverage(const SequenceDB& known, std::span<const ProcessedSequence> test);

struct EvalReport {
    std::size_t n = 0;
    std::size_t positives = 0;
    double threshold = 0.0;
    PrF1 at_threshold;
    BestF1 best;
    // Absent when only one class is present.
    std::optional<double> auroc;
    std::string config_json = "{}";
};

// F1/P/R at `threshold` plus the best-F1 sweep and AUROC.
EvalReport evaluate(std::span<const LabeledScore> scores, double threshold);
// Same with the threshold set to the best-F1 threshold.
EvalReport evaluate_at_best(std::span<const LabeledScore> scores);

std::string to_json(const EvalReport& r);
std::string to_text(const EvalReport& r);

}  // namespace rapidlog
