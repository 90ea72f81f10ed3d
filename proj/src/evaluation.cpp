#include "rapidlog/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "rapidlog/errors.hpp"

namespace rapidlog {

namespace {

double f1_of(double precision, double recall) {
    return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

PrF1 from_counts(const Confusion& c) {
    PrF1 r;
    r.counts = c;
    r.precision_undefined = c.tp + c.fp == 0;
    r.precision = r.precision_undefined ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    r.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    r.f1 = f1_of(r.precision, r.recall);
    return r;
}

}  // namespace

PrF1 prf1(std::span<const LabeledScore> scores, double threshold) {
    Confusion c;
    for (const auto& s : scores) {
        const bool predicted = s.score >= threshold;
        const bool actual = s.label == Label::abnormal;
        if (predicted && actual) ++c.tp;
        else if (predicted) ++c.fp;
        else if (actual) ++c.fn;
        else ++c.tn;
    }
    return from_counts(c);
}

BestF1 best_f1_sweep(std::span<const LabeledScore> scores) {
    std::size_t positives = 0;
    for (const auto& s : scores) positives += s.label == Label::abnormal;
    BestF1 best;
    best.threshold = std::numeric_limits<double>::infinity();
    if (positives == 0) {
        best.degenerate = true;
        return best;
    }
    std::vector<LabeledScore> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const LabeledScore& a, const LabeledScore& b) { return a.score > b.score; });

    // Descending sweep: lowering the threshold to each distinct value admits
    // every record with that score at once. At +inf nothing is predicted and
    // F1 is 0, which is the starting point.
    Confusion c;
    c.fn = positives;
    c.tn = sorted.size() - positives;
    std::size_t i = 0;
    while (i < sorted.size()) {
        const double delta = sorted[i].score;
        while (i < sorted.size() && sorted[i].score == delta) {
            if (sorted[i].label == Label::abnormal) {
                ++c.tp;
                --c.fn;
            } else {
                ++c.fp;
                --c.tn;
            }
            ++i;
        }
        const double f1 = from_counts(c).f1;
        if (f1 >= best.f1) {
            best.f1 = f1;
            best.threshold = delta;
        }
    }
    return best;
}

double auroc(std::span<const LabeledScore> scores) {
    std::vector<LabeledScore> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const LabeledScore& a, const LabeledScore& b) { return a.score < b.score; });
    double pos = 0, neg = 0;
    double wins = 0.0;  // sum over positives of (#negatives below + half the tied negatives)
    double neg_below = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        double tie_pos = 0, tie_neg = 0;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) {
            (sorted[j].label == Label::abnormal ? tie_pos : tie_neg) += 1;
            ++j;
        }
        wins += tie_pos * (neg_below + 0.5 * tie_neg);
        neg_below += tie_neg;
        pos += tie_pos;
        neg += tie_neg;
        i = j;
    }
    if (pos == 0 || neg == 0) {
        throw ContractError("AUROC is undefined without both classes");
    }
    return wins / (pos * neg);
}

Coverage coverage(const SequenceDB& known, std::span<const ProcessedSequence> test) {
    if (known.empty()) {
        throw ContractError("coverage needs a non-empty known database");
    }
    std::unordered_set<std::string> vocab;
    for (const auto& text : known.texts()) {
        for (auto& tok : split_tokens(text)) vocab.insert(std::move(tok));
    }
    Coverage c;
    if (test.empty()) {
        return c;
    }
    std::size_t seq_hits = 0, tok_total = 0, tok_hits = 0;
    std::unordered_set<std::string> uniq_seq, uniq_seq_hit, uniq_tok, uniq_tok_hit;
    for (const auto& s : test) {
        const bool hit = known.find(s.text).has_value();
        seq_hits += hit;
        uniq_seq.insert(s.text);
        if (hit) uniq_seq_hit.insert(s.text);
        for (const auto& tok : s.tokens) {
            const bool seen = vocab.contains(tok);
            ++tok_total;
            tok_hits += seen;
            uniq_tok.insert(tok);
            if (seen) uniq_tok_hit.insert(tok);
        }
    }
    c.seq_coverage = static_cast<double>(seq_hits) / static_cast<double>(test.size());
    c.seq_coverage_unique = static_cast<double>(uniq_seq_hit.size()) / static_cast<double>(uniq_seq.size());
    if (tok_total > 0) {
        c.token_coverage = static_cast<double>(tok_hits) / static_cast<double>(tok_total);
        c.token_coverage_unique = static_cast<double>(uniq_tok_hit.size()) / static_cast<double>(uniq_tok.size());
    }
    return c;
}

EvalReport evaluate(std::span<const LabeledScore> scores, double threshold) {
    EvalReport r;
    r.n = scores.size();
    for (const auto& s : scores) r.positives += s.label == Label::abnormal;
    r.threshold = threshold;
    r.at_threshold = prf1(scores, threshold);
    r.best = best_f1_sweep(scores);
    if (r.positives > 0 && r.positives < r.n) {
        r.auroc = auroc(scores);
    }
    return r;
}

EvalReport evaluate_at_best(std::span<const LabeledScore> scores) {
    return evaluate(scores, best_f1_sweep(scores).threshold);
}

namespace {

nlohmann::ordered_json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["n"] = r.n;
    j["positives"] = r.positives;
    j["threshold"] = number_or_null(r.threshold);
    j["precision"] = r.at_threshold.precision;
    j["recall"] = r.at_threshold.recall;
    j["f1"] = r.at_threshold.f1;
    j["precision_undefined"] = r.at_threshold.precision_undefined;
    j["confusion"] = {{"tp", r.at_threshold.counts.tp},
                      {"fp", r.at_threshold.counts.fp},
                      {"tn", r.at_threshold.counts.tn},
                      {"fn", r.at_threshold.counts.fn}};
    j["best_f1"] = r.best.f1;
    j["best_threshold"] = number_or_null(r.best.threshold);
    j["best_f1_degenerate"] = r.best.degenerate;
    j["auroc"] = r.auroc ? nlohmann::ordered_json(*r.auroc) : nlohmann::ordered_json(nullptr);
    j["config"] = nlohmann::ordered_json::parse(r.config_json);
    return j.dump();
}

std::string to_text(const EvalReport& r) {
    std::ostringstream out;
    char line[128];
    auto row = [&](const char* name, double v) {
        std::snprintf(line, sizeof line, "%-16s %12.6f\n", name, v);
        out << line;
    };
    auto count = [&](const char* name, std::size_t v) {
        std::snprintf(line, sizeof line, "%-16s %12zu\n", name, v);
        out << line;
    };
    count("records", r.n);
    count("abnormal", r.positives);
    row("threshold", r.threshold);
    row("precision", r.at_threshold.precision);
    row("recall", r.at_threshold.recall);
    row("f1", r.at_threshold.f1);
    count("tp", r.at_threshold.counts.tp);
    count("fp", r.at_threshold.counts.fp);
    count("tn", r.at_threshold.counts.tn);
    count("fn", r.at_threshold.counts.fn);
    row("best_f1", r.best.f1);
    row("best_threshold", r.best.threshold);
    if (r.auroc) {
        row("auroc", *r.auroc);
    } else {
        std::snprintf(line, sizeof line, "%-16s %12s\n", "auroc", "n/a");
        out << line;
    }
    return out.str();
}

}  // namespace rapidlog
