// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// fails.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rapidlog/detector.hpp"
#include "rapidlog/embedding.hpp"
#include "rapidlog/evaluation.hpp"
#include "rapidlog/experiment.hpp"
#include "rapidlog/rng.hpp"
#include "rapidlog/retrieval.hpp"
#include "rapidlog/sequence_store.hpp"
#include "rapidlog/synthetic.hpp"

using namespace rapidlog;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %-22s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

ExperimentConfig synthetic_config() {
    ExperimentConfig c;
    c.core.aggregation = Aggregation::mean;
    c.seed = 7;
    return c;
}

// Embeds the distinct masked texts of `records` with the hash provider.
std::vector<EmbeddedSequence> embed_unique(std::span<const RawLogRecord> records, const ProviderConfig& provider,
                                           SeqId first_id) {
    auto [db, lookup] = build_db(apply_masks(records, RuleSet::defaults()));
    std::vector<EmbeddedSequence> out;
    for (const auto& [id, e] : embed_batch(db, provider)) {
        out.push_back(e);
        out.back().seq_id = id + first_id;
    }
    return out;
}

Outcome oracle_equivalence() {
    const auto t0 = Clock::now();
    const ProviderConfig provider;
    SyntheticSpec ds{.n_types = 500, .logs_per_type = 1, .anomaly_rate = 0.0, .seed = 11};
    auto [db, lookup] = build_db(apply_masks(gen_synthetic(ds), RuleSet::defaults()));
    if (db.size() != 500) return {false, fmt("D has %zu uniques, expected 500", db.size())};
    const EmbeddingMap docs = embed_batch(db, provider);
    const DocumentIndex index(docs);

    // Half the queries are perturbed instances of D's types, half are
    // unrelated types.
    SyntheticSpec near{.n_types = 500, .logs_per_type = 1, .anomaly_rate = 0.2, .seed = 11};
    SyntheticSpec far{.n_types = 100, .logs_per_type = 1, .anomaly_rate = 0.0, .seed = 12};
    auto near_records = gen_synthetic(near);
    std::vector<RawLogRecord> pool;
    for (const auto& r : near_records) {
        if (r.label == Label::abnormal) pool.push_back(r);
    }
    for (const auto& r : gen_synthetic(far)) pool.push_back(r);
    pool.resize(std::min<std::size_t>(pool.size(), 200));
    const auto queries = embed_unique(pool, provider, 100000);
    if (queries.size() != 200) return {false, fmt("%zu queries, expected 200", queries.size())};

    std::size_t mismatches = 0;
    for (const auto agg : {Aggregation::sum, Aggregation::mean}) {
        CoreSetConfig cfg = CoreSetConfig::with_k(index.size());
        cfg.aggregation = agg;
        for (const auto& q : queries) {
            const auto a = abnormal_score(q, index, cfg);
            const auto b = brute_force_score(q, index, FeatureMode::all_tokens, agg);
            if (!same_bits(a.abnormal_score, b.abnormal_score) || a.nearest_doc_id != b.nearest_doc_id) ++mismatches;
        }
    }
    const double t = seconds_since(t0);
    return {mismatches == 0 && t < 30.0, fmt("mismatches=%zu/400 time=%.2fs (limit 30s)", mismatches, t)};
}

std::vector<RawLogRecord> robustness_corpus() {
    return gen_synthetic(SyntheticSpec{.n_types = 50, .logs_per_type = 100, .anomaly_rate = 0.05, .seed = 7});
}

Outcome core_set_robustness() {
    const auto corpus = robustness_corpus();
    const auto rules = RuleSet::defaults();
    std::vector<double> f1, time;
    for (const double ratio : {1.0, 0.1, 0.01}) {
        auto cfg = synthetic_config();
        cfg.core = CoreSetConfig::with_ratio(ratio);
        cfg.core.aggregation = Aggregation::mean;
        double best_time = std::numeric_limits<double>::infinity();
        ExperimentResult r;
        for (int rep = 0; rep < 7; ++rep) {
            r = run_experiment(corpus, rules, cfg);
            best_time = std::min(best_time, r.stats.scoring_seconds);
        }
        f1.push_back(r.report.best.f1);
        time.push_back(best_time);
    }
    const double spread = *std::max_element(f1.begin(), f1.end()) - *std::min_element(f1.begin(), f1.end());
    const double speed = time[2] / time[0];
    return {spread <= 0.01 && speed <= 0.3,
            fmt("best_f1 1.0/0.1/0.01 = %.4f/%.4f/%.4f spread=%.4f (<=0.01) time_ratio=%.3f (<=0.3)", f1[0], f1[1],
                f1[2], spread, speed)};
}

Outcome nearest_vs_mean() {
    const auto corpus =
        gen_synthetic(SyntheticSpec{.n_types = 50, .logs_per_type = 100, .anomaly_rate = 0.05, .seed = 7});
    const auto rules = RuleSet::defaults();
    auto base = synthetic_config();
    const auto split = split_corpus(corpus, base.train_fraction, false);
    const std::size_t n_docs = build_known_db(split.known_normal, rules, base).size();

    auto run = [&](std::size_t k, ScoreMode mode) {
        auto cfg = base;
        cfg.core = CoreSetConfig::with_k(k);
        cfg.core.aggregation = Aggregation::mean;
        cfg.core.score_mode = mode;
        return run_experiment(corpus, rules, cfg).report.best.f1;
    };
    const double nearest_all = run(n_docs, ScoreMode::nearest_only);
    const double mean_all = run(n_docs, ScoreMode::core_set_mean);
    std::vector<double> small;
    for (const std::size_t k : {2, 5, 10}) small.push_back(run(k, ScoreMode::nearest_only));
    const double spread = *std::max_element(small.begin(), small.end()) - *std::min_element(small.begin(), small.end());
    const bool pass = n_docs >= 10 && nearest_all - mean_all >= 0.2 && spread <= 0.001;
    return {pass, fmt("types=50 |D|=%zu nearest=%.4f mean=%.4f gap=%.4f (>=0.2) k2/5/10=%.4f/%.4f/%.4f", n_docs,
                      nearest_all, mean_all, nearest_all - mean_all, small[0], small[1], small[2])};
}

Outcome known_ratio_robustness() {
    SyntheticSpec spec{.n_types = 200, .logs_per_type = 25, .anomaly_rate = 0.05, .seed = 7};
    spec.vocabulary = Vocabulary::shared;
    const auto corpus = gen_synthetic(spec);
    const auto rules = RuleSet::defaults();
    std::vector<double> f1;
    std::vector<std::size_t> docs;
    for (const double ratio : {1.0, 0.5, 0.1, 0.01}) {
        auto cfg = synthetic_config();
        cfg.known_ratio = ratio;
        const auto r = run_experiment(corpus, rules, cfg);
        f1.push_back(r.report.best.f1);
        docs.push_back(r.documents);
    }
    const double spread = *std::max_element(f1.begin(), f1.end()) - *std::min_element(f1.begin(), f1.end());
    return {spread <= 0.05, fmt("|D|=%zu/%zu/%zu/%zu best_f1=%.4f/%.4f/%.4f/%.4f spread=%.4f (<=0.05)", docs[0],
                                docs[1], docs[2], docs[3], f1[0], f1[1], f1[2], f1[3], spread)};
}

LabeledScore ls(double s, int l) { return {s, l ? Label::abnormal : Label::normal}; }

double pairwise_auroc(std::span<const LabeledScore> s) {
    double num = 0;
    double pairs = 0;
    for (const auto& p : s) {
        if (p.label != Label::abnormal) continue;
        for (const auto& n : s) {
            if (n.label != Label::normal) continue;
            pairs += 1;
            num += p.score > n.score ? 1.0 : (p.score == n.score ? 0.5 : 0.0);
        }
    }
    return num / pairs;
}

Outcome metrics_exactness() {
    std::vector<std::string> bad;
    auto expect = [&](bool ok, const char* what) {
        if (!ok) bad.push_back(what);
    };
    {
        std::vector<LabeledScore> s{ls(0.9, 1), ls(0.1, 0)};
        const auto r = prf1(s, 0.5);
        expect(r.precision == 1.0 && r.recall == 1.0 && r.f1 == 1.0, "prf1 perfect");
    }
    {
        std::vector<LabeledScore> s{ls(0.9, 0), ls(0.1, 1)};
        const auto r = prf1(s, 0.5);
        expect(r.precision == 0.0 && r.recall == 0.0 && r.f1 == 0.0, "prf1 inverted");
    }
    {
        std::vector<LabeledScore> s{ls(0.9, 1), ls(0.6, 0), ls(0.1, 1)};
        const auto r = prf1(s, 0.5);
        expect(r.counts.tp == 1 && r.counts.fp == 1 && r.counts.fn == 1 && r.precision == 0.5 && r.recall == 0.5 &&
                   r.f1 == 0.5,
               "prf1 mixed");
    }
    {
        std::vector<LabeledScore> s{ls(0.1, 0), ls(0.2, 0), ls(0.9, 1)};
        const auto b = best_f1_sweep(s);
        expect(b.f1 == 1.0 && b.threshold == 0.9, "best_f1 separable");
    }
    {
        std::vector<LabeledScore> s{ls(0.1, 0), ls(0.4, 0)};
        const auto b = best_f1_sweep(s);
        expect(b.f1 == 0.0 && b.degenerate, "best_f1 degenerate");
    }
    {
        std::vector<LabeledScore> s{ls(0.5, 1), ls(0.5, 0)};
        const auto b = best_f1_sweep(s);
        expect(b.f1 == 2.0 / 3.0 && b.threshold == 0.5, "best_f1 tie");
    }
    {
        std::vector<LabeledScore> s{ls(0.2, 0), ls(0.3, 0), ls(0.8, 1), ls(0.9, 1)};
        expect(auroc(s) == 1.0, "auroc perfect");
        std::vector<LabeledScore> t{ls(0.4, 0), ls(0.4, 1), ls(0.4, 0), ls(0.4, 1)};
        expect(auroc(t) == 0.5, "auroc ties");
        std::vector<LabeledScore> u{ls(0.9, 1), ls(0.8, 0), ls(0.7, 1), ls(0.1, 0)};
        expect(auroc(u) == 0.75, "auroc mixed");
    }
    std::size_t oracle_mismatch = 0;
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<LabeledScore> s(50);
        for (std::size_t i = 0; i < s.size(); ++i) {
            // Coarse values so that ties are common.
            s[i] = ls(static_cast<double>(rng.below(20)) / 20.0, static_cast<int>(rng.below(2)));
        }
        s[0].label = Label::normal;
        s[1].label = Label::abnormal;
        if (auroc(s) != pairwise_auroc(s)) ++oracle_mismatch;
    }
    std::string detail = fmt("fixtures_failed=%zu auroc_oracle_mismatch=%zu/100", bad.size(), oracle_mismatch);
    for (const auto& b : bad) detail += " [" + b + "]";
    return {bad.empty() && oracle_mismatch == 0, detail};
}

Outcome throughput() {
    const ProviderConfig provider;
    const auto rules = RuleSet::defaults();
    auto [db, lookup] = build_db(
        apply_masks(gen_synthetic(SyntheticSpec{.n_types = 10000, .logs_per_type = 1, .seed = 3}), rules));
    if (db.size() != 10000) return {false, fmt("D has %zu uniques, expected 10000", db.size())};
    const EmbeddingMap docs = embed_batch(db, provider);
    const DocumentIndex index(docs);

    auto test = gen_synthetic(SyntheticSpec{.n_types = 10000, .logs_per_type = 1, .anomaly_rate = 0.3, .seed = 3});
    test.resize(4000);
    const auto queries = embed_unique(test, provider, 1000000);
    const CoreSetConfig cfg = CoreSetConfig::with_ratio(0.01);
    const int workers = omp_get_num_procs();

    score_queries(std::span(queries).first(100), index, cfg, workers);
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 3; ++rep) {
        const auto t0 = Clock::now();
        const auto out = score_queries(queries, index, cfg, workers);
        best = std::min(best, seconds_since(t0));
    }
    const double qps = static_cast<double>(queries.size()) / best;
    return {qps >= 3000.0, fmt("|D|=%zu k=%zu queries=%zu workers=%d %.0f queries/s (>=3000)", index.size(),
                               cfg.resolve_k(index.size()), queries.size(), workers, qps)};
}

std::string pipeline_bytes(int workers) {
    std::ostringstream out;
    const auto rules = RuleSet::defaults();

    const auto corpus = robustness_corpus();
    auto cfg = synthetic_config();
    cfg.workers = workers;
    const auto r = run_experiment(corpus, rules, cfg);
    out << to_json(r.report) << '\n';

    const auto split = split_corpus(corpus, cfg.train_fraction, false);
    auto [db, lookup] = build_db(apply_masks(split.known_normal, rules));
    const auto db_bytes = encode_db(db, lookup);
    out.write(reinterpret_cast<const char*>(db_bytes.data()), static_cast<std::streamsize>(db_bytes.size()));
    const EmbeddingMap docs = embed_batch(db, cfg.provider);
    const auto emb_bytes = encode_embeddings(docs);
    out.write(reinterpret_cast<const char*>(emb_bytes.data()), static_cast<std::streamsize>(emb_bytes.size()));

    const DocumentIndex index(docs);
    DetectorConfig dc{cfg.provider, CoreSetConfig::with_ratio(0.1), false, workers};
    const auto loo = leave_one_out_scores(docs, index, dc.core, workers);
    const double delta = choose_threshold(loo, ThresholdPolicy{});
    const auto period = detect_period(split.test, rules, index, dc, delta);
    write_results_jsonl(out, period.results);

    const std::vector<std::string> values{"1.0", "0.1", "0.01"};
    auto ab = ablate(corpus, rules, AblationAxis::core_ratios, values, cfg);
    out << ablation_csv(ab, false) << ablation_json(ab, false) << ablation_text(ab, false);

    SyntheticSpec blocks{.n_types = 20, .logs_per_type = 30, .anomaly_rate = 0.05, .seed = 5};
    auto block_corpus = gen_synthetic(blocks);
    for (std::size_t i = 0; i < block_corpus.size(); ++i) block_corpus[i].block_id = "blk_" + std::to_string(i / 6);
    auto bcfg = cfg;
    bcfg.block_mode = true;
    bcfg.provider.max_tokens = 512;
    out << to_json(run_experiment(block_corpus, rules, bcfg).report) << '\n';
    return out.str();
}

Outcome determinism() {
    const std::string a = pipeline_bytes(1);
    const std::string b = pipeline_bytes(1);
    const std::string c = pipeline_bytes(8);
    const bool pass = a == b && a == c && !a.empty();
    return {pass, fmt("bytes=%zu rerun_identical=%s workers_1_vs_8_identical=%s", a.size(), a == b ? "yes" : "no",
                      a == c ? "yes" : "no")};
}

}  // namespace

int main() {
    report("oracle_equivalence", oracle_equivalence);
    report("core_set_robustness", core_set_robustness);
    report("nearest_vs_mean", nearest_vs_mean);
    report("known_ratio_robustness", known_ratio_robustness);
    report("metrics_exactness", metrics_exactness);
    report("throughput", throughput);
    report("determinism", determinism);
    std::printf("%d of 7 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
