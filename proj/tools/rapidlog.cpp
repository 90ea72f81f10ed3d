// rapidlog: command-line front end.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rapidlog/detector.hpp"
#include "rapidlog/embedding.hpp"
#include "rapidlog/errors.hpp"
#include "rapidlog/evaluation.hpp"
#include "rapidlog/experiment.hpp"
#include "rapidlog/ingest.hpp"
#include "rapidlog/sequence_store.hpp"
#include "rapidlog/synthetic.hpp"

namespace rl = rapidlog;
using json = nlohmann::ordered_json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_data = 2;

struct Common {
    int workers = 1;
};

struct InputOpts {
    std::string format = "jsonl";
    std::string rules;
};

struct CoreOpts {
    double core_ratio = 0.01;
    std::optional<std::size_t> core_k;
    std::string score_mode = "nearest_only";
    std::string feature_mode = "all_tokens";
    std::string aggregation = "sum";

    rl::CoreSetConfig build() const {
        rl::CoreSetConfig c = core_k ? rl::CoreSetConfig::with_k(*core_k) : rl::CoreSetConfig::with_ratio(core_ratio);
        c.score_mode = rl::parse_score_mode(score_mode);
        c.feature_mode = rl::parse_feature_mode(feature_mode);
        c.aggregation = rl::parse_aggregation(aggregation);
        return c;
    }
};

struct EmbedOpts {
    std::uint32_t dim = 32;
    std::optional<std::size_t> max_tokens;
    std::uint64_t seed = 0;
};

const CLI::Validator unit_interval_open_closed(
    [](std::string& s) -> std::string {
        double v = 0;
        try {
            std::size_t used = 0;
            v = std::stod(s, &used);
            if (used != s.size()) return "not a number: " + s;
        } catch (const std::exception&) {
            return "not a number: " + s;
        }
        if (!(v > 0.0 && v <= 1.0)) return "value " + s + " not in (0, 1]";
        return {};
    },
    "(0,1]");

const CLI::Validator unit_interval_open(
    [](std::string& s) -> std::string {
        double v = 0;
        try {
            std::size_t used = 0;
            v = std::stod(s, &used);
            if (used != s.size()) return "not a number: " + s;
        } catch (const std::exception&) {
            return "not a number: " + s;
        }
        if (!(v > 0.0 && v < 1.0)) return "value " + s + " not in (0, 1)";
        return {};
    },
    "(0,1)");

rl::InputFormat input_format(const std::string& s) { return s == "plain" ? rl::InputFormat::plain : rl::InputFormat::jsonl; }

rl::RuleSet load_rules(const InputOpts& in) { return in.rules.empty() ? rl::RuleSet::defaults() : rl::RuleSet::load(in.rules); }

std::vector<rl::RawLogRecord> read_records(const std::string& path, const InputOpts& in) {
    auto parsed = rl::parse_records_file(path, input_format(in.format));
    for (const auto& r : parsed.rejections) {
        std::cerr << "warning: " << path << ": " << r.what() << '\n';
    }
    return std::move(parsed.records);
}

void add_input_opts(CLI::App* sub, InputOpts& in) {
    sub->add_option("--format", in.format, "Input format")->check(CLI::IsMember({"jsonl", "plain"}));
    sub->add_option("--rules", in.rules, "Mask rules file (JSON array of {header, pattern, priority})")
        ->check(CLI::ExistingFile);
}

void add_core_opts(CLI::App* sub, CoreOpts& core) {
    sub->add_option("--core-ratio", core.core_ratio, "Core-set size as a fraction of |D|")
        ->check(unit_interval_open_closed)
        ->envname("RAPIDLOG_CORE_RATIO");
    sub->add_option("--core-k", core.core_k, "Absolute core-set size; overrides --core-ratio")
        ->check(CLI::PositiveNumber);
    sub->add_option("--score-mode", core.score_mode)->check(CLI::IsMember({"nearest_only", "core_set_mean"}));
    sub->add_option("--feature-mode", core.feature_mode)->check(CLI::IsMember({"all_tokens", "cls_only"}));
    sub->add_option("--aggregation", core.aggregation)->check(CLI::IsMember({"sum", "mean"}));
}

void add_embed_opts(CLI::App* sub, EmbedOpts& e) {
    sub->add_option("--dim", e.dim, "Hash provider dimensionality / expected file dimensionality")
        ->check(CLI::Range(2u, 65536u));
    sub->add_option("--max-tokens", e.max_tokens, "Row cap per sequence including CLS (default 128, 512 in block mode)")
        ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
    sub->add_option("--seed", e.seed, "Hash provider seed")->envname("RAPIDLOG_SEED");
}

rl::ProviderConfig hash_provider(const EmbedOpts& e, bool block_mode) {
    rl::ProviderConfig p;
    p.provider = rl::Provider::hash;
    p.dim = e.dim;
    p.max_tokens = e.max_tokens ? *e.max_tokens : (block_mode ? 512 : 128);
    p.seed = e.seed;
    p.validate();
    return p;
}

rl::ProviderConfig file_provider(const std::string& path, const EmbedOpts& e, bool block_mode) {
    rl::ProviderConfig p = hash_provider(e, block_mode);
    p.provider = rl::Provider::file;
    p.file_path = path;
    return p;
}

// Echo of the effective configuration: every option of the active
// subcommand (given or defaulted) plus the global ones. The result can be fed
// back through --config to replay the run.
json echo_config(const CLI::App& app, const CLI::App& sub) {
    json j;
    j["command"] = sub.get_name();
    auto add = [&](const CLI::App& owner) {
        for (const CLI::Option* opt : owner.get_options()) {
            const std::string name = opt->get_single_name();
            if (name.empty() || name == "help" || name == "config" || opt->get_positional()) continue;
            std::string value;
            if (opt->count() > 0) {
                const auto& res = opt->results();
                if (res.empty()) continue;
                if (opt->get_expected_max() > 1) {
                    value = CLI::detail::join(res, ",");
                } else {
                    value = res.back();
                }
            } else {
                value = opt->get_default_str();
            }
            if (opt->get_expected_max() == 0 || value == "true" || value == "false") {
                j[name] = value == "true" || value == "1";
                continue;
            }
            if (value.empty()) continue;
            try {
                std::size_t used = 0;
                const double d = std::stod(value, &used);
                if (used == value.size()) {
                    const auto parsed = json::parse(value, nullptr, false);
                    j[name] = parsed.is_number() ? parsed : json(d);
                    continue;
                }
            } catch (const std::exception&) {
            }
            j[name] = value;
        }
    };
    add(app);
    add(sub);
    return j;
}

// Expands `--config FILE` into flags placed before the user's own arguments,
// so that explicit flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::optional<std::string> path;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (!path) return args;

    std::ifstream in(*path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + *path);
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::exception& e) {
        throw CLI::ValidationError("--config", std::string("malformed JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw CLI::ValidationError("--config", "expected a JSON object");

    std::vector<std::string> out;
    const bool command_given = !rest.empty() && rest.front().rfind("-", 0) != 0;
    if (command_given) {
        out.push_back(rest.front());
    } else if (cfg.contains("command")) {
        out.push_back(cfg["command"].get<std::string>());
    }
    for (const auto& [key, value] : cfg.items()) {
        if (key == "command") continue;
        std::string v;
        if (value.is_string()) {
            v = value.get<std::string>();
        } else {
            v = value.dump();
        }
        out.push_back("--" + key + "=" + v);
    }
    out.insert(out.end(), rest.begin() + (command_given ? 1 : 0), rest.end());
    return out;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw rl::Error("cannot write " + path);
    return file;
}

void check_written(const std::string& path, std::ofstream& file) {
    if (file.is_open()) {
        file.close();
        if (!file) throw rl::Error("error writing " + path);
    }
}

std::vector<rl::LabeledScore> labeled(std::span<const rl::RawLogRecord> records,
                                      std::span<const rl::DetectionResult> results, bool block_mode) {
    std::vector<rl::LabeledScore> out;
    std::map<std::string, std::size_t> block_pos;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].label) {
            throw rl::ConfigError("record " + std::to_string(records[i].index) + " has no label");
        }
        if (block_mode) {
            auto [it, inserted] = block_pos.try_emplace(*results[i].block_id, out.size());
            if (inserted) out.push_back({results[i].abnormal_score, rl::Label::normal});
            if (records[i].label == rl::Label::abnormal) out[it->second].label = rl::Label::abnormal;
        } else {
            out.push_back({results[i].abnormal_score, *records[i].label});
        }
    }
    return out;
}

struct DetectOpts {
    std::string db;
    std::string embeddings;
    std::string test;
    std::string holdout;
    std::string threshold_policy = "quantile:0.999";
    std::string query_provider = "hash";
    std::string query_embeddings;
    std::string out;
    bool block_mode = false;
    std::size_t period_size = 0;
    bool stats = false;
};

struct Detection {
    std::vector<rl::RawLogRecord> records;
    std::vector<rl::DetectionResult> results;
};

Detection run_detect(const DetectOpts& d, const InputOpts& in, const CoreOpts& core_opts, const EmbedOpts& emb,
                     const Common& common) {
    const auto rules = load_rules(in);
    const auto [db, lookup] = rl::load(d.db);
    if (db.empty()) throw rl::ConfigError("document database " + d.db + " is empty");

    const rl::ProviderConfig doc_provider =
        d.embeddings.empty() ? hash_provider(emb, d.block_mode) : file_provider(d.embeddings, emb, d.block_mode);
    const rl::EmbeddingMap docs = rl::embed_batch(db, doc_provider);
    const rl::DocumentIndex index(docs);

    rl::DetectorConfig config;
    config.provider = d.query_provider == "file" ? file_provider(d.query_embeddings, emb, d.block_mode)
                                                 : hash_provider(emb, d.block_mode);
    if (d.query_provider == "file" && d.query_embeddings.empty()) {
        throw rl::ConfigError("--query-provider file needs --query-embeddings");
    }
    config.core = core_opts.build();
    config.core.resolve_k(index.size());
    config.block_mode = d.block_mode;
    config.workers = common.workers;

    const auto policy = rl::ThresholdPolicy::parse(d.threshold_policy);
    double threshold = policy.value;
    if (policy.kind == rl::ThresholdPolicy::Kind::normal_quantile) {
        std::vector<double> calibration;
        if (!d.holdout.empty()) {
            const auto holdout = read_records(d.holdout, in);
            calibration = rl::holdout_scores(holdout, rules, index, config);
        } else {
            calibration = rl::leave_one_out_scores(docs, index, config.core, common.workers);
        }
        threshold = rl::choose_threshold(calibration, policy);
    }

    Detection det;
    det.records = read_records(d.test, in);
    const std::size_t period = d.period_size == 0 ? std::max<std::size_t>(det.records.size(), 1) : d.period_size;
    rl::PeriodStats total;
    for (std::size_t start = 0; start < det.records.size(); start += period) {
        const std::size_t n = std::min(period, det.records.size() - start);
        auto out = rl::detect_period(std::span(det.records).subspan(start, n), rules, index, config, threshold);
        det.results.insert(det.results.end(), out.results.begin(), out.results.end());
        total.records += out.stats.records;
        total.unique_queries += out.stats.unique_queries;
        total.scoring_passes += out.stats.scoring_passes;
        total.distance_evaluations += out.stats.distance_evaluations;
        total.embed_seconds += out.stats.embed_seconds;
        total.scoring_seconds += out.stats.scoring_seconds;
    }
    if (d.stats) {
        json s;
        s["documents"] = index.size();
        s["threshold"] = threshold;
        s["records"] = total.records;
        s["unique_queries"] = total.unique_queries;
        s["scoring_passes"] = total.scoring_passes;
        s["distance_evaluations"] = total.distance_evaluations;
        s["embed_seconds"] = total.embed_seconds;
        s["scoring_seconds"] = total.scoring_seconds;
        std::cerr << s.dump() << '\n';
    }
    return det;
}

void add_detect_opts(CLI::App* sub, DetectOpts& d, bool need_out) {
    sub->add_option("--db", d.db, "Known-normal database (RPDB)")->required()->check(CLI::ExistingFile);
    sub->add_option("--embeddings", d.embeddings, "Embeddings of the database (RPDE); hash-embedded when omitted")
        ->check(CLI::ExistingFile);
    sub->add_option("--test", d.test, "Test-period records")->required()->check(CLI::ExistingFile);
    sub->add_option("--threshold-policy", d.threshold_policy, "fixed:<delta> or quantile:<level>");
    sub->add_option("--holdout", d.holdout, "Known-normal hold-out records for quantile calibration")
        ->check(CLI::ExistingFile);
    sub->add_option("--query-provider", d.query_provider)->check(CLI::IsMember({"hash", "file"}));
    sub->add_option("--query-embeddings", d.query_embeddings, "RPDE keyed by the test period's sequence ids")
        ->check(CLI::ExistingFile);
    sub->add_flag("--block-mode", d.block_mode, "Score blocks (records grouped by block_id)");
    sub->add_option("--period-size", d.period_size, "Records per test period (0 = whole file)");
    sub->add_flag("--stats", d.stats, "Print scoring counters to stderr");
    if (need_out) sub->add_option("--out", d.out, "Results JSONL (default stdout)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training-free log anomaly detection by retrieval over known-normal logs"};
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    Common common;
    app.add_option("--workers", common.workers, "Worker threads")
        ->check(CLI::Range(1, 1024))
        ->envname("RAPIDLOG_WORKERS");
    std::string config_path;
    app.add_option("--config", config_path, "Replay a configuration echoed by an earlier run");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic log stream");
    rl::SyntheticSpec spec;
    std::string vocab = "per_type";
    std::size_t block_size = 0;
    std::string synth_out;
    synth->add_option("--types", spec.n_types)->check(CLI::Range(std::size_t{2}, std::size_t{1} << 24));
    synth->add_option("--logs-per-type", spec.logs_per_type)->check(CLI::PositiveNumber);
    synth->add_option("--anomaly-rate", spec.anomaly_rate)->check(CLI::Range(0.0, 0.4999999));
    synth->add_option("--seed", spec.seed);
    synth->add_option("--vocabulary", vocab)->check(CLI::IsMember({"per_type", "shared"}));
    synth->add_option("--block-size", block_size, "Assign block ids to runs of this many records (0 = none)");
    synth->add_option("--out", synth_out, "Output JSONL (default stdout)");

    // build-db
    auto* build = app.add_subcommand("build-db", "Build the known-normal database from logs");
    std::string build_input;
    std::string build_out;
    bool build_block = false;
    InputOpts build_in;
    build->add_option("--input", build_input)->required()->check(CLI::ExistingFile);
    add_input_opts(build, build_in);
    build->add_option("--out", build_out)->required();
    build->add_flag("--block-mode", build_block, "Documents are block canonical texts");

    // embed
    auto* embed = app.add_subcommand("embed", "Embed a database into an RPDE file");
    std::string embed_db;
    std::string embed_provider = "hash";
    std::string embed_source;
    std::string embed_out;
    bool embed_block = false;
    EmbedOpts embed_opts;
    embed->add_option("--db", embed_db)->required()->check(CLI::ExistingFile);
    embed->add_option("--provider", embed_provider)->check(CLI::IsMember({"hash", "file"}));
    embed->add_option("--source", embed_source, "RPDE from an external model (file provider)")
        ->check(CLI::ExistingFile);
    add_embed_opts(embed, embed_opts);
    embed->add_flag("--block-mode", embed_block, "Default --max-tokens to 512");
    embed->add_option("--out", embed_out)->required();

    // detect
    auto* detect = app.add_subcommand("detect", "Score a test period against the known-normal database");
    DetectOpts detect_opts;
    InputOpts detect_in;
    CoreOpts detect_core;
    EmbedOpts detect_emb;
    add_detect_opts(detect, detect_opts, true);
    add_input_opts(detect, detect_in);
    add_core_opts(detect, detect_core);
    add_embed_opts(detect, detect_emb);

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate detection results against labels");
    std::string eval_results;
    std::string eval_labels;
    std::string eval_corpus;
    std::string eval_db;
    std::string eval_test;
    bool eval_best = false;
    bool eval_auroc = false;
    bool eval_json = false;
    double train_fraction = 0.8;
    double known_ratio = 1.0;
    std::uint64_t eval_split_seed = 0;
    bool eval_block = false;
    DetectOpts eval_det;
    InputOpts eval_in;
    CoreOpts eval_core;
    EmbedOpts eval_emb;
    eval->add_option("--results", eval_results, "Results JSONL from detect")->check(CLI::ExistingFile);
    eval->add_option("--labels", eval_labels, "Labeled records matching the results")->check(CLI::ExistingFile);
    eval->add_option("--db", eval_db, "Known-normal database (end-to-end mode)")->check(CLI::ExistingFile);
    eval->add_option("--test", eval_test, "Labeled test records (end-to-end mode)")->check(CLI::ExistingFile);
    eval->add_option("--corpus", eval_corpus, "Labeled stream to split into history and test")
        ->check(CLI::ExistingFile);
    eval->add_option("--embeddings", eval_det.embeddings)->check(CLI::ExistingFile);
    eval->add_option("--threshold-policy", eval_det.threshold_policy);
    eval->add_option("--holdout", eval_det.holdout)->check(CLI::ExistingFile);
    eval->add_flag("--block-mode", eval_block);
    eval->add_option("--train-fraction", train_fraction)->check(unit_interval_open);
    eval->add_option("--known-ratio", known_ratio)->check(unit_interval_open_closed);
    eval->add_option("--split-seed", eval_split_seed, "Seed for known-ratio sampling");
    eval->add_flag("--best-f1", eval_best, "Print best F1 and its threshold");
    eval->add_flag("--auroc", eval_auroc, "Print AUROC");
    eval->add_flag("--json", eval_json, "Full report as JSON");
    add_input_opts(eval, eval_in);
    add_core_opts(eval, eval_core);
    add_embed_opts(eval, eval_emb);

    // ablate
    auto* abl = app.add_subcommand("ablate", "Sweep one setting over a labeled corpus");
    std::string abl_corpus;
    std::string abl_axis;
    std::vector<std::string> abl_values;
    std::string abl_format = "text";
    std::string abl_out;
    bool abl_timing = false;
    bool abl_block = false;
    double abl_train = 0.8;
    double abl_known = 1.0;
    std::uint64_t abl_seed = 0;
    InputOpts abl_in;
    CoreOpts abl_core;
    EmbedOpts abl_emb;
    abl->add_option("--corpus", abl_corpus)->required()->check(CLI::ExistingFile);
    abl->add_option("--axis", abl_axis)
        ->required()
        ->check(CLI::IsMember({"core_ratios", "core_sizes", "known_ratios", "score_modes", "feature_modes"}));
    abl->add_option("--values", abl_values, "Comma-separated values")->required()->delimiter(',');
    abl->add_option("--report-format", abl_format)->check(CLI::IsMember({"text", "csv", "json"}));
    abl->add_option("--out", abl_out);
    abl->add_flag("--timing", abl_timing, "Include scoring wall time (not reproducible)");
    abl->add_flag("--block-mode", abl_block);
    abl->add_option("--train-fraction", abl_train)->check(unit_interval_open);
    abl->add_option("--known-ratio", abl_known)->check(unit_interval_open_closed);
    abl->add_option("--split-seed", abl_seed);
    add_input_opts(abl, abl_in);
    add_core_opts(abl, abl_core);
    add_embed_opts(abl, abl_emb);

    // coverage
    auto* cov = app.add_subcommand("coverage", "Fraction of test sequences and tokens seen in the database");
    std::string cov_db;
    std::string cov_test;
    InputOpts cov_in;
    cov->add_option("--db", cov_db)->required()->check(CLI::ExistingFile);
    cov->add_option("--test", cov_test)->required()->check(CLI::ExistingFile);
    add_input_opts(cov, cov_in);

    std::vector<std::string> args;
    try {
        args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    CLI::App* active = app.get_subcommands().front();
    std::cerr << echo_config(app, *active).dump() << '\n';

    try {
        if (active == synth) {
            spec.vocabulary = vocab == "shared" ? rl::Vocabulary::shared : rl::Vocabulary::per_type;
            auto records = rl::gen_synthetic(spec);
            if (block_size > 0) {
                for (std::size_t i = 0; i < records.size(); ++i) {
                    records[i].block_id = "blk_" + std::to_string(i / block_size);
                }
            }
            std::ofstream file;
            rl::write_records_jsonl(open_out(synth_out, file), records);
            check_written(synth_out, file);
        } else if (active == build) {
            const auto rules = load_rules(build_in);
            auto records = read_records(build_input, build_in);
            // Records labeled abnormal are not known-normal; in block mode
            // their whole block goes.
            std::set<std::string> bad_blocks;
            if (build_block) {
                for (const auto& r : records) {
                    if (r.label == rl::Label::abnormal && r.block_id) bad_blocks.insert(*r.block_id);
                }
            }
            std::vector<rl::RawLogRecord> normal;
            std::size_t dropped = 0;
            for (auto& r : records) {
                const bool bad = r.label == rl::Label::abnormal || (r.block_id && bad_blocks.count(*r.block_id));
                if (bad) {
                    ++dropped;
                } else {
                    normal.push_back(std::move(r));
                }
            }
            if (dropped > 0) std::cerr << "note: skipped " << dropped << " abnormal records\n";
            rl::SequenceDB db;
            rl::LookupTable lookup;
            if (build_block) {
                lookup.ids.resize(normal.size());
                const auto views = rl::build_block_views(normal, rules);
                std::map<std::size_t, std::size_t> position;
                for (std::size_t i = 0; i < normal.size(); ++i) position[normal[i].index] = i;
                for (const auto& v : views) {
                    const rl::SeqId id = db.intern(v.canonical_text);
                    for (auto m : v.member_indices) lookup.ids[position.at(m)] = id;
                }
            } else {
                std::tie(db, lookup) = rl::build_db(rl::apply_masks(normal, rules));
            }
            rl::persist(db, lookup, build_out);
            std::cerr << "records=" << normal.size() << " unique=" << db.size() << '\n';
        } else if (active == embed) {
            const auto [db, lookup] = rl::load(embed_db);
            if (db.empty()) throw rl::ConfigError("database " + embed_db + " is empty");
            rl::ProviderConfig p = embed_provider == "file" ? file_provider(embed_source, embed_opts, embed_block)
                                                            : hash_provider(embed_opts, embed_block);
            if (embed_provider == "file" && embed_source.empty()) {
                throw rl::ConfigError("--provider file needs --source");
            }
            p.normalize_rows = false;
            rl::write_embedding_file(embed_out, rl::embed_batch(db, p));
        } else if (active == detect) {
            const auto det = run_detect(detect_opts, detect_in, detect_core, detect_emb, common);
            std::ofstream file;
            rl::write_results_jsonl(open_out(detect_opts.out, file), det.results);
            check_written(detect_opts.out, file);
        } else if (active == eval) {
            rl::EvalReport report;
            if (!eval_corpus.empty()) {
                rl::ExperimentConfig cfg;
                cfg.provider = hash_provider(eval_emb, eval_block);
                cfg.core = eval_core.build();
                cfg.known_ratio = known_ratio;
                cfg.train_fraction = train_fraction;
                cfg.seed = eval_split_seed;
                cfg.workers = common.workers;
                cfg.block_mode = eval_block;
                const auto corpus = read_records(eval_corpus, eval_in);
                report = rl::run_experiment(corpus, load_rules(eval_in), cfg).report;
            } else if (!eval_db.empty() || !eval_test.empty()) {
                if (eval_db.empty() || eval_test.empty()) {
                    throw CLI::RequiredError("end-to-end eval needs both --db and --test");
                }
                eval_det.db = eval_db;
                eval_det.test = eval_test;
                eval_det.block_mode = eval_block;
                const auto det = run_detect(eval_det, eval_in, eval_core, eval_emb, common);
                const auto scores = labeled(det.records, det.results, eval_block);
                report = rl::evaluate(scores, det.results.empty() ? 0.0 : det.results.front().threshold_used);
            } else if (!eval_results.empty() && !eval_labels.empty()) {
                const auto labels = read_records(eval_labels, eval_in);
                std::ifstream in(eval_results);
                if (!in) throw rl::Error("cannot read " + eval_results);
                std::vector<rl::LabeledScore> scores;
                std::string line;
                std::size_t line_no = 0;
                double threshold = 0.0;
                while (std::getline(in, line)) {
                    ++line_no;
                    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                    json r;
                    try {
                        r = json::parse(line);
                    } catch (const json::exception& e) {
                        throw rl::ParseError(line_no, std::string("malformed JSON: ") + e.what());
                    }
                    const auto index = r.at("index").get<std::size_t>();
                    if (index >= labels.size() || !labels[index].label) {
                        throw rl::ParseError(line_no, "no label for record " + std::to_string(index));
                    }
                    const double score = r.at("score").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                                  : r.at("score").get<double>();
                    threshold = r.at("threshold").get<double>();
                    scores.push_back({score, *labels[index].label});
                }
                report = rl::evaluate(scores, threshold);
            } else {
                throw CLI::RequiredError("eval needs --results and --labels, --db and --test, or --corpus");
            }
            if (eval_json) {
                std::cout << rl::to_json(report) << '\n';
            } else if (eval_best || eval_auroc) {
                char line[128];
                if (eval_best) {
                    std::snprintf(line, sizeof line, "best_f1 %.6f threshold %.6g\n", report.best.f1,
                                  report.best.threshold);
                    std::cout << line;
                }
                if (eval_auroc) {
                    if (report.auroc) {
                        std::snprintf(line, sizeof line, "auroc %.6f\n", *report.auroc);
                    } else {
                        std::snprintf(line, sizeof line, "auroc undefined\n");
                    }
                    std::cout << line;
                }
            } else {
                std::cout << rl::to_text(report);
            }
        } else if (active == abl) {
            rl::ExperimentConfig cfg;
            cfg.provider = hash_provider(abl_emb, abl_block);
            cfg.core = abl_core.build();
            cfg.known_ratio = abl_known;
            cfg.train_fraction = abl_train;
            cfg.seed = abl_seed;
            cfg.workers = common.workers;
            cfg.block_mode = abl_block;
            const auto corpus = read_records(abl_corpus, abl_in);
            const auto cells = rl::ablate(corpus, load_rules(abl_in), rl::parse_axis(abl_axis), abl_values, cfg);
            std::ofstream file;
            auto& out = open_out(abl_out, file);
            if (abl_format == "csv") {
                out << rl::ablation_csv(cells, abl_timing);
            } else if (abl_format == "json") {
                out << rl::ablation_json(cells, abl_timing) << '\n';
            } else {
                out << rl::ablation_text(cells, abl_timing);
            }
            check_written(abl_out, file);
        } else if (active == cov) {
            const auto [db, lookup] = rl::load(cov_db);
            const auto test = rl::apply_masks(read_records(cov_test, cov_in), load_rules(cov_in));
            const auto c = rl::coverage(db, test);
            json j;
            j["seq_coverage"] = c.seq_coverage;
            j["token_coverage"] = c.token_coverage;
            j["seq_coverage_unique"] = c.seq_coverage_unique;
            j["token_coverage_unique"] = c.token_coverage_unique;
            std::cout << j.dump() << '\n';
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const rl::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
    return exit_ok;
}
