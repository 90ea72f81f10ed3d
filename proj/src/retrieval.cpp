#include "rapidlog/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "rapidlog/errors.hpp"
#include "rapidlog/kernels.hpp"

namespace rapidlog {

std::string_view to_string(FeatureMode m) { return m == FeatureMode::all_tokens ? "all_tokens" : "cls_only"; }
std::string_view to_string(ScoreMode m) { return m == ScoreMode::nearest_only ? "nearest_only" : "core_set_mean"; }
std::string_view to_string(Aggregation a) { return a == Aggregation::sum ? "sum" : "mean"; }

FeatureMode parse_feature_mode(std::string_view s) {
    if (s == "all_tokens") return FeatureMode::all_tokens;
    if (s == "cls_only") return FeatureMode::cls_only;
    throw ConfigError("unknown feature mode \"" + std::string(s) + "\"");
}

ScoreMode parse_score_mode(std::string_view s) {
    if (s == "nearest_only") return ScoreMode::nearest_only;
    if (s == "core_set_mean") return ScoreMode::core_set_mean;
    throw ConfigError("unknown score mode \"" + std::string(s) + "\"");
}

Aggregation parse_aggregation(std::string_view s) {
    if (s == "sum") return Aggregation::sum;
    if (s == "mean") return Aggregation::mean;
    throw ConfigError("unknown aggregation \"" + std::string(s) + "\"");
}

CoreSetConfig CoreSetConfig::with_k(std::size_t k) {
    CoreSetConfig c;
    c.k = k;
    c.ratio.reset();
    return c;
}

CoreSetConfig CoreSetConfig::with_ratio(double ratio) {
    CoreSetConfig c;
    c.ratio = ratio;
    return c;
}

std::size_t CoreSetConfig::resolve_k(std::size_t n_docs) const {
    if (k.has_value() == ratio.has_value()) {
        throw ConfigError("core set needs exactly one of k or ratio");
    }
    std::size_t resolved;
    if (ratio) {
        if (!(*ratio > 0.0 && *ratio <= 1.0)) {
            throw ConfigError("core ratio must be in (0, 1]");
        }
        // The epsilon keeps products like 0.07 * 100 from rounding up to 8.
        const double raw = std::ceil(*ratio * static_cast<double>(n_docs) - 1e-9);
        resolved = std::max<std::size_t>(1, static_cast<std::size_t>(raw));
    } else {
        resolved = *k;
    }
    if (resolved < 1 || resolved > n_docs) {
        throw ConfigError("core set size " + std::to_string(resolved) + " outside [1, " + std::to_string(n_docs) +
                          "]");
    }
    return resolved;
}

DocumentIndex::DocumentIndex(const EmbeddingMap& docs) {
    if (docs.empty()) {
        throw ContractError("document set is empty");
    }
    dim_ = docs.begin()->second.dim;
    row_begin_.push_back(0);
    col_begin_.push_back(0);
    for (const auto& [id, e] : docs) {
        if (e.dim != dim_) {
            throw ContractError("document dims differ");
        }
        if (e.row_count() == 0) {
            throw ContractError("document " + std::to_string(id) + " has no rows");
        }
        kernels::append_blocked_key(e.knn_key(), ids_.size(), keys_);
        ids_.push_back(id);
        rows_.insert(rows_.end(), e.rows.begin(), e.rows.end());
        for (std::size_t r = 0; r < e.row_count(); ++r) {
            inv_norms_.push_back(kernels::inverse_norm(e.rows.data() + r * dim_, dim_));
        }
        row_begin_.push_back(row_begin_.back() + e.row_count());
        kernels::append_columns(e.rows.data(), inv_norms_.data() + row_begin_[row_begin_.size() - 2], e.row_count(),
                                dim_, cols_, col_inv_norms_);
        col_begin_.push_back(col_begin_.back() + kernels::padded(e.row_count()));
    }
}

namespace {

struct PreparedQuery {
    const EmbeddedSequence* seq;
    std::vector<float> inv_norms;

    explicit PreparedQuery(const EmbeddedSequence& q) : seq(&q), inv_norms(q.row_count()) {
        for (std::size_t r = 0; r < q.row_count(); ++r) {
            inv_norms[r] = kernels::inverse_norm(q.rows.data() + r * q.dim, q.dim);
        }
    }

    kernels::RowBlock block() const { return {seq->rows.data(), inv_norms.data(), seq->row_count()}; }
};

void check_pair(const EmbeddedSequence& q, std::uint32_t doc_dim) {
    if (q.dim != doc_dim) {
        throw ContractError("query dim " + std::to_string(q.dim) + " != document dim " + std::to_string(doc_dim));
    }
    if (q.row_count() == 0) {
        throw ContractError("query " + std::to_string(q.seq_id) + " has no rows");
    }
}

double aggregate(double sum, std::size_t query_rows, Aggregation aggregation) {
    return aggregation == Aggregation::sum ? sum : sum / static_cast<double>(query_rows);
}

double distance_to(const PreparedQuery& q, const DocumentIndex& docs, std::size_t pos, FeatureMode feature_mode,
                   Aggregation aggregation) {
    const std::size_t dim = docs.dim();
    if (feature_mode == FeatureMode::cls_only) {
        const float c = kernels::dot(q.seq->rows.data(), docs.cls_row(pos), dim) * docs.cls_inv_norm(pos) *
                        q.inv_norms[0];
        return 1.0 - static_cast<double>(c);
    }
    const kernels::ColumnBlock doc{docs.columns(pos), docs.column_inv_norms(pos), docs.column_stride(pos)};
    return 1.0 - aggregate(kernels::maxsim_sum(q.block(), doc, dim), q.seq->row_count(), aggregation);
}

std::vector<std::uint32_t> knn_positions(const EmbeddedSequence& q, const DocumentIndex& docs, std::size_t k,
                                         std::optional<std::size_t> exclude) {
    const std::size_t n = docs.size();
    thread_local std::vector<float> dist;
    dist.resize(kernels::padded(n));
    kernels::squared_l2_blocked(q.knn_key().data(), docs.blocked_keys(), n, docs.dim(), dist.data());

    // Bounded max-heap of the k best (distance, position) pairs. Positions
    // follow ascending seq_id, so ties go to the lower id.
    using Candidate = std::pair<float, std::uint32_t>;
    std::vector<Candidate> heap;
    heap.reserve(k);
    for (std::size_t pos = 0; pos < n; ++pos) {
        if (exclude && pos == *exclude) continue;
        const Candidate c{dist[pos], static_cast<std::uint32_t>(pos)};
        if (heap.size() < k) {
            heap.push_back(c);
            std::push_heap(heap.begin(), heap.end());
        } else if (c < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = c;
            std::push_heap(heap.begin(), heap.end());
        }
    }
    std::sort_heap(heap.begin(), heap.end());
    const auto& cand = heap;
    std::vector<std::uint32_t> out;
    out.reserve(cand.size());
    for (const auto& c : cand) out.push_back(c.second);
    return out;
}

ScoreRecord score_one(const EmbeddedSequence& q, const DocumentIndex& docs, const CoreSetConfig& config,
                      std::optional<std::size_t> exclude) {
    const std::size_t available = docs.size() - (exclude ? 1 : 0);
    const std::size_t k = config.resolve_k(available);
    const PreparedQuery prepared(q);
    const auto core = knn_positions(q, docs, k, exclude);

    ScoreRecord rec;
    rec.query_seq_id = q.seq_id;
    rec.config = config;
    rec.core_set_ids.reserve(core.size());
    double best = std::numeric_limits<double>::infinity();
    SeqId best_id = 0;
    double total = 0.0;
    for (std::uint32_t pos : core) {
        const SeqId id = docs.id(pos);
        rec.core_set_ids.push_back(id);
        const double d = distance_to(prepared, docs, pos, config.feature_mode, config.aggregation);
        total += d;
        if (d < best || (d == best && id < best_id)) {
            best = d;
            best_id = id;
        }
    }
    rec.nearest_doc_id = best_id;
    rec.abnormal_score =
        config.score_mode == ScoreMode::nearest_only ? best : total / static_cast<double>(core.size());
    return rec;
}

std::optional<std::size_t> position_of(const DocumentIndex& docs, SeqId id) {
    const auto& ids = docs.ids();
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ids.begin());
}

}  // namespace

double maxsim(const EmbeddedSequence& q, const EmbeddedSequence& d, Aggregation aggregation) {
    check_pair(q, d.dim);
    if (d.row_count() == 0) {
        throw ContractError("document " + std::to_string(d.seq_id) + " has no rows");
    }
    const PreparedQuery pq(q);
    const PreparedQuery pd(d);
    std::vector<float> cols;
    std::vector<float> inv;
    kernels::append_columns(d.rows.data(), pd.inv_norms.data(), d.row_count(), d.dim, cols, inv);
    const kernels::ColumnBlock doc{cols.data(), inv.data(), kernels::padded(d.row_count())};
    return aggregate(kernels::maxsim_sum(pq.block(), doc, q.dim), q.row_count(), aggregation);
}

double maxsim_distance(const EmbeddedSequence& q, const EmbeddedSequence& d, Aggregation aggregation) {
    return 1.0 - maxsim(q, d, aggregation);
}

std::vector<SeqId> knn_core(const EmbeddedSequence& q, const DocumentIndex& docs, std::size_t k) {
    check_pair(q, docs.dim());
    if (k < 1 || k > docs.size()) {
        throw ConfigError("k must be in [1, |D|]");
    }
    std::vector<SeqId> out;
    for (auto pos : knn_positions(q, docs, k, std::nullopt)) out.push_back(docs.id(pos));
    return out;
}

ScoreRecord abnormal_score(const EmbeddedSequence& q, const DocumentIndex& docs, const CoreSetConfig& config) {
    check_pair(q, docs.dim());
    return score_one(q, docs, config, std::nullopt);
}

ScoreRecord abnormal_score_excluding(const EmbeddedSequence& q, const DocumentIndex& docs,
                                     const CoreSetConfig& config, SeqId exclude_id) {
    check_pair(q, docs.dim());
    const auto pos = position_of(docs, exclude_id);
    if (pos && docs.size() < 2) {
        throw ConfigError("leave-one-out scoring needs at least two documents");
    }
    return score_one(q, docs, config, pos);
}

ScoreRecord brute_force_score(const EmbeddedSequence& q, const DocumentIndex& docs, FeatureMode feature_mode,
                              Aggregation aggregation) {
    check_pair(q, docs.dim());
    const PreparedQuery prepared(q);
    ScoreRecord rec;
    rec.query_seq_id = q.seq_id;
    rec.config = CoreSetConfig::with_k(docs.size());
    rec.config.feature_mode = feature_mode;
    rec.config.aggregation = aggregation;
    rec.core_set_ids = docs.ids();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t pos = 0; pos < docs.size(); ++pos) {
        const double d = distance_to(prepared, docs, pos, feature_mode, aggregation);
        if (d < best) {
            best = d;
            rec.nearest_doc_id = docs.id(pos);
        }
    }
    rec.abnormal_score = best;
    return rec;
}

std::vector<ScoreRecord> score_queries(std::span<const EmbeddedSequence> queries, const DocumentIndex& docs,
                                       const CoreSetConfig& config, int workers) {
    for (const auto& q : queries) check_pair(q, docs.dim());
    config.resolve_k(docs.size());

    std::vector<ScoreRecord> out(queries.size());
    std::exception_ptr failure;
    const long n = static_cast<long>(queries.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(std::max(1, workers))
    for (long i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = score_one(queries[static_cast<std::size_t>(i)], docs, config, std::nullopt);
        } catch (...) {
#pragma omp critical(rapidlog_score_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

std::vector<ScoreRecord> score_queries_serial(std::span<const EmbeddedSequence> queries,
                                              const DocumentIndex& docs, const CoreSetConfig& config) {
    std::vector<ScoreRecord> out;
    out.reserve(queries.size());
    for (const auto& q : queries) {
        out.push_back(abnormal_score(q, docs, config));
    }
    return out;
}

}  // namespace rapidlog
