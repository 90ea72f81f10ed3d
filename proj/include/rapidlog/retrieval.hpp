#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rapidlog/embedding.hpp"

namespace rapidlog {

enum class FeatureMode { all_tokens, cls_only };
enum class ScoreMode { nearest_only, core_set_mean };
enum class Aggregation { sum, mean };

std::string_view to_string(FeatureMode m);
std::string_view to_string(ScoreMode m);
std::string_view to_string(Aggregation a);
FeatureMode parse_feature_mode(std::string_view s);
ScoreMode parse_score_mode(std::string_view s);
Aggregation parse_aggregation(std::string_view s);

// Core-set size is either an absolute k or a ratio of |D|
// (k = max(1, ceil(ratio * |D|))). Exactly one may be set.
struct CoreSetConfig {
    std::optional<std::size_t> k;
    std::optional<double> ratio = 0.01;
    FeatureMode feature_mode = FeatureMode::all_tokens;
    ScoreMode score_mode = ScoreMode::nearest_only;
    Aggregation aggregation = Aggregation::sum;

    static CoreSetConfig with_k(std::size_t k);
    static CoreSetConfig with_ratio(double ratio);

    // Throws ConfigError unless exactly one of k / ratio is set, ratio lies
    // in (0, 1] and the resolved k is within [1, n_docs].
    std::size_t resolve_k(std::size_t n_docs) const;

    bool operator==(const CoreSetConfig&) const = default;
};

struct ScoreRecord {
    SeqId query_seq_id = 0;
    double abnormal_score = 0.0;
    SeqId nearest_doc_id = 0;
    std::vector<SeqId> core_set_ids;
    CoreSetConfig config;

    bool operator==(const ScoreRecord&) const = default;
};

// Read-only flattened view of the document set D: ids ascending, KNN keys
// (raw CLS) in one contiguous matrix, all rows in another with their inverse
// norms precomputed. Safe for any number of concurrent readers.
class DocumentIndex {
  public:
    explicit DocumentIndex(const EmbeddingMap& docs);

    std::size_t size() const noexcept { return ids_.size(); }
    std::uint32_t dim() const noexcept { return dim_; }
    SeqId id(std::size_t pos) const { return ids_[pos]; }
    const std::vector<SeqId>& ids() const noexcept { return ids_; }

    const float* cls_row(std::size_t pos) const noexcept { return rows_.data() + row_begin_[pos] * dim_; }
    float cls_inv_norm(std::size_t pos) const noexcept { return inv_norms_[row_begin_[pos]]; }
    std::size_t row_count(std::size_t pos) const noexcept { return row_begin_[pos + 1] - row_begin_[pos]; }
    // Rows of document pos, row-major, with their inverse norms.
    const float* rows(std::size_t pos) const noexcept { return cls_row(pos); }
    const float* inv_norms(std::size_t pos) const noexcept { return inv_norms_.data() + row_begin_[pos]; }
    // The same rows in the padded dimension-major layout of the kernels.
    const float* columns(std::size_t pos) const noexcept { return cols_.data() + col_begin_[pos] * dim_; }
    const float* column_inv_norms(std::size_t pos) const noexcept { return col_inv_norms_.data() + col_begin_[pos]; }
    std::size_t column_stride(std::size_t pos) const noexcept { return col_begin_[pos + 1] - col_begin_[pos]; }
    // KNN keys of all documents in the blocked layout of the kernels.
    const float* blocked_keys() const noexcept { return keys_.data(); }

  private:
    std::uint32_t dim_ = 0;
    std::vector<SeqId> ids_;
    std::vector<float> keys_;
    std::vector<std::size_t> row_begin_;
    std::vector<float> rows_;
    std::vector<float> inv_norms_;
    std::vector<std::size_t> col_begin_;
    std::vector<float> cols_;
    std::vector<float> col_inv_norms_;
};

// Sum (or mean over query rows) of each query row's best cosine against the
// document rows. CLS rows take part like any other row.
double maxsim(const EmbeddedSequence& q, const EmbeddedSequence& d, Aggregation aggregation);
// 1 - maxsim. Negative under sum aggregation whenever maxsim > 1.
double maxsim_distance(const EmbeddedSequence& q, const EmbeddedSequence& d, Aggregation aggregation);

// The k documents with the smallest Euclidean distance between raw CLS
// vectors, nearest first, ties to the lower seq_id.
std::vector<SeqId> knn_core(const EmbeddedSequence& q, const DocumentIndex& docs, std::size_t k);

// Core set by CLS KNN, then maxSim distance (or 1 - CLS cosine in cls_only
// mode) to each member. nearest_only scores the minimum, core_set_mean the
// arithmetic mean. nearest_doc_id is the argmin, ties to the lower seq_id.
ScoreRecord abnormal_score(const EmbeddedSequence& q, const DocumentIndex& docs, const CoreSetConfig& config);

// Same, with document exclude_id left out of D (leave-one-out calibration).
ScoreRecord abnormal_score_excluding(const EmbeddedSequence& q, const DocumentIndex& docs,
                                     const CoreSetConfig& config, SeqId exclude_id);

// Minimum distance over all of D with no pruning; the oracle for the core-set
// path. core_set_ids lists every document.
ScoreRecord brute_force_score(const EmbeddedSequence& q, const DocumentIndex& docs, FeatureMode feature_mode,
                              Aggregation aggregation);

// Scores every query; result i belongs to queries[i]. Parallel over queries
// with `workers` OpenMP threads; output is independent of the worker count.
std::vector<ScoreRecord> score_queries(std::span<const EmbeddedSequence> queries, const DocumentIndex& docs,
                                       const CoreSetConfig& config, int workers);

// Plain loop over the same per-query scorer, kept as the reference for the
// parallel path and for the benchmark.
std::vector<ScoreRecord> score_queries_serial(std::span<const EmbeddedSequence> queries,
                                              const DocumentIndex& docs, const CoreSetConfig& config);

}  // namespace rapidlog
