#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rapidlog/sequence_store.hpp"

namespace rapidlog {

// Row 0 is the CLS (sequence summary) representation, rows 1..token_count the
// per-token representations, row-major float32.
struct EmbeddedSequence {
    SeqId seq_id = 0;
    std::uint32_t dim = 0;
    std::vector<float> rows;
    // CLS row as it was before row normalization; empty when never normalized.
    // Core-set KNN runs on this raw vector.
    std::vector<float> cls_raw;

    std::size_t row_count() const noexcept { return dim == 0 ? 0 : rows.size() / dim; }
    std::size_t token_count() const noexcept { return row_count() == 0 ? 0 : row_count() - 1; }
    std::span<const float> row(std::size_t i) const { return {rows.data() + i * dim, dim}; }
    std::span<const float> knn_key() const { return cls_raw.empty() ? row(0) : std::span<const float>(cls_raw); }

    bool operator==(const EmbeddedSequence&) const = default;
};

using EmbeddingMap = std::map<SeqId, EmbeddedSequence>;

enum class Provider { hash, file };

struct ProviderConfig {
    Provider provider = Provider::hash;
    std::uint32_t dim = 32;
    std::size_t max_tokens = 128;
    bool normalize_rows = true;
    std::uint64_t seed = 0;
    std::filesystem::path file_path;

    void validate() const;
};

// Deterministic test provider. Each distinct token maps to a fixed unit
// vector drawn from a counter-based generator keyed by hash(token, seed); the
// CLS row is the L2-normalized mean of the token rows. Returns
// (1 + tokens.size()) * dim floats. Throws ContractError on empty input.
std::vector<float> hash_embed(std::span<const std::string> tokens, std::uint32_t dim, std::uint64_t seed);

// Hash-embeds one masked text, keeping at most max_tokens - 1 tokens.
EmbeddedSequence embed_text(SeqId id, const std::string& text, const ProviderConfig& config);

// One embedding per DB entry. The file provider reads config.file_path,
// requires every DB id to be present (CoverageError otherwise) and the file
// dim to equal config.dim; rows beyond max_tokens are dropped. With
// normalize_rows the rows are scaled to unit length and cls_raw keeps the
// original CLS row.
EmbeddingMap embed_batch(const SequenceDB& db, const ProviderConfig& config);

void normalize_rows(EmbeddedSequence& e);
void truncate_rows(EmbeddedSequence& e, std::size_t max_tokens);

// Throws ContractError unless token_count >= 1, all entries are finite and no
// row is all zero.
void check_embedding(const EmbeddedSequence& e);

// RPDE container: "RPDE", u32 version = 1, u32 dim, u64 seq_count, then per
// sequence u64 seq_id, u32 row_count, row_count * dim float32; CRC32C.
// Only seq_id, dim and rows are stored.
std::vector<std::uint8_t> encode_embeddings(const EmbeddingMap& map);
EmbeddingMap decode_embeddings(std::span<const std::uint8_t> bytes,
                               std::optional<std::uint32_t> expected_dim = std::nullopt);
void write_embedding_file(const std::filesystem::path& path, const EmbeddingMap& map);
EmbeddingMap read_embedding_file(const std::filesystem::path& path,
                                 std::optional<std::uint32_t> expected_dim = std::nullopt);

}  // namespace rapidlog
