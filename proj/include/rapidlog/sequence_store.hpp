#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rapidlog/ingest.hpp"

namespace rapidlog {

using SeqId = std::uint64_t;

// Unique masked sequences with dense ids assigned in first-seen order from 1.
// Embeddings are not stored here; they are keyed by the same SeqId.
class SequenceDB {
  public:
    // Returns the id of text, assigning the next id if it is new.
    SeqId intern(std::string_view text);

    std::optional<SeqId> find(std::string_view text) const;
    const std::string& text(SeqId id) const;
    bool contains(SeqId id) const noexcept { return id >= 1 && id <= texts_.size(); }

    std::size_t size() const noexcept { return texts_.size(); }
    bool empty() const noexcept { return texts_.empty(); }
    SeqId next_id() const noexcept { return texts_.size() + 1; }

    // Texts in id order; texts()[i] has id i + 1.
    const std::vector<std::string>& texts() const noexcept { return texts_; }

    bool operator==(const SequenceDB& other) const { return texts_ == other.texts_; }

  private:
    std::vector<std::string> texts_;
    std::unordered_map<std::string, SeqId> index_;
};

struct LookupTable {
    // ids[i] is the seq_id of input record i.
    std::vector<SeqId> ids;

    bool operator==(const LookupTable&) const = default;
};

// Every input position gets a lookup entry, duplicates included.
std::pair<SequenceDB, LookupTable> build_db(std::span<const ProcessedSequence> sequences);
std::pair<SequenceDB, LookupTable> build_db(std::span<const std::string> texts);

struct BlockView {
    std::string block_id;
    std::vector<std::size_t> member_indices;
    std::string canonical_text;
};

// Groups records by block_id (blocks ordered by first appearance). A block's
// canonical text joins its distinct masked member sequences with single
// spaces in first-appearance order. Throws ConfigError if a record has no
// block_id.
std::vector<BlockView> build_block_views(std::span<const RawLogRecord> records, const RuleSet& rules);
std::vector<BlockView> build_block_views(std::span<const RawLogRecord> records,
                                         std::span<const ProcessedSequence> masked);

// RPDB container: "RPDB", u32 version = 1, u64 entry_count, entries
// (u64 seq_id, u32 text_len, bytes), u64 lookup_count, u64 ids, CRC32C.
void persist(const SequenceDB& db, const LookupTable& lookup, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_db(const SequenceDB& db, const LookupTable& lookup);
std::pair<SequenceDB, LookupTable> load(const std::filesystem::path& path);
std::pair<SequenceDB, LookupTable> decode_db(std::span<const std::uint8_t> bytes);

}  // namespace rapidlog
