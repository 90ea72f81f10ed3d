#include "rapidlog/sequence_store.hpp"

#include <limits>
#include <unordered_set>

#include "rapidlog/binary_io.hpp"
#include "rapidlog/errors.hpp"

namespace rapidlog {

namespace {
constexpr std::string_view kMagic = "RPDB";
constexpr std::uint32_t kVersion = 1;
}  // namespace

SeqId SequenceDB::intern(std::string_view text) {
    auto [it, inserted] = index_.try_emplace(std::string(text), texts_.size() + 1);
    if (inserted) {
        texts_.emplace_back(text);
    }
    return it->second;
}

std::optional<SeqId> SequenceDB::find(std::string_view text) const {
    auto it = index_.find(std::string(text));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const std::string& SequenceDB::text(SeqId id) const {
    if (!contains(id)) {
        throw ContractError("unknown seq_id " + std::to_string(id));
    }
    return texts_[id - 1];
}

std::pair<SequenceDB, LookupTable> build_db(std::span<const ProcessedSequence> sequences) {
    SequenceDB db;
    LookupTable lookup;
    lookup.ids.reserve(sequences.size());
    for (const auto& s : sequences) {
        lookup.ids.push_back(db.intern(s.text));
    }
    return {std::move(db), std::move(lookup)};
}

std::pair<SequenceDB, LookupTable> build_db(std::span<const std::string> texts) {
    SequenceDB db;
    LookupTable lookup;
    lookup.ids.reserve(texts.size());
    for (const auto& t : texts) {
        lookup.ids.push_back(db.intern(t));
    }
    return {std::move(db), std::move(lookup)};
}

std::vector<BlockView> build_block_views(std::span<const RawLogRecord> records,
                                         std::span<const ProcessedSequence> masked) {
    if (records.size() != masked.size()) {
        throw ContractError("records and masked sequences differ in length");
    }
    std::vector<BlockView> blocks;
    std::unordered_map<std::string, std::size_t> position;
    std::vector<std::unordered_set<std::string>> members_seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (!rec.block_id) {
            throw ConfigError("record " + std::to_string(rec.index) + " has no block_id in block mode");
        }
        auto [it, inserted] = position.try_emplace(*rec.block_id, blocks.size());
        if (inserted) {
            blocks.push_back({*rec.block_id, {}, {}});
            members_seen.emplace_back();
        }
        BlockView& b = blocks[it->second];
        b.member_indices.push_back(rec.index);
        if (members_seen[it->second].insert(masked[i].text).second) {
            if (!b.canonical_text.empty()) b.canonical_text.push_back(' ');
            b.canonical_text += masked[i].text;
        }
    }
    return blocks;
}

std::vector<BlockView> build_block_views(std::span<const RawLogRecord> records, const RuleSet& rules) {
    const auto masked = apply_masks(records, rules);
    return build_block_views(records, masked);
}

std::vector<std::uint8_t> encode_db(const SequenceDB& db, const LookupTable& lookup) {
    io::ByteWriter w;
    w.put_bytes(kMagic);
    w.put_u32(kVersion);
    w.put_u64(db.size());
    SeqId id = 1;
    for (const auto& text : db.texts()) {
        if (text.size() > std::numeric_limits<std::uint32_t>::max()) {
            throw FormatError("sequence text too long for RPDB");
        }
        w.put_u64(id++);
        w.put_u32(static_cast<std::uint32_t>(text.size()));
        w.put_bytes(text);
    }
    w.put_u64(lookup.ids.size());
    for (SeqId s : lookup.ids) {
        w.put_u64(s);
    }
    w.seal();
    return w.bytes();
}

void persist(const SequenceDB& db, const LookupTable& lookup, const std::filesystem::path& path) {
    io::write_file(path, encode_db(db, lookup));
}

std::pair<SequenceDB, LookupTable> decode_db(std::span<const std::uint8_t> bytes) {
    io::ByteReader r = io::open_sealed(bytes, kMagic, kVersion);
    const std::uint64_t entries = r.get_u64("entry_count");
    std::vector<std::pair<std::uint64_t, std::string>> raw;
    for (std::uint64_t i = 0; i < entries; ++i) {
        const std::uint64_t id = r.get_u64("seq_id");
        const std::uint32_t len = r.get_u32("text_len");
        raw.emplace_back(id, r.get_bytes(len, "text"));
    }
    const std::uint64_t count = r.get_u64("lookup_count");
    if (count > r.remaining() / 8) {
        throw TruncationError(r.offset(), "lookup ids");
    }
    LookupTable lookup;
    lookup.ids.resize(count);
    for (auto& s : lookup.ids) {
        s = r.get_u64("lookup id");
    }
    io::close_sealed(bytes, r);

    SequenceDB db;
    for (auto& [id, text] : raw) {
        if (id != db.next_id()) {
            throw FormatError("seq_id " + std::to_string(id) + " out of sequence, expected " +
                              std::to_string(db.next_id()));
        }
        if (db.intern(text) != id) {
            throw FormatError("duplicate text for seq_id " + std::to_string(id));
        }
    }
    for (SeqId s : lookup.ids) {
        if (!db.contains(s)) {
            throw FormatError("lookup references unknown seq_id " + std::to_string(s));
        }
    }
    return {std::move(db), std::move(lookup)};
}

std::pair<SequenceDB, LookupTable> load(const std::filesystem::path& path) {
    return decode_db(io::read_file(path));
}

}  // namespace rapidlog
