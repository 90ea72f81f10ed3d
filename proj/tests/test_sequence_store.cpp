#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <set>

#include "rapidlog/binary_io.hpp"
#include "rapidlog/rng.hpp"
#include "rapidlog/sequence_store.hpp"
#include "rapidlog/synthetic.hpp"

using namespace rapidlog;

namespace {

std::vector<std::string> strings(std::initializer_list<const char*> s) { return {s.begin(), s.end()}; }

std::vector<RawLogRecord> block_records(std::initializer_list<std::pair<const char*, const char*>> items) {
    std::vector<RawLogRecord> out;
    for (const auto& [block, text] : items) {
        RawLogRecord r;
        r.index = out.size();
        r.block_id = block;
        r.text = text;
        out.push_back(r);
    }
    return out;
}

void put_u32_at(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

// Recomputes the trailing CRC after a deliberate edit.
void reseal(std::vector<std::uint8_t>& b) {
    const auto crc = io::crc32c(std::span(b).first(b.size() - 4));
    put_u32_at(b, b.size() - 4, crc);
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("rapidlog_test_" + name);
}

}  // namespace

TEST(Crc32c, KnownVector) {
    const std::string s = "123456789";
    EXPECT_EQ(io::crc32c(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())), 0xE3069283u);
}

TEST(BuildDb, DuplicatesMapToFirstId) {
    const auto [db, lookup] = build_db(strings({"A", "B", "A"}));
    EXPECT_EQ(db.size(), 2u);
    EXPECT_EQ(db.text(1), "A");
    EXPECT_EQ(db.text(2), "B");
    EXPECT_EQ(lookup.ids, (std::vector<SeqId>{1, 2, 1}));
}

TEST(BuildDb, Empty) {
    const auto [db, lookup] = build_db(std::vector<std::string>{});
    EXPECT_TRUE(db.empty());
    EXPECT_TRUE(lookup.ids.empty());
    EXPECT_EQ(db.next_id(), 1u);
}

TEST(BuildDb, FullRedundancy) {
    const auto [db, lookup] = build_db(strings({"A", "A", "A"}));
    EXPECT_EQ(db.size(), 1u);
    EXPECT_EQ(lookup.ids, (std::vector<SeqId>{1, 1, 1}));
}

TEST(SequenceDb, FindAndUnknownId) {
    SequenceDB db;
    EXPECT_EQ(db.intern("x"), 1u);
    EXPECT_EQ(db.intern("y"), 2u);
    EXPECT_EQ(db.intern("x"), 1u);
    EXPECT_EQ(db.find("y"), 2u);
    EXPECT_FALSE(db.find("z").has_value());
    EXPECT_TRUE(db.contains(2));
    EXPECT_FALSE(db.contains(0));
    EXPECT_THROW(db.text(3), ContractError);
}

TEST(BuildDb, DedupSoundnessAndSize) {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> texts(rng.below(40));
        for (auto& t : texts) t = "t" + std::to_string(rng.below(12));
        const auto [db, lookup] = build_db(texts);
        ASSERT_EQ(lookup.ids.size(), texts.size());
        for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(db.text(lookup.ids[i]), texts[i]);
        const std::set<std::string> distinct(texts.begin(), texts.end());
        EXPECT_EQ(db.size(), distinct.size());
        EXPECT_LE(db.size(), texts.size());
    }
}

TEST(BuildDb, Deterministic) {
    const auto masked = apply_masks(gen_synthetic(6, 20, 0.1, 3), RuleSet::defaults());
    const auto [a, la] = build_db(masked);
    const auto [b, lb] = build_db(masked);
    EXPECT_EQ(encode_db(a, la), encode_db(b, lb));
}

TEST(BlockViews, UniqueMembersInFirstAppearanceOrder) {
    const auto views = build_block_views(block_records({{"b1", "A"}, {"b1", "B"}, {"b1", "A"}}), RuleSet::defaults());
    ASSERT_EQ(views.size(), 1u);
    EXPECT_EQ(views[0].block_id, "b1");
    EXPECT_EQ(views[0].canonical_text, "A B");
    EXPECT_EQ(views[0].member_indices, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(BlockViews, SingleMember) {
    const auto views = build_block_views(block_records({{"b", "read 12 bytes"}}), RuleSet::defaults());
    ASSERT_EQ(views.size(), 1u);
    EXPECT_EQ(views[0].canonical_text, "read NUM bytes");
}

TEST(BlockViews, OrderSensitive) {
    const auto views = build_block_views(
        block_records({{"b1", "A"}, {"b2", "B"}, {"b1", "B"}, {"b2", "A"}}), RuleSet::defaults());
    ASSERT_EQ(views.size(), 2u);
    EXPECT_EQ(views[0].canonical_text, "A B");
    EXPECT_EQ(views[1].canonical_text, "B A");
    EXPECT_EQ(views[1].member_indices, (std::vector<std::size_t>{1, 3}));
}

TEST(BlockViews, MissingBlockId) {
    auto records = block_records({{"b1", "A"}, {"b1", "B"}});
    records[1].block_id.reset();
    EXPECT_THROW(build_block_views(records, RuleSet::defaults()), ConfigError);
}

TEST(Persist, RoundTrip) {
    const auto [db, lookup] = build_db(strings({"A", "B", "A"}));
    const auto path = temp_path("roundtrip.rpdb");
    persist(db, lookup, path);
    const auto [db2, lookup2] = load(path);
    EXPECT_EQ(db2, db);
    EXPECT_EQ(lookup2, lookup);
    EXPECT_EQ(db2.find("B"), 2u);
    std::filesystem::remove(path);
}

TEST(Persist, Layout) {
    const auto [db, lookup] = build_db(strings({"A", "BC", "A"}));
    const auto bytes = encode_db(db, lookup);
    // magic 4 + version 4 + count 8 + (8+4+1) + (8+4+2) + lookup count 8 + 3*8 + crc 4
    ASSERT_EQ(bytes.size(), 4u + 4 + 8 + 13 + 14 + 8 + 24 + 4);
    EXPECT_EQ(std::memcmp(bytes.data(), "RPDB", 4), 0);
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[8], 2);
}

TEST(Persist, WrongMagic) {
    const auto [db, lookup] = build_db(strings({"A"}));
    auto bytes = encode_db(db, lookup);
    bytes[0] = 'X';
    reseal(bytes);
    EXPECT_THROW(decode_db(bytes), FormatError);
}

TEST(Persist, VersionMismatch) {
    const auto [db, lookup] = build_db(strings({"A"}));
    auto bytes = encode_db(db, lookup);
    put_u32_at(bytes, 4, 2);
    reseal(bytes);
    EXPECT_THROW(decode_db(bytes), VersionError);
}

TEST(Persist, CorruptedPayload) {
    const auto [db, lookup] = build_db(strings({"A", "B"}));
    auto bytes = encode_db(db, lookup);
    bytes[4 + 4 + 8 + 8 + 4] ^= 0x20;  // first text byte
    EXPECT_THROW(decode_db(bytes), ChecksumError);
}

TEST(Persist, Truncated) {
    const auto [db, lookup] = build_db(strings({"A", "B", "A"}));
    const auto bytes = encode_db(db, lookup);
    for (std::size_t cut : {bytes.size() - 1, bytes.size() - 9, std::size_t{20}, std::size_t{6}}) {
        EXPECT_THROW(decode_db(std::span(bytes).first(cut)), TruncationError) << "cut at " << cut;
    }
}

TEST(Persist, TrailingGarbage) {
    const auto [db, lookup] = build_db(strings({"A"}));
    auto bytes = encode_db(db, lookup);
    bytes.insert(bytes.end() - 4, {1, 2, 3});
    reseal(bytes);
    EXPECT_THROW(decode_db(bytes), FormatError);
}

TEST(Persist, SemanticChecks) {
    const auto [db, lookup] = build_db(strings({"A", "B"}));
    auto bytes = encode_db(db, lookup);
    // Lookup id beyond the DB.
    auto bad = bytes;
    bad[bad.size() - 4 - 8] = 9;
    reseal(bad);
    EXPECT_THROW(decode_db(bad), FormatError);
    // Duplicate text.
    bad = bytes;
    bad[4 + 4 + 8 + 13 + 12] = 'A';
    reseal(bad);
    EXPECT_THROW(decode_db(bad), FormatError);
}

TEST(Persist, MissingFile) { EXPECT_THROW(load(temp_path("does_not_exist.rpdb")), Error); }
