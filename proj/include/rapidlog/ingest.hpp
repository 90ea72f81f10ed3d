#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rapidlog/errors.hpp"

namespace rapidlog {

enum class Label : std::uint8_t { normal = 0, abnormal = 1 };

struct RawLogRecord {
    std::size_t index = 0;
    std::optional<std::string> timestamp;
    std::optional<Label> label;
    std::optional<std::string> block_id;
    std::string text;

    bool operator==(const RawLogRecord&) const = default;
};

enum class InputFormat { jsonl, plain };

struct ParseResult {
    std::vector<RawLogRecord> records;
    std::vector<RecordRejected> rejections;
};

// Reads one record per line. Accepted records get consecutive indices from 0
// in stream order; lines whose text is empty after trimming are returned as
// rejections (carrying the 0-based input line) rather than dropped silently.
// A line that is not a JSON object in jsonl mode throws ParseError.
ParseResult parse_records(std::istream& in, InputFormat format);
ParseResult parse_records_file(const std::filesystem::path& path, InputFormat format);

void write_records_jsonl(std::ostream& out, std::span<const RawLogRecord> records);

struct MaskRule {
    std::string header;
    std::string pattern;
    int priority = 0;
};

// A validated, priority-ordered rule set. Construction fails with
// ConfigError if a pattern does not compile, a header holds whitespace,
// priorities repeat, or a header is itself matched by some pattern (that last
// check is what makes masking idempotent).
class RuleSet {
  public:
    explicit RuleSet(std::vector<MaskRule> rules);

    // IP, PATH, NUM, HEX.
    static RuleSet defaults();
    static RuleSet from_json(std::string_view json_text);
    static RuleSet load(const std::filesystem::path& path);

    std::string to_json() const;

    const std::vector<MaskRule>& rules() const noexcept { return rules_; }

    // Masks every match of every rule (in priority order, each over the whole
    // current string) and collapses whitespace runs to single spaces.
    std::string mask(std::string_view text) const;

  private:
    std::vector<MaskRule> rules_;
    std::vector<std::regex> compiled_;
};

struct ProcessedSequence {
    std::string text;
    std::vector<std::string> tokens;
    std::size_t source_index = 0;

    bool operator==(const ProcessedSequence&) const = default;
};

std::vector<std::string> split_tokens(std::string_view text);
std::string normalize_whitespace(std::string_view text);

ProcessedSequence apply_masks(const RawLogRecord& record, const RuleSet& rules);
std::vector<ProcessedSequence> apply_masks(std::span<const RawLogRecord> records, const RuleSet& rules);

}  // namespace rapidlog
