#include "rapidlog/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace rapidlog {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (it->is_string()) {
        return it->get<std::string>();
    }
    if (it->is_number()) {
        return it->dump();
    }
    throw ParseError(line, std::string("field \"") + key + "\" must be a string");
}

}  // namespace

ParseResult parse_records(std::istream& in, InputFormat format) {
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        const std::size_t this_line = line_no++;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            result.rejections.emplace_back(this_line, "empty text");
            continue;
        }
        RawLogRecord rec;
        if (format == InputFormat::plain) {
            rec.text = line;
        } else {
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(this_line + 1, std::string("malformed JSON: ") + e.what());
            }
            if (!obj.is_object()) {
                throw ParseError(this_line + 1, "expected a JSON object");
            }
            auto text = obj.find("text");
            if (text == obj.end() || !text->is_string()) {
                throw ParseError(this_line + 1, "missing string field \"text\"");
            }
            rec.text = text->get<std::string>();
            if (auto lab = obj.find("label"); lab != obj.end() && !lab->is_null()) {
                if (!lab->is_number_integer() || (lab->get<int>() != 0 && lab->get<int>() != 1)) {
                    throw ParseError(this_line + 1, "label must be 0 or 1");
                }
                rec.label = lab->get<int>() == 1 ? Label::abnormal : Label::normal;
            }
            rec.timestamp = optional_string(obj, "timestamp", this_line + 1);
            rec.block_id = optional_string(obj, "block_id", this_line + 1);
        }
        if (trim(rec.text).empty()) {
            result.rejections.emplace_back(this_line, "empty text");
            continue;
        }
        rec.index = result.records.size();
        result.records.push_back(std::move(rec));
    }
    return result;
}

ParseResult parse_records_file(const std::filesystem::path& path, InputFormat format) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return parse_records(in, format);
}

void write_records_jsonl(std::ostream& out, std::span<const RawLogRecord> records) {
    for (const auto& r : records) {
        nlohmann::ordered_json obj;
        obj["text"] = r.text;
        if (r.label) obj["label"] = static_cast<int>(*r.label);
        if (r.timestamp) obj["timestamp"] = *r.timestamp;
        if (r.block_id) obj["block_id"] = *r.block_id;
        out << obj.dump() << '\n';
    }
}

RuleSet::RuleSet(std::vector<MaskRule> rules) : rules_(std::move(rules)) {
    std::stable_sort(rules_.begin(), rules_.end(),
                     [](const MaskRule& a, const MaskRule& b) { return a.priority < b.priority; });
    std::set<int> seen;
    for (const auto& r : rules_) {
        if (!seen.insert(r.priority).second) {
            throw ConfigError("duplicate mask rule priority " + std::to_string(r.priority));
        }
        if (r.header.empty() || std::any_of(r.header.begin(), r.header.end(), is_space)) {
            throw ConfigError("mask header \"" + r.header + "\" must be a single non-empty token");
        }
        try {
            compiled_.emplace_back(r.pattern, std::regex::ECMAScript | std::regex::optimize);
        } catch (const std::regex_error& e) {
            throw ConfigError("mask rule " + r.header + ": bad pattern: " + e.what());
        }
    }
    for (const auto& r : rules_) {
        for (std::size_t i = 0; i < rules_.size(); ++i) {
            if (std::regex_search(r.header, compiled_[i])) {
                throw ConfigError("header \"" + r.header + "\" is matched by the pattern of rule " +
                                  rules_[i].header);
            }
        }
    }
}

RuleSet RuleSet::defaults() {
    return RuleSet({
        {"IP", R"(\b(?:\d{1,3}\.){3}\d{1,3}(?::\d{1,5})?\b)", 10},
        {"PATH", R"(\B/[\w.\-]+(?:/[\w.\-]+)*/?)", 20},
        {"NUM", R"(\b\d+\b)", 30},
        {"HEX", R"(\b0[xX][0-9a-fA-F]+\b|\b[0-9a-fA-F]{8,}\b)", 40},
    });
}

RuleSet RuleSet::from_json(std::string_view json_text) {
    nlohmann::json arr;
    try {
        arr = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("rules file is not valid JSON: ") + e.what());
    }
    if (!arr.is_array()) {
        throw ConfigError("rules file must hold a JSON array");
    }
    std::vector<MaskRule> rules;
    for (const auto& item : arr) {
        try {
            rules.push_back({item.at("header").get<std::string>(), item.at("pattern").get<std::string>(),
                             item.at("priority").get<int>()});
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad mask rule entry: ") + e.what());
        }
    }
    return RuleSet(std::move(rules));
}

RuleSet RuleSet::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open rules file " + path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

std::string RuleSet::to_json() const {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rules_) {
        arr.push_back({{"header", r.header}, {"pattern", r.pattern}, {"priority", r.priority}});
    }
    return arr.dump();
}

std::string RuleSet::mask(std::string_view text) const {
    std::string current(text);
    std::string next;
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        next.clear();
        auto last = current.cbegin();
        for (std::sregex_iterator it(current.cbegin(), current.cend(), compiled_[i]), end; it != end; ++it) {
            const auto& m = *it;
            if (m.length(0) == 0) {
                continue;
            }
            next.append(last, m[0].first);
            next.append(rules_[i].header);
            last = m[0].second;
        }
        next.append(last, current.cend());
        current.swap(next);
    }
    return normalize_whitespace(current);
}

std::vector<std::string> split_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) {
            out.emplace_back(text.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    for (const auto& tok : split_tokens(text)) {
        if (!out.empty()) out.push_back(' ');
        out += tok;
    }
    return out;
}

ProcessedSequence apply_masks(const RawLogRecord& record, const RuleSet& rules) {
    ProcessedSequence seq;
    seq.text = rules.mask(record.text);
    seq.tokens = split_tokens(seq.text);
    seq.source_index = record.index;
    return seq;
}

std::vector<ProcessedSequence> apply_masks(std::span<const RawLogRecord> records, const RuleSet& rules) {
    std::vector<ProcessedSequence> out(records.size());
    // Rule sets are immutable; std::regex matching is const and re-entrant.
#pragma omp parallel for schedule(dynamic, 64)
    for (std::size_t i = 0; i < records.size(); ++i) {
        out[i] = apply_masks(records[i], rules);
    }
    return out;
}

}  // namespace rapidlog
