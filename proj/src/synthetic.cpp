#include "rapidlog/synthetic.hpp"

#include <array>
#include <cmath>
#include <set>
#include <string>
#include <unordered_set>

#include "rapidlog/errors.hpp"
#include "rapidlog/rng.hpp"

namespace rapidlog {

namespace {

enum class Slot : std::uint8_t { word, ip, path, num, hex };

struct TemplatePart {
    Slot slot = Slot::word;
    std::string word;
};

using Template = std::vector<TemplatePart>;

// Normal and abnormal words use disjoint consonant sets, so no anomaly word
// can ever equal a normal one. Neither set contains hex letters between
// vowels often enough to form an 8-char hex run, so HEX never fires on them.
constexpr std::string_view kNormalConsonants = "klmnprstvz";
constexpr std::string_view kAbnormalConsonants = "ghjwxy";
constexpr std::string_view kVowels = "aeiou";

std::string make_word(Rng& rng, std::string_view consonants) {
    const std::size_t syllables = 2 + rng.below(3);
    std::string w;
    for (std::size_t i = 0; i < syllables; ++i) {
        w.push_back(consonants[rng.below(consonants.size())]);
        w.push_back(kVowels[rng.below(kVowels.size())]);
    }
    return w;
}

std::string fresh_word(Rng& rng, std::string_view consonants, std::unordered_set<std::string>& used) {
    for (;;) {
        std::string w = make_word(rng, consonants);
        if (used.insert(w).second) {
            return w;
        }
    }
}

const char* header_of(Slot s) {
    switch (s) {
        case Slot::ip: return "IP";
        case Slot::path: return "PATH";
        case Slot::num: return "NUM";
        case Slot::hex: return "HEX";
        case Slot::word: break;
    }
    return "";
}

std::string masked_text(const Template& t) {
    std::string out;
    for (const auto& p : t) {
        if (!out.empty()) out.push_back(' ');
        out += p.slot == Slot::word ? p.word : header_of(p.slot);
    }
    return out;
}

std::string param_value(Slot s, Rng& rng) {
    static constexpr std::array<std::string_view, 8> kDirs = {"var", "log", "tmp", "data", "srv", "opt", "home", "run"};
    switch (s) {
        case Slot::ip: {
            std::string v = std::to_string(1 + rng.below(254));
            for (int i = 0; i < 3; ++i) v += "." + std::to_string(rng.below(256));
            if (rng.below(3) == 0) v += ":" + std::to_string(1024 + rng.below(60000));
            return v;
        }
        case Slot::path: {
            std::string v;
            const std::size_t depth = 1 + rng.below(3);
            for (std::size_t i = 0; i < depth; ++i) v += "/" + std::string(kDirs[rng.below(kDirs.size())]);
            if (rng.below(2) == 0) v += "/app.log";
            return v;
        }
        case Slot::num:
            return std::to_string(rng.below(100000));
        case Slot::hex: {
            static constexpr std::string_view kHex = "0123456789abcdef";
            std::string v = "0x";
            for (int i = 0; i < 8; ++i) v.push_back(kHex[rng.below(16)]);
            return v;
        }
        case Slot::word: break;
    }
    return {};
}

std::string instantiate(const Template& t, Rng& rng) {
    std::string out;
    for (const auto& p : t) {
        if (!out.empty()) out.push_back(' ');
        out += p.slot == Slot::word ? p.word : param_value(p.slot, rng);
    }
    return out;
}

void insert_at_random(Template& t, TemplatePart part, Rng& rng) {
    const auto pos = static_cast<std::ptrdiff_t>(rng.below(t.size() + 1));
    t.insert(t.begin() + pos, std::move(part));
}

Template per_type_template(const SyntheticSpec& spec, Rng& rng, std::unordered_set<std::string>& used) {
    Template t;
    const std::size_t words = spec.min_words + rng.below(spec.max_words - spec.min_words + 1);
    for (std::size_t i = 0; i < words; ++i) {
        t.push_back({Slot::word, fresh_word(rng, kNormalConsonants, used)});
    }
    const std::size_t params = 1 + rng.below(2);
    for (std::size_t i = 0; i < params; ++i) {
        insert_at_random(t, {static_cast<Slot>(1 + rng.below(4)), {}}, rng);
    }
    return t;
}

Template shared_template(const std::vector<std::string>& pool, Rng& rng) {
    Template t;
    for (const auto& w : pool) t.push_back({Slot::word, w});
    rng.shuffle(t.begin(), t.end());
    const std::size_t extra = rng.below(3);
    for (std::size_t i = 0; i < extra; ++i) {
        insert_at_random(t, {Slot::word, pool[rng.below(pool.size())]}, rng);
    }
    insert_at_random(t, {Slot::num, {}}, rng);
    return t;
}

Template perturb(Template t, const std::vector<std::string>& abnormal_words, Rng& rng) {
    TemplatePart alien{Slot::word, abnormal_words[rng.below(abnormal_words.size())]};
    if (rng.below(2) == 0) {
        std::vector<std::size_t> word_slots;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i].slot == Slot::word) word_slots.push_back(i);
        }
        t[word_slots[rng.below(word_slots.size())]] = std::move(alien);
    } else {
        insert_at_random(t, std::move(alien), rng);
    }
    return t;
}

}  // namespace

std::vector<RawLogRecord> gen_synthetic(const SyntheticSpec& spec) {
    if (spec.n_types < 2) {
        throw ConfigError("gen_synthetic needs at least 2 types");
    }
    if (!(spec.anomaly_rate >= 0.0 && spec.anomaly_rate < 0.5)) {
        throw ConfigError("anomaly_rate must be in [0, 0.5)");
    }
    if (spec.min_words < 1 || spec.max_words < spec.min_words) {
        throw ConfigError("bad template word range");
    }
    if (spec.vocabulary == Vocabulary::shared && spec.shared_pool < 2) {
        throw ConfigError("shared vocabulary needs a pool of at least 2 words");
    }

    Rng rng(splitmix64(spec.seed ^ 0x5EED5EED5EED5EEDULL));
    std::unordered_set<std::string> used;

    std::vector<std::string> pool;
    if (spec.vocabulary == Vocabulary::shared) {
        for (std::size_t i = 0; i < spec.shared_pool; ++i) pool.push_back(fresh_word(rng, kNormalConsonants, used));
    }

    std::vector<Template> templates;
    std::set<std::string> seen_masked;
    while (templates.size() < spec.n_types) {
        Template t = spec.vocabulary == Vocabulary::shared ? shared_template(pool, rng)
                                                           : per_type_template(spec, rng, used);
        if (seen_masked.insert(masked_text(t)).second) {
            templates.push_back(std::move(t));
        }
    }

    std::vector<std::string> abnormal_words;
    std::unordered_set<std::string> abnormal_used;
    for (int i = 0; i < 40; ++i) abnormal_words.push_back(fresh_word(rng, kAbnormalConsonants, abnormal_used));

    const std::size_t total = spec.n_types * spec.logs_per_type;
    std::vector<std::size_t> type_of(total);
    for (std::size_t i = 0; i < total; ++i) type_of[i] = i / spec.logs_per_type;
    rng.shuffle(type_of.begin(), type_of.end());

    const auto n_abnormal = static_cast<std::size_t>(std::llround(spec.anomaly_rate * static_cast<double>(total)));
    std::vector<std::size_t> order(total);
    for (std::size_t i = 0; i < total; ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    std::vector<bool> abnormal(total, false);
    for (std::size_t i = 0; i < n_abnormal; ++i) abnormal[order[i]] = true;

    std::vector<RawLogRecord> out;
    out.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        const Template& base = templates[type_of[i]];
        RawLogRecord rec;
        rec.index = i;
        if (abnormal[i]) {
            rec.text = instantiate(perturb(base, abnormal_words, rng), rng);
            rec.label = Label::abnormal;
        } else {
            rec.text = instantiate(base, rng);
            rec.label = Label::normal;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace rapidlog
