#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rapidlog/ingest.hpp"

namespace rapidlog {

// How normal templates pick their words.
enum class Vocabulary {
    // Every type owns a disjoint set of words: types are well separated.
    per_type,
    // All types are orderings of one small shared word pool (every pool word
    // appears in every template), the closed-vocabulary regime where unseen
    // normal sequences are still made of known tokens.
    shared,
};

struct SyntheticSpec {
    std::size_t n_types = 2;
    std::size_t logs_per_type = 10;
    double anomaly_rate = 0.0;
    std::uint64_t seed = 0;
    Vocabulary vocabulary = Vocabulary::per_type;
    std::size_t shared_pool = 8;
    std::size_t min_words = 5;
    std::size_t max_words = 9;
};

// Labeled synthetic stream. Each type is one template that contains parameter
// slots (IP, PATH, NUM, HEX) filled with fresh values per record, so the
// default rule set collapses each type's normal records to one sequence.
// round(anomaly_rate * total) records are made abnormal by substituting or
// inserting a word drawn from a pool disjoint from every normal word.
// Output order is a seeded shuffle; identical for identical specs.
std::vector<RawLogRecord> gen_synthetic(const SyntheticSpec& spec);

inline std::vector<RawLogRecord> gen_synthetic(std::size_t n_types, std::size_t logs_per_type,
                                               double anomaly_rate, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.n_types = n_types;
    spec.logs_per_type = logs_per_type;
    spec.anomaly_rate = anomaly_rate;
    spec.seed = seed;
    return gen_synthetic(spec);
}

}  // namespace rapidlog
