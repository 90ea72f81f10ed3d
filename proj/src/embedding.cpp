#include "rapidlog/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <unordered_map>

#include "rapidlog/binary_io.hpp"
#include "rapidlog/errors.hpp"
#include "rapidlog/rng.hpp"

namespace rapidlog {

namespace {

constexpr std::string_view kMagic = "RPDE";
constexpr std::uint32_t kVersion = 1;

void scale_to_unit(std::span<float> v) {
    double ss = 0.0;
    for (float x : v) ss += static_cast<double>(x) * x;
    if (ss == 0.0) {
        return;
    }
    const double inv = 1.0 / std::sqrt(ss);
    for (float& x : v) x = static_cast<float>(x * inv);
}

void token_vector(std::string_view token, std::uint64_t seed, std::span<float> out) {
    const std::uint64_t key = fnv1a64(token, seed);
    for (std::size_t c = 0; c < out.size(); ++c) {
        const std::uint64_t bits = splitmix64(key + c);
        // Uniform in [-1, 1) with 24 bits of mantissa; exact in float.
        out[c] = static_cast<float>(static_cast<std::int64_t>(bits >> 40) - (1LL << 23)) * 0x1.0p-23f;
    }
    scale_to_unit(out);
}

}  // namespace

void ProviderConfig::validate() const {
    if (dim < 2) {
        throw ConfigError("embedding dim must be >= 2");
    }
    if (max_tokens < 2) {
        throw ConfigError("max_tokens must be >= 2");
    }
    if (provider == Provider::file && file_path.empty()) {
        throw ConfigError("file provider needs an embedding file path");
    }
}

std::vector<float> hash_embed(std::span<const std::string> tokens, std::uint32_t dim, std::uint64_t seed) {
    if (tokens.empty()) {
        throw ContractError("hash_embed needs at least one token");
    }
    std::vector<float> rows((tokens.size() + 1) * dim, 0.0f);
    std::vector<double> mean(dim, 0.0);
    std::unordered_map<std::string_view, std::size_t> first_row;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        std::span<float> row(rows.data() + (t + 1) * dim, dim);
        if (auto it = first_row.find(tokens[t]); it != first_row.end()) {
            std::copy_n(rows.data() + it->second * dim, dim, row.begin());
        } else {
            token_vector(tokens[t], seed, row);
            first_row.emplace(tokens[t], t + 1);
        }
        for (std::size_t c = 0; c < dim; ++c) mean[c] += row[c];
    }
    std::span<float> cls(rows.data(), dim);
    for (std::size_t c = 0; c < dim; ++c) cls[c] = static_cast<float>(mean[c] / static_cast<double>(tokens.size()));
    scale_to_unit(cls);
    return rows;
}

EmbeddedSequence embed_text(SeqId id, const std::string& text, const ProviderConfig& config) {
    std::vector<std::string> tokens = split_tokens(text);
    if (tokens.size() > config.max_tokens - 1) {
        tokens.resize(config.max_tokens - 1);
    }
    EmbeddedSequence e;
    e.seq_id = id;
    e.dim = config.dim;
    e.rows = hash_embed(tokens, config.dim, config.seed);
    return e;
}

void normalize_rows(EmbeddedSequence& e) {
    if (e.cls_raw.empty()) {
        e.cls_raw.assign(e.rows.begin(), e.rows.begin() + e.dim);
    }
    for (std::size_t r = 0; r < e.row_count(); ++r) {
        scale_to_unit({e.rows.data() + r * e.dim, e.dim});
    }
}

void truncate_rows(EmbeddedSequence& e, std::size_t max_tokens) {
    if (e.row_count() > max_tokens) {
        e.rows.resize(max_tokens * e.dim);
    }
}

void check_embedding(const EmbeddedSequence& e) {
    const std::string who = "embedding of seq_id " + std::to_string(e.seq_id);
    if (e.dim == 0 || e.rows.size() % e.dim != 0) {
        throw ContractError(who + ": ragged rows");
    }
    if (e.token_count() < 1) {
        throw ContractError(who + ": needs a CLS row and at least one token row");
    }
    for (std::size_t r = 0; r < e.row_count(); ++r) {
        bool nonzero = false;
        for (float x : e.row(r)) {
            if (!std::isfinite(x)) {
                throw ContractError(who + ": non-finite value in row " + std::to_string(r));
            }
            nonzero = nonzero || x != 0.0f;
        }
        if (!nonzero) {
            throw ContractError(who + ": row " + std::to_string(r) + " is all zero");
        }
    }
}

EmbeddingMap embed_batch(const SequenceDB& db, const ProviderConfig& config) {
    config.validate();
    if (db.empty()) {
        throw ContractError("embed_batch needs a non-empty database");
    }
    EmbeddingMap out;
    if (config.provider == Provider::hash) {
        std::vector<EmbeddedSequence> embedded(db.size());
        const auto& texts = db.texts();
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
        for (std::size_t i = 0; i < texts.size(); ++i) {
            try {
                embedded[i] = embed_text(i + 1, texts[i], config);
            } catch (...) {
#pragma omp critical(rapidlog_embed_failure)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
        for (auto& e : embedded) {
            out.emplace(e.seq_id, std::move(e));
        }
        return out;
    }

    EmbeddingMap file = read_embedding_file(config.file_path, config.dim);
    std::vector<std::uint64_t> missing;
    for (SeqId id = 1; id <= db.size(); ++id) {
        auto it = file.find(id);
        if (it == file.end()) {
            missing.push_back(id);
            continue;
        }
        EmbeddedSequence e = std::move(it->second);
        truncate_rows(e, config.max_tokens);
        check_embedding(e);
        if (config.normalize_rows) {
            normalize_rows(e);
        }
        out.emplace(id, std::move(e));
    }
    if (!missing.empty()) {
        std::string list;
        for (auto id : missing) list += (list.empty() ? "" : ", ") + std::to_string(id);
        throw CoverageError(std::move(missing), "embedding file lacks seq_ids {" + list + "}");
    }
    return out;
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingMap& map) {
    std::uint32_t dim = map.empty() ? 0 : map.begin()->second.dim;
    io::ByteWriter w;
    w.put_bytes(kMagic);
    w.put_u32(kVersion);
    w.put_u32(dim);
    w.put_u64(map.size());
    for (const auto& [id, e] : map) {
        if (e.dim != dim) {
            throw DimensionError("mixed dims in embedding map");
        }
        w.put_u64(id);
        w.put_u32(static_cast<std::uint32_t>(e.row_count()));
        w.put_f32s(e.rows);
    }
    w.seal();
    return w.bytes();
}

EmbeddingMap decode_embeddings(std::span<const std::uint8_t> bytes, std::optional<std::uint32_t> expected_dim) {
    io::ByteReader r = io::open_sealed(bytes, kMagic, kVersion);
    const std::uint32_t dim = r.get_u32("dim");
    if (expected_dim && dim != *expected_dim) {
        throw DimensionError("file dim " + std::to_string(dim) + " does not match configured dim " +
                             std::to_string(*expected_dim));
    }
    const std::uint64_t count = r.get_u64("seq_count");
    if (count > 0 && dim == 0) {
        throw DimensionError("file declares dim 0");
    }
    EmbeddingMap out;
    for (std::uint64_t i = 0; i < count; ++i) {
        EmbeddedSequence e;
        e.dim = dim;
        e.seq_id = r.get_u64("seq_id");
        const std::uint32_t row_count = r.get_u32("row_count");
        const std::size_t at = r.offset();
        const std::uint64_t floats = static_cast<std::uint64_t>(row_count) * dim;
        if (floats > r.remaining() / sizeof(float)) {
            throw TruncationError(at, "rows of seq_id " + std::to_string(e.seq_id));
        }
        e.rows.resize(floats);
        r.get_f32s(e.rows, "rows");
        if (!out.emplace(e.seq_id, std::move(e)).second) {
            throw FormatError("duplicate seq_id in embedding file");
        }
    }
    io::close_sealed(bytes, r);
    return out;
}

void write_embedding_file(const std::filesystem::path& path, const EmbeddingMap& map) {
    io::write_file(path, encode_embeddings(map));
}

EmbeddingMap read_embedding_file(const std::filesystem::path& path, std::optional<std::uint32_t> expected_dim) {
    return decode_embeddings(io::read_file(path), expected_dim);
}

}  // namespace rapidlog
