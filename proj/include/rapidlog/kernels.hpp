#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rapidlog::kernels {

// Lane width of the blocked layouts below.
inline constexpr std::size_t lanes = 16;

constexpr std::size_t padded(std::size_t n) noexcept { return (n + lanes - 1) / lanes * lanes; }

float dot(const float* a, const float* b, std::size_t dim) noexcept;
float squared_l2(const float* a, const float* b, std::size_t dim) noexcept;

// 1 / ||v||, or 0 for the zero vector.
float inverse_norm(const float* v, std::size_t dim) noexcept;

// Row-major block of rows with their inverse L2 norms.
struct RowBlock {
    const float* rows = nullptr;
    const float* inv_norms = nullptr;
    std::size_t count = 0;
};

// Document rows stored dimension-major with the row count padded to a
// multiple of `lanes`: element (row j, component c) is cols[c * stride + j].
// Padding repeats the last row, which leaves every maximum unchanged.
struct ColumnBlock {
    const float* cols = nullptr;
    const float* inv_norms = nullptr;
    std::size_t stride = 0;
};

// Appends the padded column layout of `count` rows (and their inverse norms)
// to cols / inv_norms.
void append_columns(const float* rows, const float* inv_norms, std::size_t count, std::size_t dim,
                    std::vector<float>& cols, std::vector<float>& padded_inv_norms);

// Sum over query rows of the best cosine against any document row. Cosines
// are float32; the row-sum is accumulated in double.
double maxsim_sum(RowBlock query, ColumnBlock doc, std::size_t dim) noexcept;

// Squared distances from `query` to n keys stored in blocks of `lanes` keys,
// each block dimension-major (block b, component c, lane l at
// keys[(b * dim + c) * lanes + l]). Writes padded(n) values to out.
void squared_l2_blocked(const float* query, const float* keys, std::size_t n, std::size_t dim, float* out) noexcept;

// Appends one key to a blocked key matrix that currently holds n keys.
void append_blocked_key(std::span<const float> key, std::size_t n, std::vector<float>& keys);

}  // namespace rapidlog::kernels
