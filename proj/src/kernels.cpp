#include "rapidlog/kernels.hpp"

#include <cmath>
#include <limits>

namespace rapidlog::kernels {

float dot(const float* a, const float* b, std::size_t dim) noexcept {
    float acc = 0.0f;
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < dim; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

float squared_l2(const float* a, const float* b, std::size_t dim) noexcept {
    float acc = 0.0f;
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < dim; ++i) {
        const float d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

float inverse_norm(const float* v, std::size_t dim) noexcept {
    double ss = 0.0;
    for (std::size_t i = 0; i < dim; ++i) ss += static_cast<double>(v[i]) * v[i];
    return ss == 0.0 ? 0.0f : static_cast<float>(1.0 / std::sqrt(ss));
}

void append_columns(const float* rows, const float* inv_norms, std::size_t count, std::size_t dim,
                    std::vector<float>& cols, std::vector<float>& padded_inv_norms) {
    const std::size_t stride = padded(count);
    const std::size_t base = cols.size();
    cols.resize(base + stride * dim);
    for (std::size_t j = 0; j < stride; ++j) {
        const std::size_t src = j < count ? j : count - 1;
        for (std::size_t c = 0; c < dim; ++c) cols[base + c * stride + j] = rows[src * dim + c];
        padded_inv_norms.push_back(inv_norms[src]);
    }
}

namespace {

// Best cosine per query row for R query rows at once, so that R independent
// accumulator chains are in flight.
template <std::size_t R>
void best_rows(const float* const* q, const float* q_inv, ColumnBlock doc, std::size_t dim, double& total) noexcept {
    float best[R][lanes];
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t l = 0; l < lanes; ++l) best[r][l] = -std::numeric_limits<float>::infinity();

    for (std::size_t j0 = 0; j0 < doc.stride; j0 += lanes) {
        float acc[R][lanes] = {};
        for (std::size_t c = 0; c < dim; ++c) {
            const float* col = doc.cols + c * doc.stride + j0;
            for (std::size_t r = 0; r < R; ++r) {
                const float qc = q[r][c];
#pragma omp simd
                for (std::size_t l = 0; l < lanes; ++l) acc[r][l] += qc * col[l];
            }
        }
        const float* inv = doc.inv_norms + j0;
        for (std::size_t r = 0; r < R; ++r) {
#pragma omp simd
            for (std::size_t l = 0; l < lanes; ++l) {
                const float cl = acc[r][l] * inv[l];
                best[r][l] = cl > best[r][l] ? cl : best[r][l];
            }
        }
    }
    for (std::size_t r = 0; r < R; ++r) {
        float b = best[r][0];
        for (std::size_t l = 1; l < lanes; ++l) b = best[r][l] > b ? best[r][l] : b;
        total += static_cast<double>(b * q_inv[r]);
    }
}

}  // namespace

double maxsim_sum(RowBlock query, ColumnBlock doc, std::size_t dim) noexcept {
    constexpr std::size_t group = 4;
    double total = 0.0;
    std::size_t i = 0;
    for (; i + group <= query.count; i += group) {
        const float* q[group];
        for (std::size_t r = 0; r < group; ++r) q[r] = query.rows + (i + r) * dim;
        best_rows<group>(q, query.inv_norms + i, doc, dim, total);
    }
    for (; i < query.count; ++i) {
        const float* q[1] = {query.rows + i * dim};
        best_rows<1>(q, query.inv_norms + i, doc, dim, total);
    }
    return total;
}

void squared_l2_blocked(const float* query, const float* keys, std::size_t n, std::size_t dim, float* out) noexcept {
    const std::size_t blocks = padded(n) / lanes;
    for (std::size_t b = 0; b < blocks; ++b) {
        float acc[lanes] = {};
        const float* block = keys + b * dim * lanes;
        for (std::size_t c = 0; c < dim; ++c) {
            const float qc = query[c];
            const float* col = block + c * lanes;
#pragma omp simd
            for (std::size_t l = 0; l < lanes; ++l) {
                const float d = qc - col[l];
                acc[l] += d * d;
            }
        }
        for (std::size_t l = 0; l < lanes; ++l) out[b * lanes + l] = acc[l];
    }
}

void append_blocked_key(std::span<const float> key, std::size_t n, std::vector<float>& keys) {
    const std::size_t dim = key.size();
    if (n % lanes == 0) keys.resize(keys.size() + dim * lanes, 0.0f);
    const std::size_t b = n / lanes;
    const std::size_t l = n % lanes;
    for (std::size_t c = 0; c < dim; ++c) keys[(b * dim + c) * lanes + l] = key[c];
}

}  // namespace rapidlog::kernels
