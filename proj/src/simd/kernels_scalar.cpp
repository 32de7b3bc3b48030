#include "phraseqa/simd/kernels.hpp"

namespace phraseqa::simd {
namespace {

float dot_scalar(const float* a, const float* b, std::size_t dim) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < dim; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

float l2sq_scalar(const float* a, const float* b, std::size_t dim) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < dim; ++i) {
        const float d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void dot_rows_scalar(const float* q, const float* rows, std::size_t n, std::size_t dim, float* out) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = dot_scalar(q, rows + i * dim, dim);
    }
}

void l2sq_rows_scalar(const float* q, const float* rows, std::size_t n, std::size_t dim, float* out) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = l2sq_scalar(q, rows + i * dim, dim);
    }
}

} // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", dot_scalar, l2sq_scalar, dot_rows_scalar, l2sq_rows_scalar};
    return table;
}

} // namespace phraseqa::simd
