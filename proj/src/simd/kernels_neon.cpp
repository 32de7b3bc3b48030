#include "phraseqa/simd/kernels.hpp"

#include <arm_neon.h>

namespace phraseqa::simd {
namespace {

float dot_neon(const float* a, const float* b, std::size_t dim) {
    float32x4_t acc0 = vdupq_n_f32(0.0f);
    float32x4_t acc1 = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 8 <= dim; i += 8) {
        acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
        acc1 = vfmaq_f32(acc1, vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
    }
    float acc = vaddvq_f32(vaddq_f32(acc0, acc1));
    for (; i < dim; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

float l2sq_neon(const float* a, const float* b, std::size_t dim) {
    float32x4_t acc0 = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= dim; i += 4) {
        const float32x4_t d = vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i));
        acc0 = vfmaq_f32(acc0, d, d);
    }
    float acc = vaddvq_f32(acc0);
    for (; i < dim; ++i) {
        const float d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void dot_rows_neon(const float* q, const float* rows, std::size_t n, std::size_t dim, float* out) {
    for (std::size_t r = 0; r < n; ++r) {
        out[r] = dot_neon(q, rows + r * dim, dim);
    }
}

void l2sq_rows_neon(const float* q, const float* rows, std::size_t n, std::size_t dim, float* out) {
    for (std::size_t r = 0; r < n; ++r) {
        out[r] = l2sq_neon(q, rows + r * dim, dim);
    }
}

} // namespace

const KernelTable* neon_kernels() {
    static const KernelTable table{"neon", dot_neon, l2sq_neon, dot_rows_neon, l2sq_rows_neon};
    return &table;
}

} // namespace phraseqa::simd
