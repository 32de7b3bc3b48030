#pragma once

// Inner-product and squared-L2 kernels over float32 rows.
//
// Every kernel set computes the same quantities; only the summation order
// differs, so results agree with the scalar reference up to rounding. The
// active set is chosen once per process from CPU features and can be pinned
// with PHRASEQA_KERNELS=scalar|avx2|neon.

#include <cstddef>
#include <span>
#include <string_view>

namespace phraseqa::simd {

struct KernelTable {
    std::string_view name;
    float (*dot)(const float* a, const float* b, std::size_t dim);
    float (*l2sq)(const float* a, const float* b, std::size_t dim);
    // out[i] = dot(query, rows + i * dim) for i in [0, n)
    void (*dot_rows)(const float* query, const float* rows, std::size_t n, std::size_t dim, float* out);
    // out[i] = l2sq(query, rows + i * dim)
    void (*l2sq_rows)(const float* query, const float* rows, std::size_t n, std::size_t dim, float* out);
};

const KernelTable& scalar_kernels();

/// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// Process-wide selection; stable for the lifetime of the process.
const KernelTable& active_kernels();

inline float dot(std::span<const float> a, std::span<const float> b) {
    return active_kernels().dot(a.data(), b.data(), a.size());
}

inline float l2sq(std::span<const float> a, std::span<const float> b) {
    return active_kernels().l2sq(a.data(), b.data(), a.size());
}

} // namespace phraseqa::simd
