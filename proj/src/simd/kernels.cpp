#include "phraseqa/simd/kernels.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

namespace phraseqa::simd {

#ifndef PHRASEQA_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif
#ifndef PHRASEQA_HAVE_NEON
const KernelTable* neon_kernels() { return nullptr; }
#endif

namespace {

const KernelTable& select_kernels() {
    if (const char* forced = std::getenv("PHRASEQA_KERNELS")) {
        const std::string want(forced);
        if (want == "scalar") {
            return scalar_kernels();
        }
        if (want == "avx2" && avx2_kernels() != nullptr) {
            return *avx2_kernels();
        }
        if (want == "neon" && neon_kernels() != nullptr) {
            return *neon_kernels();
        }
        std::cerr << "phraseqa: PHRASEQA_KERNELS=" << want << " unavailable, using auto selection\n";
    }
    if (const auto* k = avx2_kernels()) {
        return *k;
    }
    if (const auto* k = neon_kernels()) {
        return *k;
    }
    return scalar_kernels();
}

} // namespace

const KernelTable& active_kernels() {
    static const KernelTable& table = select_kernels();
    return table;
}

} // namespace phraseqa::simd
