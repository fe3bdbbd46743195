#include "ridge/kernels.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace ridge::kernels {

#if defined(RIDGE_HAVE_AVX2_BUILD)
const Ops* detail_avx2_ops(); // defined in kernels_avx2.cpp
#endif

const Ops* avx2() {
#if defined(RIDGE_HAVE_AVX2_BUILD) && (defined(__GNUC__) || defined(__clang__))
    static const Ops* ops = __builtin_cpu_supports("avx2") ? detail_avx2_ops() : nullptr;
    return ops;
#else
    return nullptr;
#endif
}

namespace {

const Ops* select_backend() {
    const char* want = std::getenv("RIDGE_KERNELS");
    if (want && std::strcmp(want, "scalar") == 0)
        return &scalar();
    const Ops* vec = avx2();
    if (want && std::strcmp(want, "avx2") == 0 && !vec) {
        std::fprintf(stderr, "ridge: RIDGE_KERNELS=avx2 requested but AVX2 is "
                             "unavailable; using scalar kernels\n");
        return &scalar();
    }
    return vec ? vec : &scalar();
}

} // namespace

const Ops& active() {
    static const Ops* ops = select_backend();
    return *ops;
}

} // namespace ridge::kernels
