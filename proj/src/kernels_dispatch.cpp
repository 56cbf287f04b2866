#include "distlasso/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "distlasso/error.hpp"

namespace distlasso::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(DISTLASSO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* detect() {
    const char* env = std::getenv("DISTLASSO_SIMD");
    std::string want = env ? env : "auto";
    if (want == "scalar") return &detail::scalar_table;
#if defined(DISTLASSO_HAVE_AVX2)
    if ((want == "auto" || want == "avx2") && cpu_has_avx2()) return &detail::avx2_table;
#endif
#if defined(DISTLASSO_HAVE_NEON)
    if (want == "auto" || want == "neon") return &detail::neon_table;
#endif
    return &detail::scalar_table;
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{detect()};
    return table;
}

}  // namespace

std::string_view backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "unknown";
}

bool backend_available(Backend b) {
    switch (b) {
        case Backend::scalar: return true;
        case Backend::avx2: return cpu_has_avx2();
        case Backend::neon:
#if defined(DISTLASSO_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& table(Backend b) {
    if (!backend_available(b))
        throw InvalidInput("kernel backend '" + std::string(backend_name(b)) +
                           "' is not available on this host");
    switch (b) {
#if defined(DISTLASSO_HAVE_AVX2)
        case Backend::avx2: return detail::avx2_table;
#endif
#if defined(DISTLASSO_HAVE_NEON)
        case Backend::neon: return detail::neon_table;
#endif
        default: return detail::scalar_table;
    }
}

Backend active_backend() { return current().load(std::memory_order_acquire)->backend; }

void set_active_backend(Backend b) { current().store(&table(b), std::memory_order_release); }

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

}  // namespace distlasso::kernels
