#pragma once

// Dense BLAS-1 style kernels used by every inner loop in the library.
//
// Each kernel has a scalar reference implementation and, where the host
// supports it, a vectorized one. The active backend is picked once at
// startup from CPU features and can be pinned with the environment
// variable DISTLASSO_SIMD={scalar,avx2,neon,auto}. Vector variants keep a
// fixed lane/accumulator order so results are reproducible run to run,
// but they are NOT bitwise equal to the scalar reference (reductions are
// reassociated); tests compare them to a relative tolerance.

#include <cstddef>
#include <span>
#include <string_view>

namespace distlasso::kernels {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
    Backend backend;
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    double (*sum_squares)(const double* x, std::size_t n);
    double (*max_abs)(const double* x, std::size_t n);
    double (*abs_sum)(const double* x, std::size_t n);
};

std::string_view backend_name(Backend b);

/// True if the backend was compiled in and the running CPU supports it.
bool backend_available(Backend b);

/// Table for a specific backend. Throws InvalidInput if unavailable.
const KernelTable& table(Backend b);

Backend active_backend();

/// Pin the backend used by the free functions below. Intended for tests
/// and benchmarks; call before any concurrent work starts.
void set_active_backend(Backend b);

const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double sum_squares(std::span<const double> x) {
    return active().sum_squares(x.data(), x.size());
}

inline double max_abs(std::span<const double> x) {
    return active().max_abs(x.data(), x.size());
}

inline double abs_sum(std::span<const double> x) {
    return active().abs_sum(x.data(), x.size());
}

namespace detail {
extern const KernelTable scalar_table;
#if defined(DISTLASSO_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(DISTLASSO_HAVE_NEON)
extern const KernelTable neon_table;
#endif
}  // namespace detail

}  // namespace distlasso::kernels
