#include "sparsegen/kernels.hpp"

#include <stdexcept>

namespace sparsegen::kernels {

namespace {

struct vtable {
    double (*reduce_max)(const double *, size_t);
    double (*clamped_sum)(const double *, size_t, double);
    double (*clamped_sq_sum)(const double *, size_t, double);
    double (*dot)(const double *, const double *, size_t);
    void   (*axpy)(double, const double *, double *, size_t);
};

constexpr vtable k_scalar = {
    detail::reduce_max_scalar,
    detail::clamped_sum_scalar,
    detail::clamped_sq_sum_scalar,
    detail::dot_scalar,
    detail::axpy_scalar,
};

#if defined(__x86_64__) || defined(_M_X64)
constexpr vtable k_avx2 = {
    detail::reduce_max_avx2,
    detail::clamped_sum_avx2,
    detail::clamped_sq_sum_avx2,
    detail::dot_avx2,
    detail::axpy_avx2,
};
#endif

#if defined(__ARM_NEON) || defined(__aarch64__)
constexpr vtable k_neon = {
    detail::reduce_max_neon,
    detail::clamped_sum_neon,
    detail::clamped_sq_sum_neon,
    detail::dot_neon,
    detail::axpy_neon,
};
#endif

bool backend_supported(backend b) {
    switch (b) {
        case backend::scalar:
            return true;
        case backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") != 0;
#else
            return false;
#endif
        case backend::neon:
#if defined(__ARM_NEON) || defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const vtable & table_for(backend b) {
    switch (b) {
#if defined(__x86_64__) || defined(_M_X64)
        case backend::avx2:
            return k_avx2;
#endif
#if defined(__ARM_NEON) || defined(__aarch64__)
        case backend::neon:
            return k_neon;
#endif
        default:
            return k_scalar;
    }
}

backend        g_backend = preferred_backend();
const vtable * g_vtable  = &table_for(g_backend);

} // namespace

const char * backend_name(backend b) {
    switch (b) {
        case backend::scalar: return "scalar";
        case backend::avx2:   return "avx2";
        case backend::neon:   return "neon";
    }
    return "unknown";
}

backend preferred_backend() {
    if (backend_supported(backend::avx2)) {
        return backend::avx2;
    }
    if (backend_supported(backend::neon)) {
        return backend::neon;
    }
    return backend::scalar;
}

backend active_backend() {
    return g_backend;
}

void set_backend(backend b) {
    if (!backend_supported(b)) {
        throw std::invalid_argument(std::string("kernel backend not supported on this cpu: ") + backend_name(b));
    }
    g_backend = b;
    g_vtable  = &table_for(b);
}

void reset_backend() {
    set_backend(preferred_backend());
}

double reduce_max(const double * x, size_t n) {
    return g_vtable->reduce_max(x, n);
}

double clamped_sum(const double * x, size_t n, double tau) {
    return g_vtable->clamped_sum(x, n, tau);
}

double clamped_sq_sum(const double * x, size_t n, double tau) {
    return g_vtable->clamped_sq_sum(x, n, tau);
}

double dot(const double * a, const double * b, size_t n) {
    return g_vtable->dot(a, b, n);
}

void axpy(double a, const double * x, double * y, size_t n) {
    g_vtable->axpy(a, x, y, n);
}

} // namespace sparsegen::kernels
