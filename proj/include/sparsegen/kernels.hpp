#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel f64 kernels used by the transforms and the tiny LM.
//
// Every kernel has a scalar reference implementation and, where the CPU
// supports it, a SIMD variant selected once at startup. The SIMD variants
// avoid FMA so each elementwise term is bit-identical to the scalar path;
// only the order of the final reduction differs.

namespace sparsegen::kernels {

enum class backend : uint8_t {
    scalar = 0,
    avx2   = 1,
    neon   = 2,
};

const char * backend_name(backend b);

// best backend supported by the running CPU
backend preferred_backend();

backend active_backend();

// Force a specific backend (throws std::invalid_argument if unsupported).
// Not safe to call concurrently with kernel invocations; intended for
// startup configuration and the equivalence tests.
void set_backend(backend b);

// back to preferred_backend()
void reset_backend();

// max over x[0..n), n >= 1
double reduce_max(const double * x, size_t n);

// sum of max(x[i] - tau, 0)
double clamped_sum(const double * x, size_t n, double tau);

// sum of max(x[i] - tau, 0)^2
double clamped_sq_sum(const double * x, size_t n, double tau);

double dot(const double * a, const double * b, size_t n);

// y[i] += a * x[i]
void axpy(double a, const double * x, double * y, size_t n);

namespace detail {

double reduce_max_scalar(const double * x, size_t n);
double clamped_sum_scalar(const double * x, size_t n, double tau);
double clamped_sq_sum_scalar(const double * x, size_t n, double tau);
double dot_scalar(const double * a, const double * b, size_t n);
void   axpy_scalar(double a, const double * x, double * y, size_t n);

#if defined(__x86_64__) || defined(_M_X64)
double reduce_max_avx2(const double * x, size_t n);
double clamped_sum_avx2(const double * x, size_t n, double tau);
double clamped_sq_sum_avx2(const double * x, size_t n, double tau);
double dot_avx2(const double * a, const double * b, size_t n);
void   axpy_avx2(double a, const double * x, double * y, size_t n);
#endif

#if defined(__ARM_NEON) || defined(__aarch64__)
double reduce_max_neon(const double * x, size_t n);
double clamped_sum_neon(const double * x, size_t n, double tau);
double clamped_sq_sum_neon(const double * x, size_t n, double tau);
double dot_neon(const double * a, const double * b, size_t n);
void   axpy_neon(double a, const double * x, double * y, size_t n);
#endif

} // namespace detail

} // namespace sparsegen::kernels
