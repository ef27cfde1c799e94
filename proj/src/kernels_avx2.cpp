// AVX2 variants. Compiled with -mavx2 and only reached after the runtime
// CPU check in kernels_dispatch.cpp. No FMA: elementwise terms stay
// bit-identical to the scalar kernels, only reduction order differs.

#include "sparsegen/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace sparsegen::kernels::detail {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s2 = _mm_add_pd(lo, hi);               // (v0+v2, v1+v3)
    const __m128d s1 = _mm_add_sd(s2, _mm_unpackhi_pd(s2, s2));
    return _mm_cvtsd_f64(s1);
}

} // namespace

double reduce_max_avx2(const double * x, size_t n) {
    size_t i = 0;
    double m = x[0];
    if (n >= 4) {
        __m256d vm = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4) {
            vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
        }
        const __m128d lo = _mm256_castpd256_pd128(vm);
        const __m128d hi = _mm256_extractf128_pd(vm, 1);
        const __m128d m2 = _mm_max_pd(lo, hi);
        const __m128d m1 = _mm_max_sd(m2, _mm_unpackhi_pd(m2, m2));
        m = _mm_cvtsd_f64(m1);
    }
    for (; i < n; i++) {
        if (x[i] > m) {
            m = x[i];
        }
    }
    return m;
}

double clamped_sum_avx2(const double * x, size_t n, double tau) {
    const __m256d vtau  = _mm256_set1_pd(tau);
    const __m256d vzero = _mm256_setzero_pd();
    __m256d acc = vzero;
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_max_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vtau), vzero);
        acc = _mm256_add_pd(acc, t);
    }
    double s = hsum(acc);
    for (; i < n; i++) {
        const double t = x[i] - tau;
        if (t > 0.0) {
            s += t;
        }
    }
    return s;
}

double clamped_sq_sum_avx2(const double * x, size_t n, double tau) {
    const __m256d vtau  = _mm256_set1_pd(tau);
    const __m256d vzero = _mm256_setzero_pd();
    __m256d acc = vzero;
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_max_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vtau), vzero);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(t, t));
    }
    double s = hsum(acc);
    for (; i < n; i++) {
        const double t = x[i] - tau;
        if (t > 0.0) {
            s += t * t;
        }
    }
    return s;
}

double dot_avx2(const double * a, const double * b, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    double s = hsum(acc);
    for (; i < n; i++) {
        s += a[i] * b[i];
    }
    return s;
}

void axpy_avx2(double a, const double * x, double * y, size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; i++) {
        y[i] += a * x[i];
    }
}

} // namespace sparsegen::kernels::detail

#endif // x86_64
