// NEON variants (aarch64). Same contract as the AVX2 file: no FMA,
// elementwise terms bit-identical to scalar, reduction order differs.

#include "sparsegen/kernels.hpp"

#if defined(__ARM_NEON) || defined(__aarch64__)

#include <arm_neon.h>

namespace sparsegen::kernels::detail {

double reduce_max_neon(const double * x, size_t n) {
    size_t i = 0;
    double m = x[0];
    if (n >= 2) {
        float64x2_t vm = vld1q_f64(x);
        for (i = 2; i + 2 <= n; i += 2) {
            vm = vmaxq_f64(vm, vld1q_f64(x + i));
        }
        m = vmaxvq_f64(vm);
    }
    for (; i < n; i++) {
        if (x[i] > m) {
            m = x[i];
        }
    }
    return m;
}

double clamped_sum_neon(const double * x, size_t n, double tau) {
    const float64x2_t vtau  = vdupq_n_f64(tau);
    const float64x2_t vzero = vdupq_n_f64(0.0);
    float64x2_t acc = vzero;
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t t = vmaxq_f64(vsubq_f64(vld1q_f64(x + i), vtau), vzero);
        acc = vaddq_f64(acc, t);
    }
    double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; i++) {
        const double t = x[i] - tau;
        if (t > 0.0) {
            s += t;
        }
    }
    return s;
}

double clamped_sq_sum_neon(const double * x, size_t n, double tau) {
    const float64x2_t vtau  = vdupq_n_f64(tau);
    const float64x2_t vzero = vdupq_n_f64(0.0);
    float64x2_t acc = vzero;
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t t = vmaxq_f64(vsubq_f64(vld1q_f64(x + i), vtau), vzero);
        acc = vaddq_f64(acc, vmulq_f64(t, t));
    }
    double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; i++) {
        const double t = x[i] - tau;
        if (t > 0.0) {
            s += t * t;
        }
    }
    return s;
}

double dot_neon(const double * a, const double * b, size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; i++) {
        s += a[i] * b[i];
    }
    return s;
}

void axpy_neon(double a, const double * x, double * y, size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t r = vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i)));
        vst1q_f64(y + i, r);
    }
    for (; i < n; i++) {
        y[i] += a * x[i];
    }
}

} // namespace sparsegen::kernels::detail

#endif // __ARM_NEON || __aarch64__
