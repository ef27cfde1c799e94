#include "sparsegen/kernels.hpp"

#include <cassert>

namespace sparsegen::kernels::detail {

double reduce_max_scalar(const double * x, size_t n) {
    assert(n >= 1);
    double m = x[0];
    for (size_t i = 1; i < n; i++) {
        if (x[i] > m) {
            m = x[i];
        }
    }
    return m;
}

double clamped_sum_scalar(const double * x, size_t n, double tau) {
    double acc = 0.0;
    for (size_t i = 0; i < n; i++) {
        const double t = x[i] - tau;
        if (t > 0.0) {
            acc += t;
        }
    }
    return acc;
}

double clamped_sq_sum_scalar(const double * x, size_t n, double tau) {
    double acc = 0.0;
    for (size_t i = 0; i < n; i++) {
        const double t = x[i] - tau;
        if (t > 0.0) {
            acc += t * t;
        }
    }
    return acc;
}

double dot_scalar(const double * a, const double * b, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; i++) {
        acc += a[i] * b[i];
    }
    return acc;
}

void axpy_scalar(double a, const double * x, double * y, size_t n) {
    for (size_t i = 0; i < n; i++) {
        y[i] += a * x[i];
    }
}

} // namespace sparsegen::kernels::detail
