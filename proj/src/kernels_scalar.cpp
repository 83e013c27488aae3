// Scalar reference kernels. These define the semantics; the AVX2 variants
// are checked against them in tests/test_kernels.cpp.

#include "bifluid/kernels.hpp"

#include <cmath>

namespace bifluid::kernels::scalar {

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpby(double a, const double* x, double b, const double* y, double* out,
           std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void mul(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void combine3(double a, const double* x, double b, const double* y, double c,
              const double* z, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i] + c * z[i];
}

void combine4(double a, const double* x, double b, const double* y, double c,
              const double* z, double d, const double* w, double* out,
              std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = a * x[i] + b * y[i] + c * z[i] + d * w[i];
}

void central_diff(const double* m, const double* p, double c, double* out,
                  std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = (p[i] - m[i]) * c;
}

void second_diff(const double* m, const double* mid, const double* p, double c,
                 double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (m[i] - 2.0 * mid[i] + p[i]) * c;
}

void second_diff_acc(const double* m, const double* mid, const double* p,
                     double c, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] += (m[i] - 2.0 * mid[i] + p[i]) * c;
}

// Reductions run in blocks of 4 with 4 independent accumulators, the same
// association the 4-lane AVX2 variants use. Keeps the two backends close
// and the order fixed.
double sum(const double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc[0] += x[i];
        acc[1] += x[i + 1];
        acc[2] += x[i + 2];
        acc[3] += x[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

double dot(const double* x, const double* y, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc[0] += x[i] * y[i];
        acc[1] += x[i + 1] * y[i + 1];
        acc[2] += x[i + 2] * y[i + 2];
        acc[3] += x[i + 3] * y[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i] * y[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

double max_abs(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
    return m;
}

extern const Ops kOps;
const Ops kOps = {
    axpy,        axpby,       mul, combine3, combine4, central_diff,
    second_diff, second_diff_acc, sum, dot,  max_abs,  "scalar",
};

} // namespace bifluid::kernels::scalar
