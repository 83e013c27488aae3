// AVX2 kernel variants (4 doubles per lane, FMA where it falls out
// naturally). Compiled only on x86-64; dispatch checks CPU support at
// runtime before handing these out.

#include "bifluid/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define BIFLUID_HAVE_AVX2_TU 1
#include <immintrin.h>

#include <cmath>

namespace bifluid::kernels::avx2 {

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void axpby(double a, const double* x, double b, const double* y, double* out,
           std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d t = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
        t = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), t);
        _mm256_storeu_pd(out + i, t);
    }
    for (; i < n; ++i) out[i] = std::fma(a, x[i], b * y[i]);
}

void mul(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void combine3(double a, const double* x, double b, const double* y, double c,
              const double* z, double* out, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    const __m256d vc = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d t = _mm256_mul_pd(vc, _mm256_loadu_pd(z + i));
        t = _mm256_fmadd_pd(vb, _mm256_loadu_pd(y + i), t);
        t = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), t);
        _mm256_storeu_pd(out + i, t);
    }
    for (; i < n; ++i)
        out[i] = std::fma(a, x[i], std::fma(b, y[i], c * z[i]));
}

void combine4(double a, const double* x, double b, const double* y, double c,
              const double* z, double d, const double* w, double* out,
              std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    const __m256d vc = _mm256_set1_pd(c);
    const __m256d vd = _mm256_set1_pd(d);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d t = _mm256_mul_pd(vd, _mm256_loadu_pd(w + i));
        t = _mm256_fmadd_pd(vc, _mm256_loadu_pd(z + i), t);
        t = _mm256_fmadd_pd(vb, _mm256_loadu_pd(y + i), t);
        t = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), t);
        _mm256_storeu_pd(out + i, t);
    }
    for (; i < n; ++i)
        out[i] = std::fma(a, x[i], std::fma(b, y[i], std::fma(c, z[i], d * w[i])));
}

void central_diff(const double* m, const double* p, double c, double* out,
                  std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d diff =
            _mm256_sub_pd(_mm256_loadu_pd(p + i), _mm256_loadu_pd(m + i));
        _mm256_storeu_pd(out + i, _mm256_mul_pd(diff, vc));
    }
    for (; i < n; ++i) out[i] = (p[i] - m[i]) * c;
}

void second_diff(const double* m, const double* mid, const double* p, double c,
                 double* out, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c);
    const __m256d two = _mm256_set1_pd(2.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d t = _mm256_add_pd(_mm256_loadu_pd(m + i), _mm256_loadu_pd(p + i));
        t = _mm256_fnmadd_pd(two, _mm256_loadu_pd(mid + i), t);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(t, vc));
    }
    for (; i < n; ++i) out[i] = (m[i] - 2.0 * mid[i] + p[i]) * c;
}

void second_diff_acc(const double* m, const double* mid, const double* p,
                     double c, double* out, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c);
    const __m256d two = _mm256_set1_pd(2.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d t = _mm256_add_pd(_mm256_loadu_pd(m + i), _mm256_loadu_pd(p + i));
        t = _mm256_fnmadd_pd(two, _mm256_loadu_pd(mid + i), t);
        __m256d acc = _mm256_fmadd_pd(t, vc, _mm256_loadu_pd(out + i));
        _mm256_storeu_pd(out + i, acc);
    }
    for (; i < n; ++i) out[i] += (m[i] - 2.0 * mid[i] + p[i]) * c;
}

static inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    // ((v0 + v1) + (v2 + v3)), matching the scalar reference blocking
    __m128d pair = _mm_add_pd(_mm_unpacklo_pd(lo, hi), _mm_unpackhi_pd(lo, hi));
    return _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return hsum(acc) + tail;
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i] * y[i];
    return hsum(acc) + tail;
}

double max_abs(const double* x, std::size_t n) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    __m256d vm = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        vm = _mm256_max_pd(vm, _mm256_and_pd(mask, _mm256_loadu_pd(x + i)));
    double m = 0.0;
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vm);
    for (double lane : lanes) m = std::max(m, lane);
    for (; i < n; ++i) m = std::max(m, std::fabs(x[i]));
    return m;
}

extern const Ops kOps;
const Ops kOps = {
    axpy,        axpby,       mul, combine3, combine4, central_diff,
    second_diff, second_diff_acc, sum, dot,  max_abs,  "avx2",
};

} // namespace bifluid::kernels::avx2

#endif // x86-64
