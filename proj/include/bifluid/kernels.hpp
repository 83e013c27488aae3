#pragma once

#include <cstddef>
#include <string>

// Data-parallel inner loops shared by the grid operators, the time stepper
// and the norm evaluators. Every kernel exists as a scalar reference
// implementation and (on x86-64 with AVX2) a vectorized variant; the active
// set is chosen once at startup and can be forced for testing.
//
// Contract notes common to all kernels:
//   - arrays may not alias unless the signature says in/out is the same,
//   - reductions use a fixed blocked summation order, so results are
//     deterministic for a given backend,
//   - scalar and AVX2 variants agree to a few ulps, not bitwise (FMA).

namespace bifluid::kernels {

struct Ops {
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // out[i] = a * x[i] + b * y[i]
    void (*axpby)(double a, const double* x, double b, const double* y,
                  double* out, std::size_t n);
    // out[i] = x[i] * y[i]
    void (*mul)(const double* x, const double* y, double* out, std::size_t n);
    // out[i] = a*x[i] + b*y[i] + c*z[i]   (one-sided first-derivative rows)
    void (*combine3)(double a, const double* x, double b, const double* y,
                     double c, const double* z, double* out, std::size_t n);
    // out[i] = a*x[i] + b*y[i] + c*z[i] + d*w[i]   (one-sided second-derivative rows)
    void (*combine4)(double a, const double* x, double b, const double* y,
                     double c, const double* z, double d, const double* w,
                     double* out, std::size_t n);
    // out[i] = (p[i] - m[i]) * c          (centered first difference)
    void (*central_diff)(const double* m, const double* p, double c,
                         double* out, std::size_t n);
    // out[i] = (m[i] - 2*mid[i] + p[i]) * c   (centered second difference)
    void (*second_diff)(const double* m, const double* mid, const double* p,
                        double c, double* out, std::size_t n);
    // out[i] += (m[i] - 2*mid[i] + p[i]) * c
    void (*second_diff_acc)(const double* m, const double* mid, const double* p,
                            double c, double* out, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*max_abs)(const double* x, std::size_t n);
    const char* name;
};

enum class Backend { scalar, avx2 };

// Active kernel set. Chosen on first use: AVX2 when the CPU supports it,
// unless the BIFLUID_KERNELS environment variable ("scalar" or "avx2")
// says otherwise.
const Ops& ops();

// Explicit backend lookup; throws ConfigError if the backend is not
// available on this machine.
const Ops& ops(Backend b);

Backend active_backend();
void force_backend(Backend b);
bool avx2_available();
std::string backend_name();

} // namespace bifluid::kernels
