#include "bifluid/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "bifluid/errors.hpp"

namespace bifluid::kernels {

namespace scalar {
extern const Ops kOps;
}
#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
extern const Ops kOps;
}
#endif

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

Backend pick_initial_backend() {
    if (const char* env = std::getenv("BIFLUID_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0) {
            if (!avx2_available())
                throw ConfigError("BIFLUID_KERNELS=avx2 but this CPU has no AVX2");
            return Backend::avx2;
        }
        throw ConfigError(std::string("unknown BIFLUID_KERNELS value: ") + env);
    }
    return avx2_available() ? Backend::avx2 : Backend::scalar;
}

std::atomic<const Ops*> g_active{nullptr};

const Ops* resolve(Backend b) {
    switch (b) {
    case Backend::scalar:
        return &scalar::kOps;
    case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
        if (avx2_available()) return &avx2::kOps;
#endif
        throw ConfigError("AVX2 kernels not available on this machine");
    }
    throw ConfigError("unknown kernel backend");
}

} // namespace

const Ops& ops() {
    const Ops* p = g_active.load(std::memory_order_acquire);
    if (!p) {
        p = resolve(pick_initial_backend());
        g_active.store(p, std::memory_order_release);
    }
    return *p;
}

const Ops& ops(Backend b) { return *resolve(b); }

Backend active_backend() {
    return &ops() == &scalar::kOps ? Backend::scalar : Backend::avx2;
}

void force_backend(Backend b) { g_active.store(resolve(b), std::memory_order_release); }

std::string backend_name() { return ops().name; }

} // namespace bifluid::kernels
