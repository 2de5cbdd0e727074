#include <atomic>
#include <cstdlib>
#include <string_view>

#include "gq/kernels/kernels.hpp"

namespace gq::kernels {
namespace {

Isa initial_isa() noexcept {
    const Isa best = detected_isa();
    if (const char* env = std::getenv("GQ_SIMD")) {
        const std::string_view v(env);
        if (v == "scalar") return Isa::Scalar;
        if (v == "avx2" && supported(Isa::Avx2)) return Isa::Avx2;
        if (v == "neon" && supported(Isa::Neon)) return Isa::Neon;
    }
    return best;
}

std::atomic<Isa>& current() noexcept {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

}  // namespace

std::string_view name(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool supported(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa detected_isa() noexcept {
    if (supported(Isa::Avx2)) return Isa::Avx2;
    if (supported(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

bool set_active_isa(Isa isa) noexcept {
    if (!supported(isa)) return false;
    current().store(isa, std::memory_order_relaxed);
    return true;
}

const Table& table_for(Isa isa) noexcept {
    switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
        case Isa::Avx2: return detail::kAvx2;
#endif
#if defined(__aarch64__)
        case Isa::Neon: return detail::kNeon;
#endif
        default: return detail::kScalar;
    }
}

const Table& active() noexcept { return table_for(active_isa()); }

}  // namespace gq::kernels
