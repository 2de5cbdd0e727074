#pragma once

// Hot inner loops, each with a scalar reference and SIMD variants picked at
// runtime. Every variant performs the same floating-point operations in the
// same order, so results are bit-identical across variants.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace gq::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view name(Isa isa) noexcept;

/// Best variant the running CPU supports.
Isa detected_isa() noexcept;

/// Variant currently in use. Defaults to detected_isa(), or to the value of
/// the GQ_SIMD environment variable ("scalar", "avx2", "neon") when set.
Isa active_isa() noexcept;

/// Forces a variant; returns false (and changes nothing) if the CPU lacks it.
bool set_active_isa(Isa isa) noexcept;

bool supported(Isa isa) noexcept;

/// Arguments for one x-row of the reaction-diffusion update. All pointers
/// address the first voxel of the row inside a zero-padded grid, so the
/// neighbors at +-1, +-y_stride and +-z_stride are always readable.
///
///   flux = kx[-1](u[-1]-c) + kx[0](u[+1]-c) + ky[-sy](..) + ky[0](..) + kz[-sz](..) + kz[0](..)
///   out  = c + dt * (flux + (rho*c)*(1-c))
///
/// with the six flux terms accumulated left to right.
struct StencilRow {
    const double* u;
    double* out;
    const double* kx;
    const double* ky;
    const double* kz;
    std::ptrdiff_t y_stride;
    std::ptrdiff_t z_stride;
    std::size_t count;
    double rho;
    double dt;
};

struct Table {
    void (*stencil_row)(const StencilRow& row);
    std::uint64_t (*popcount)(const std::uint64_t* a, std::size_t n);
    std::uint64_t (*and_popcount)(const std::uint64_t* a, const std::uint64_t* b, std::size_t n);
    /// Sum of squared differences accumulated in four double lanes
    /// (lane = index mod 4), combined as (l0+l1)+(l2+l3), then the tail.
    double (*squared_l2)(const float* a, const float* b, std::size_t n);
};

const Table& table_for(Isa isa) noexcept;
const Table& active() noexcept;

inline void stencil_row(const StencilRow& row) { active().stencil_row(row); }

inline std::uint64_t popcount(std::span<const std::uint64_t> a) { return active().popcount(a.data(), a.size()); }

inline std::uint64_t and_popcount(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    return active().and_popcount(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

inline double squared_l2(std::span<const float> a, std::span<const float> b) {
    return active().squared_l2(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

namespace detail {
extern const Table kScalar;
#if defined(__x86_64__) || defined(_M_X64)
extern const Table kAvx2;
#endif
#if defined(__aarch64__)
extern const Table kNeon;
#endif
}  // namespace detail

}  // namespace gq::kernels
