// aarch64 only; NEON is architecturally guaranteed there.

#include <arm_neon.h>

#include "gq/kernels/kernels.hpp"

namespace gq::kernels {
namespace {

void stencil_row_neon(const StencilRow& r) {
    const std::ptrdiff_t sy = r.y_stride;
    const std::ptrdiff_t sz = r.z_stride;
    const float64x2_t rho = vdupq_n_f64(r.rho);
    const float64x2_t dt = vdupq_n_f64(r.dt);
    const float64x2_t one = vdupq_n_f64(1.0);

    std::size_t i = 0;
    for (; i + 2 <= r.count; i += 2) {
        const double* u = r.u + i;
        const double* kx = r.kx + i;
        const double* ky = r.ky + i;
        const double* kz = r.kz + i;
        const float64x2_t c = vld1q_f64(u);
        float64x2_t flux = vmulq_f64(vld1q_f64(kx - 1), vsubq_f64(vld1q_f64(u - 1), c));
        flux = vaddq_f64(flux, vmulq_f64(vld1q_f64(kx), vsubq_f64(vld1q_f64(u + 1), c)));
        flux = vaddq_f64(flux, vmulq_f64(vld1q_f64(ky - sy), vsubq_f64(vld1q_f64(u - sy), c)));
        flux = vaddq_f64(flux, vmulq_f64(vld1q_f64(ky), vsubq_f64(vld1q_f64(u + sy), c)));
        flux = vaddq_f64(flux, vmulq_f64(vld1q_f64(kz - sz), vsubq_f64(vld1q_f64(u - sz), c)));
        flux = vaddq_f64(flux, vmulq_f64(vld1q_f64(kz), vsubq_f64(vld1q_f64(u + sz), c)));
        const float64x2_t growth = vmulq_f64(vmulq_f64(rho, c), vsubq_f64(one, c));
        vst1q_f64(r.out + i, vaddq_f64(c, vmulq_f64(dt, vaddq_f64(flux, growth))));
    }
    for (; i < r.count; ++i) {
        const double* u = r.u + i;
        const double* kx = r.kx + i;
        const double* ky = r.ky + i;
        const double* kz = r.kz + i;
        const double c = u[0];
        double flux = kx[-1] * (u[-1] - c);
        flux = flux + kx[0] * (u[1] - c);
        flux = flux + ky[-sy] * (u[-sy] - c);
        flux = flux + ky[0] * (u[sy] - c);
        flux = flux + kz[-sz] * (u[-sz] - c);
        flux = flux + kz[0] * (u[sz] - c);
        const double growth = (r.rho * c) * (1.0 - c);
        r.out[i] = c + r.dt * (flux + growth);
    }
}

std::uint64_t popcount_neon(const std::uint64_t* a, std::size_t n) {
    std::uint64_t total = 0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const uint8x16_t v = vreinterpretq_u8_u64(vld1q_u64(a + i));
        total += vaddlvq_u8(vcntq_u8(v));
    }
    for (; i < n; ++i) {
        total += static_cast<std::uint64_t>(__builtin_popcountll(a[i]));
    }
    return total;
}

std::uint64_t and_popcount_neon(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) {
    std::uint64_t total = 0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const uint8x16_t v = vreinterpretq_u8_u64(vandq_u64(vld1q_u64(a + i), vld1q_u64(b + i)));
        total += vaddlvq_u8(vcntq_u8(v));
    }
    for (; i < n; ++i) {
        total += static_cast<std::uint64_t>(__builtin_popcountll(a[i] & b[i]));
    }
    return total;
}

double squared_l2_neon(const float* a, const float* b, std::size_t n) {
    // Two float64x2 accumulators hold lanes {0,1} and {2,3}.
    float64x2_t lo = vdupq_n_f64(0.0);
    float64x2_t hi = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t va = vld1q_f32(a + i);
        const float32x4_t vb = vld1q_f32(b + i);
        const float64x2_t dlo = vsubq_f64(vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
        const float64x2_t dhi = vsubq_f64(vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
        lo = vaddq_f64(lo, vmulq_f64(dlo, dlo));
        hi = vaddq_f64(hi, vmulq_f64(dhi, dhi));
    }
    double s = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) + (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
    for (; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s = s + d * d;
    }
    return s;
}

}  // namespace

namespace detail {
const Table kNeon{&stencil_row_neon, &popcount_neon, &and_popcount_neon, &squared_l2_neon};
}

}  // namespace gq::kernels
