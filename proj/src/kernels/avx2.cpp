// Compiled with -mavx2 -mpopcnt. Only reached through the dispatch table
// after a CPUID check, so nothing here may be shared with other TUs.

#include <immintrin.h>

#include "gq/kernels/kernels.hpp"

namespace gq::kernels {
namespace {

void stencil_row_avx2(const StencilRow& r) {
    const std::ptrdiff_t sy = r.y_stride;
    const std::ptrdiff_t sz = r.z_stride;
    const __m256d rho = _mm256_set1_pd(r.rho);
    const __m256d dt = _mm256_set1_pd(r.dt);
    const __m256d one = _mm256_set1_pd(1.0);

    std::size_t i = 0;
    for (; i + 4 <= r.count; i += 4) {
        const double* u = r.u + i;
        const double* kx = r.kx + i;
        const double* ky = r.ky + i;
        const double* kz = r.kz + i;
        const __m256d c = _mm256_loadu_pd(u);
        __m256d flux = _mm256_mul_pd(_mm256_loadu_pd(kx - 1), _mm256_sub_pd(_mm256_loadu_pd(u - 1), c));
        flux = _mm256_add_pd(flux, _mm256_mul_pd(_mm256_loadu_pd(kx), _mm256_sub_pd(_mm256_loadu_pd(u + 1), c)));
        flux = _mm256_add_pd(flux, _mm256_mul_pd(_mm256_loadu_pd(ky - sy), _mm256_sub_pd(_mm256_loadu_pd(u - sy), c)));
        flux = _mm256_add_pd(flux, _mm256_mul_pd(_mm256_loadu_pd(ky), _mm256_sub_pd(_mm256_loadu_pd(u + sy), c)));
        flux = _mm256_add_pd(flux, _mm256_mul_pd(_mm256_loadu_pd(kz - sz), _mm256_sub_pd(_mm256_loadu_pd(u - sz), c)));
        flux = _mm256_add_pd(flux, _mm256_mul_pd(_mm256_loadu_pd(kz), _mm256_sub_pd(_mm256_loadu_pd(u + sz), c)));
        const __m256d growth = _mm256_mul_pd(_mm256_mul_pd(rho, c), _mm256_sub_pd(one, c));
        _mm256_storeu_pd(r.out + i, _mm256_add_pd(c, _mm256_mul_pd(dt, _mm256_add_pd(flux, growth))));
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

// Nibble-lookup popcount (Mula, Kurz, Lemire).
inline __m256i popcount_bytes(__m256i v) {
    const __m256i lookup = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                            0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
    const __m256i low = _mm256_set1_epi8(0x0f);
    const __m256i lo = _mm256_and_si256(v, low);
    const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low);
    return _mm256_add_epi8(_mm256_shuffle_epi8(lookup, lo), _mm256_shuffle_epi8(lookup, hi));
}

inline std::uint64_t hsum_epi64(__m256i v) {
    return static_cast<std::uint64_t>(_mm256_extract_epi64(v, 0)) +
           static_cast<std::uint64_t>(_mm256_extract_epi64(v, 1)) +
           static_cast<std::uint64_t>(_mm256_extract_epi64(v, 2)) +
           static_cast<std::uint64_t>(_mm256_extract_epi64(v, 3));
}

std::uint64_t popcount_avx2(const std::uint64_t* a, std::size_t n) {
    __m256i acc = _mm256_setzero_si256();
    const __m256i zero = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256i v0 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
        const __m256i v1 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i + 4));
        const __m256i c = _mm256_add_epi8(popcount_bytes(v0), popcount_bytes(v1));
        acc = _mm256_add_epi64(acc, _mm256_sad_epu8(c, zero));
    }
    std::uint64_t total = hsum_epi64(acc);
    for (; i < n; ++i) {
        total += static_cast<std::uint64_t>(_mm_popcnt_u64(a[i]));
    }
    return total;
}

std::uint64_t and_popcount_avx2(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) {
    __m256i acc = _mm256_setzero_si256();
    const __m256i zero = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256i v0 = _mm256_and_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)),
                                            _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
        const __m256i v1 = _mm256_and_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i + 4)),
                                            _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i + 4)));
        const __m256i c = _mm256_add_epi8(popcount_bytes(v0), popcount_bytes(v1));
        acc = _mm256_add_epi64(acc, _mm256_sad_epu8(c, zero));
    }
    std::uint64_t total = hsum_epi64(acc);
    for (; i < n; ++i) {
        total += static_cast<std::uint64_t>(_mm_popcnt_u64(a[i] & b[i]));
    }
    return total;
}

double squared_l2_avx2(const float* a, const float* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
        const __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
        const __m256d d = _mm256_sub_pd(va, vb);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    for (; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s = s + d * d;
    }
    return s;
}

}  // namespace

namespace detail {
const Table kAvx2{&stencil_row_avx2, &popcount_avx2, &and_popcount_avx2, &squared_l2_avx2};
}

}  // namespace gq::kernels
