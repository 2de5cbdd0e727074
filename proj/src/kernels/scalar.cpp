#include <bit>

#include "gq/kernels/kernels.hpp"

namespace gq::kernels {
namespace {

void stencil_row_scalar(const StencilRow& r) {
    const std::ptrdiff_t sy = r.y_stride;
    const std::ptrdiff_t sz = r.z_stride;
    for (std::size_t i = 0; i < r.count; ++i) {
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

std::uint64_t popcount_scalar(const std::uint64_t* a, std::size_t n) {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += static_cast<std::uint64_t>(std::popcount(a[i]));
    }
    return total;
}

std::uint64_t and_popcount_scalar(const std::uint64_t* a, const std::uint64_t* b, std::size_t n) {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += static_cast<std::uint64_t>(std::popcount(a[i] & b[i]));
    }
    return total;
}

double squared_l2_scalar(const float* a, const float* b, std::size_t n) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (std::size_t j = 0; j < 4; ++j) {
            const double d = static_cast<double>(a[i + j]) - static_cast<double>(b[i + j]);
            lane[j] = lane[j] + d * d;
        }
    }
    double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    for (; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s = s + d * d;
    }
    return s;
}

}  // namespace

namespace detail {
const Table kScalar{&stencil_row_scalar, &popcount_scalar, &and_popcount_scalar, &squared_l2_scalar};
}

}  // namespace gq::kernels
