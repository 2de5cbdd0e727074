#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

#include "gq/error.hpp"
#include "gq/forward.hpp"
#include "gq/kernels/kernels.hpp"

namespace gq {

ScalarField diffusion_field(const TissueAtlas& atlas, double dw) {
    ScalarField d(atlas.dims());
    for (std::size_t i = 0; i < d.dims().count(); ++i) {
        if (atlas.in_domain(i)) {
            d[i] = dw * (atlas.p_wm[i] + 0.1 * atlas.p_gm[i]);
        }
    }
    return d;
}

double stable_dt(double d_max, double rho, double dx, double safety) {
    // Every voxel update is then a convex combination of its neighbors plus a
    // logistic increment that cannot push it past 1.
    const double rate = 6.0 * d_max / (dx * dx) + rho;
    return rate > 0.0 ? safety / rate : std::numeric_limits<double>::infinity();
}

double stable_dt(const TissueAtlas& atlas, double dw, double rho, double safety) {
    return stable_dt(diffusion_field(atlas, dw).max(), rho, atlas.dims().dx, safety);
}

ForwardSolver::ForwardSolver(const TissueAtlas& atlas) : atlas_(&atlas) {
    validate(atlas);
    const GridDims& d = atlas.dims();
    sy_ = std::ptrdiff_t{d.nx} + 2;
    sz_ = sy_ * (std::ptrdiff_t{d.ny} + 2);
    const std::size_t n = static_cast<std::size_t>(sz_) * (d.nz + 2);
    dom_.assign(n, 0);
    base_.assign(n, 0.0);
    for (auto* v : {&d_, &kx_, &ky_, &kz_, &u_, &next_}) v->assign(n, 0.0);

    for (std::uint32_t z = 0; z < d.nz; ++z) {
        for (std::uint32_t y = 0; y < d.ny; ++y) {
            std::int64_t first = -1, last = -1;
            for (std::uint32_t x = 0; x < d.nx; ++x) {
                const std::size_t i = d.index(x, y, z);
                if (!atlas.in_domain(i)) continue;
                dom_[padded(x, y, z)] = 1;
                base_[padded(x, y, z)] = atlas.p_wm[i] + 0.1 * atlas.p_gm[i];
                if (first < 0) first = x;
                last = x;
            }
            if (first >= 0) {
                spans_.push_back({padded(static_cast<std::uint32_t>(first), y, z),
                                  static_cast<std::size_t>(last - first + 1)});
            }
        }
    }
}

SimulationResult ForwardSolver::run(const GrowthParams& params, const SolverConfig& config) {
    if (!(params.dw >= 0.0) || !std::isfinite(params.dw)) {
        throw std::invalid_argument("white-matter diffusivity must be finite and non-negative");
    }
    for (const Span& s : spans_) {
        for (std::size_t k = 0; k < s.count; ++k) {
            const std::ptrdiff_t p = s.offset + static_cast<std::ptrdiff_t>(k);
            d_[p] = dom_[p] ? params.dw * base_[p] : 0.0;
        }
    }
    return integrate(params, config);
}

SimulationResult ForwardSolver::run_with_diffusion(const ScalarField& diffusion, const GrowthParams& params,
                                                   const SolverConfig& config) {
    const GridDims& d = atlas_->dims();
    require_same_dims(d, diffusion.dims(), "diffusion field");
    for (std::uint32_t z = 0; z < d.nz; ++z) {
        for (std::uint32_t y = 0; y < d.ny; ++y) {
            for (std::uint32_t x = 0; x < d.nx; ++x) {
                const std::ptrdiff_t p = padded(x, y, z);
                if (!dom_[p]) continue;
                const double v = diffusion.at(x, y, z);
                if (!(v >= 0.0) || !std::isfinite(v)) {
                    throw std::invalid_argument("diffusivity must be finite and non-negative");
                }
                d_[p] = v;
            }
        }
    }
    return integrate(params, config);
}

SimulationResult ForwardSolver::integrate(const GrowthParams& params, const SolverConfig& config) {
    const GridDims& dims = atlas_->dims();
    if (!dims.contains(params.seed_x, params.seed_y, params.seed_z) ||
        !atlas_->in_domain(dims.index(params.seed_x, params.seed_y, params.seed_z))) {
        throw std::invalid_argument("seed (" + std::to_string(params.seed_x) + "," + std::to_string(params.seed_y) +
                                    "," + std::to_string(params.seed_z) + ") is outside the simulation domain");
    }
    if (!(params.rho >= 0.0) || !std::isfinite(params.rho)) {
        throw std::invalid_argument("proliferation rate must be finite and non-negative");
    }
    if (!(params.t_end >= 0.0) || !std::isfinite(params.t_end)) {
        throw std::invalid_argument("end time must be finite and non-negative");
    }
    if (!(config.u0 > 0.0 && config.u0 < 1.0)) {
        throw std::invalid_argument("seed density u0 must lie in (0,1)");
    }
    if (!(config.dt_safety > 0.0 && config.dt_safety <= 1.0)) {
        throw std::invalid_argument("dt safety factor must lie in (0,1]");
    }
    if (config.dt_override && !(*config.dt_override > 0.0)) {
        throw std::invalid_argument("dt override must be positive");
    }

    // Face coefficients D_face / dx^2 toward +x, +y, +z. Faces leaving the
    // domain stay zero, which is the zero-flux boundary.
    const double inv_dx2 = 1.0 / (dims.dx * dims.dx);
    double d_max = 0.0;
    for (const Span& s : spans_) {
        for (std::size_t k = 0; k < s.count; ++k) {
            const std::ptrdiff_t p = s.offset + static_cast<std::ptrdiff_t>(k);
            u_[p] = 0.0;
            next_[p] = 0.0;
            if (!dom_[p]) continue;
            const double d = d_[p];
            d_max = std::max(d_max, d);
            kx_[p] = dom_[p + 1] ? 0.5 * (d + d_[p + 1]) * inv_dx2 : 0.0;
            ky_[p] = dom_[p + sy_] ? 0.5 * (d + d_[p + sy_]) * inv_dx2 : 0.0;
            kz_[p] = dom_[p + sz_] ? 0.5 * (d + d_[p + sz_]) * inv_dx2 : 0.0;
        }
    }

    const double dt = config.dt_override ? *config.dt_override
                                         : stable_dt(d_max, params.rho, dims.dx, config.dt_safety);
    std::size_t steps = 0;
    double last = 0.0;
    if (params.t_end > 0.0) {
        if (std::isinf(dt)) {
            steps = 1;
            last = params.t_end;
        } else {
            const double q = std::ceil(params.t_end / dt);
            if (q > 1e9) {
                throw std::invalid_argument("time step too small for t_end (" + std::to_string(q) + " steps)");
            }
            steps = static_cast<std::size_t>(q);
            if (steps > 1 && static_cast<double>(steps - 1) * dt >= params.t_end) --steps;
            steps = std::max<std::size_t>(steps, 1);
            last = params.t_end - static_cast<double>(steps - 1) * dt;
        }
    }

    u_[padded(params.seed_x, params.seed_y, params.seed_z)] = config.u0;

    const auto& table = kernels::active();
    const std::size_t check_every = std::max<std::size_t>(config.check_every, 1);
    for (std::size_t step = 1; step <= steps; ++step) {
        const double h = step == steps ? last : dt;
        for (const Span& s : spans_) {
            const kernels::StencilRow row{u_.data() + s.offset, next_.data() + s.offset, kx_.data() + s.offset,
                                          ky_.data() + s.offset, kz_.data() + s.offset, sy_, sz_, s.count,
                                          params.rho, h};
            table.stencil_row(row);
        }
        u_.swap(next_);
        if (step % check_every == 0 || step == steps) {
            for (const Span& s : spans_) {
                for (std::size_t k = 0; k < s.count; ++k) {
                    const double v = u_[s.offset + static_cast<std::ptrdiff_t>(k)];
                    if (!std::isfinite(v)) {
                        throw NumericalError("non-finite density at step " + std::to_string(step));
                    }
                    if (v < -kBoundTolerance || v > 1.0 + kBoundTolerance) {
                        char buf[64];
                        std::snprintf(buf, sizeof buf, "%.17g", v);
                        throw NumericalError(std::string("density ") + buf + " left [0,1] at step " +
                                             std::to_string(step));
                    }
                }
            }
        }
    }

    SimulationResult result{ScalarField(dims), steps, dt};
    for (std::uint32_t z = 0; z < dims.nz; ++z) {
        for (std::uint32_t y = 0; y < dims.ny; ++y) {
            const double* row = u_.data() + padded(0, y, z);
            std::copy(row, row + dims.nx, &result.density.at(0, y, z));
        }
    }
    return result;
}

SimulationResult simulate_detailed(const TissueAtlas& atlas, const GrowthParams& params,
                                   const SolverConfig& config) {
    return ForwardSolver(atlas).run(params, config);
}

SimulationResult simulate_with_diffusion(const TissueAtlas& atlas, const ScalarField& diffusion,
                                         const GrowthParams& params, const SolverConfig& config) {
    return ForwardSolver(atlas).run_with_diffusion(diffusion, params, config);
}

BinaryMask threshold(const ScalarField& u, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw std::invalid_argument("threshold must lie in (0,1)");
    }
    BinaryMask m(u.dims());
    const auto v = u.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] >= level) m.set(i);
    }
    return m;
}

SegmentationPair segment(const ScalarField& u, const Thresholds& thresholds) {
    return {threshold(u, thresholds.t1gd), threshold(u, thresholds.flair)};
}

}  // namespace gq
