#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gq/atlas.hpp"
#include "gq/grid.hpp"
#include "gq/segmentation.hpp"

namespace gq {

/// Growth parameters: seed voxel, white-matter diffusivity (mm^2/day),
/// proliferation rate (1/day) and tumor age (days). This is the answer to
/// the inverse problem.
struct GrowthParams {
    std::uint32_t seed_x = 0;
    std::uint32_t seed_y = 0;
    std::uint32_t seed_z = 0;
    double dw = 0.0;
    double rho = 0.0;
    double t_end = 0.0;

    bool operator==(const GrowthParams&) const = default;
};

/// Roundoff allowance on the [0,1] bound check: a voxel next to saturated
/// neighbors can land one ulp above 1.
inline constexpr double kBoundTolerance = 1e-12;

struct SolverConfig {
    /// Density placed on the seed voxel at t = 0.
    double u0 = 0.1;
    /// Fraction of the explicit stability limit used as the time step.
    double dt_safety = 0.9;
    /// Fixed step in days; replaces the stability-derived step when set.
    std::optional<double> dt_override;
    /// Bounds and finiteness are checked every this many steps and at the end.
    std::size_t check_every = 64;
};

/// D = dw * (p_wm + 0.1 p_gm) inside the domain, 0 elsewhere.
ScalarField diffusion_field(const TissueAtlas& atlas, double dw);

/// safety / (6 d_max / dx^2 + rho): the largest explicit step for which the
/// update keeps every voxel in [0,1]. Returns +inf when both rates are zero.
double stable_dt(double d_max, double rho, double dx, double safety);
double stable_dt(const TissueAtlas& atlas, double dw, double rho, double safety);

struct SimulationResult {
    ScalarField density;
    std::size_t steps = 0;
    double dt = 0.0;
};

/// Forward-Euler integration of du/dt = div(D grad u) + rho u (1 - u) with
/// zero flux across the domain boundary. Face diffusivities are the mean of
/// the two adjacent cells; faces touching a non-domain voxel carry no flux.
/// Integrates ceil(t_end/dt) steps, the last one shortened to land on t_end.
///
/// A solver caches the atlas geometry and its scratch buffers, so reuse one
/// per worker when running many simulations. It keeps a reference to the
/// atlas and is not safe for concurrent use.
class ForwardSolver {
public:
    explicit ForwardSolver(const TissueAtlas& atlas);

    /// Throws std::invalid_argument for a seed outside the domain or invalid
    /// rates, NumericalError when the state leaves [0,1] or turns non-finite.
    SimulationResult run(const GrowthParams& params, const SolverConfig& config = {});

    /// Explicit diffusivity field instead of dw (params.dw is ignored). A zero
    /// field gives pure logistic growth at the seed.
    SimulationResult run_with_diffusion(const ScalarField& diffusion, const GrowthParams& params,
                                        const SolverConfig& config = {});

    const TissueAtlas& atlas() const noexcept { return *atlas_; }

private:
    struct Span {
        std::ptrdiff_t offset;
        std::size_t count;
    };

    SimulationResult integrate(const GrowthParams& params, const SolverConfig& config);
    std::ptrdiff_t padded(std::uint32_t x, std::uint32_t y, std::uint32_t z) const noexcept {
        return (x + 1) + sy_ * (y + 1) + sz_ * (z + 1);
    }

    const TissueAtlas* atlas_;
    std::ptrdiff_t sy_ = 0;
    std::ptrdiff_t sz_ = 0;
    std::vector<Span> spans_;        // domain extent of each x-row
    std::vector<std::uint8_t> dom_;  // padded domain flags
    std::vector<double> base_;       // padded p_wm + 0.1 p_gm on the domain
    std::vector<double> d_, kx_, ky_, kz_, u_, next_;
};

SimulationResult simulate_detailed(const TissueAtlas& atlas, const GrowthParams& params,
                                   const SolverConfig& config = {});

SimulationResult simulate_with_diffusion(const TissueAtlas& atlas, const ScalarField& diffusion,
                                         const GrowthParams& params, const SolverConfig& config = {});

inline ScalarField simulate(const TissueAtlas& atlas, const GrowthParams& params, const SolverConfig& config = {}) {
    return simulate_detailed(atlas, params, config).density;
}

/// Bit set where u >= level. Requires 0 < level < 1.
BinaryMask threshold(const ScalarField& u, double level);

SegmentationPair segment(const ScalarField& u, const Thresholds& thresholds = {});

}  // namespace gq
