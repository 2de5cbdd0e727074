#include <doctest.h>

#include <cmath>
#include <random>

#include "gq/atlas.hpp"
#include "gq/error.hpp"
#include "gq/forward.hpp"
#include "gq/kernels/kernels.hpp"

using namespace gq;

namespace {

double logistic(double u0, double rho, double t) { return u0 / (u0 + (1.0 - u0) * std::exp(-rho * t)); }

// The solver's explicit update at a voxel with no diffusion, written out
// independently: full steps of dt, then one shortened step landing on t_end.
double euler_logistic(double u0, double rho, double t_end, double dt) {
    std::size_t full = 0;
    while (static_cast<double>(full + 1) * dt < t_end) ++full;
    double u = u0;
    for (std::size_t s = 0; s <= full; ++s) {
        const double h = s == full ? t_end - static_cast<double>(full) * dt : dt;
        u = u + h * (0.0 + (rho * u) * (1.0 - u));
    }
    return u;
}

// Fine RK4 integration of du/dt = rho u (1-u).
double rk4_logistic(double u0, double rho, double t_end) {
    const int n = 100000;
    const double h = t_end / n;
    double u = u0;
    auto f = [rho](double v) { return rho * v * (1.0 - v); };
    for (int i = 0; i < n; ++i) {
        const double k1 = f(u), k2 = f(u + 0.5 * h * k1), k3 = f(u + 0.5 * h * k2), k4 = f(u + h * k3);
        u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return u;
}

const TissueAtlas& atlas16() {
    static const TissueAtlas a = make_phantom_atlas(16, 1.0);
    return a;
}

const TissueAtlas& atlas32() {
    static const TissueAtlas a = make_phantom_atlas(32, 2.0);
    return a;
}

}  // namespace

TEST_CASE("diffusion field follows tissue") {
    const TissueAtlas& a = atlas32();
    const ScalarField d = diffusion_field(a, 0.2);
    CHECK(d.at(16 + 6, 16, 16) == 0.2);                        // white matter
    CHECK(d.at(16 + 11, 16, 16) == doctest::Approx(0.02).epsilon(1e-15));  // gray matter
    CHECK(d.at(16, 16, 16) == 0.0);                            // ventricle
    CHECK(d.at(0, 0, 0) == 0.0);
}

TEST_CASE("stable time step") {
    CHECK(stable_dt(0.15, 0.01, 1.0, 0.9) == doctest::Approx(0.9 / 0.91).epsilon(1e-15));
    CHECK(stable_dt(0.01, 10.0, 2.0, 0.9) == doctest::Approx(0.9 / 10.015).epsilon(1e-15));
    for (double rho : {0.0, 0.5, 3.0}) {
        CHECK(stable_dt(1.0, rho, 2.0, 1.0) == doctest::Approx(1.0 / (1.5 + rho)).epsilon(1e-15));
    }
    CHECK(std::isinf(stable_dt(0.0, 0.0, 1.0, 0.9)));
    // Atlas overload uses the largest diffusivity, which is white matter.
    CHECK(stable_dt(atlas32(), 0.3, 0.05, 0.9) == stable_dt(0.3, 0.05, 2.0, 0.9));
}

TEST_CASE("logistic growth without diffusion") {
    const TissueAtlas& a = atlas16();
    const ScalarField zero(a.dims());
    ForwardSolver solver(a);
    const GrowthParams p{11, 8, 8, 0.0, 0.1, 30.0};

    SUBCASE("closed form value") {
        CHECK(logistic(0.1, 0.1, 30.0) == doctest::Approx(0.69057).epsilon(1e-5));
        CHECK(rk4_logistic(0.1, 0.1, 30.0) == doctest::Approx(logistic(0.1, 0.1, 30.0)).epsilon(1e-12));
    }
    SUBCASE("seed follows the explicit update exactly and the closed form closely") {
        SolverConfig cfg;
        cfg.dt_override = 0.01;
        const auto r = solver.run_with_diffusion(zero, p, cfg);
        const double seed = r.density.at(11, 8, 8);
        CHECK(seed == euler_logistic(0.1, 0.1, 30.0, 0.01));
        CHECK(std::abs(seed - logistic(0.1, 0.1, 30.0)) / logistic(0.1, 0.1, 30.0) < 1e-3);
        CHECK(r.density.sum() == seed);
        CHECK(r.steps == 3000);
    }
    SUBCASE("first-order convergence in dt") {
        double err[3];
        const double dts[3] = {0.4, 0.2, 0.1};
        for (int i = 0; i < 3; ++i) {
            SolverConfig cfg;
            cfg.dt_override = dts[i];
            err[i] = std::abs(solver.run_with_diffusion(zero, p, cfg).density.at(11, 8, 8) - logistic(0.1, 0.1, 30.0));
        }
        CHECK(err[0] / err[1] >= 1.5);
        CHECK(err[0] / err[1] <= 2.5);
        CHECK(err[1] / err[2] >= 1.5);
        CHECK(err[1] / err[2] <= 2.5);
    }
}

TEST_CASE("end time zero gives the initial condition") {
    const auto r = simulate_detailed(atlas16(), {11, 8, 8, 0.1, 0.1, 0.0});
    CHECK(r.steps == 0);
    CHECK(r.density.at(11, 8, 8) == 0.1);
    CHECK(r.density.sum() == 0.1);
}

TEST_CASE("pure diffusion conserves mass") {
    const TissueAtlas& a = atlas32();
    SolverConfig cfg;
    cfg.dt_override = stable_dt(a, 0.3, 0.0, 0.9);
    const GrowthParams p{22, 16, 16, 0.3, 0.0, 1000.0 * *cfg.dt_override};
    const auto r = simulate_detailed(a, p, cfg);
    CHECK(r.steps >= 1000);
    CHECK(std::abs(r.density.sum() - cfg.u0) / cfg.u0 <= 1e-6);
    CHECK(r.density.max() < cfg.u0);
}

TEST_CASE("mirror symmetry of a centered seed row") {
    const TissueAtlas& a = atlas32();
    const auto u = simulate(a, {22, 16, 16, 0.2, 0.05, 120.0});
    double worst = 0.0;
    for (std::uint32_t z = 1; z < 32; ++z)
        for (std::uint32_t y = 1; y < 32; ++y)
            for (std::uint32_t x = 0; x < 32; ++x) {
                worst = std::max(worst, std::abs(u.at(x, y, z) - u.at(x, 32 - y, z)));
                worst = std::max(worst, std::abs(u.at(x, y, z) - u.at(x, z, y)));
            }
    CHECK(worst <= 1e-12);
}

TEST_CASE("density stays in the unit interval and outside the domain stays zero") {
    const TissueAtlas& a = atlas32();
    const auto u = simulate(a, {20, 12, 18, 0.3, 0.1, 360.0});
    for (std::size_t i = 0; i < u.dims().count(); ++i) {
        CHECK(u[i] >= 0.0);
        CHECK(u[i] <= 1.0 + kBoundTolerance);
        if (!a.in_domain(i)) CHECK(u[i] == 0.0);
    }
    CHECK(u.max() > 0.6);
}

TEST_CASE("solver argument errors") {
    const TissueAtlas& a = atlas16();
    CHECK_THROWS_AS(simulate(a, {0, 0, 0, 0.1, 0.1, 10.0}), std::invalid_argument);  // outside brain
    CHECK_THROWS_AS(simulate(a, {8, 8, 8, 0.1, 0.1, 10.0}), std::invalid_argument);  // ventricle
    CHECK_THROWS_AS(simulate(a, {11, 8, 8, -0.1, 0.1, 10.0}), std::invalid_argument);
    CHECK_THROWS_AS(simulate(a, {11, 8, 8, 0.1, NAN, 10.0}), std::invalid_argument);
    CHECK_THROWS_AS(simulate(a, {11, 8, 8, 0.1, 0.1, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(simulate(a, {11, 8, 8, 0.1, 0.1, 10.0}, SolverConfig{.u0 = 1.5, .dt_override = {}}), std::invalid_argument);
}

TEST_CASE("an unstable step is reported as a numerical error") {
    SolverConfig cfg;
    cfg.dt_override = 20.0 * stable_dt(atlas16(), 0.3, 0.05, 1.0);
    cfg.check_every = 4;
    CHECK_THROWS_AS(simulate(atlas16(), {11, 8, 8, 0.3, 0.05, 400.0}, cfg), NumericalError);
}

TEST_CASE("solver reuse matches fresh runs") {
    ForwardSolver solver(atlas32());
    const GrowthParams p1{20, 12, 18, 0.2, 0.05, 100.0};
    const GrowthParams p2{10, 16, 16, 0.1, 0.08, 200.0};
    const auto a1 = solver.run(p1).density;
    const auto a2 = solver.run(p2).density;
    CHECK(a1 == simulate(atlas32(), p1));
    CHECK(a2 == simulate(atlas32(), p2));
}

TEST_CASE("thresholding") {
    const GridDims d = GridDims::cube(4, 1.0);
    ScalarField half(d, 0.5);
    CHECK(threshold(half, 0.6).empty());
    CHECK(threshold(half, 0.5).popcount() == 64);
    CHECK_THROWS_AS(threshold(half, 1.0), std::invalid_argument);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ScalarField f(GridDims::cube(8, 1.0));
    for (auto& v : f.values()) v = u(rng);
    const auto seg = segment(f);
    CHECK(seg.t1gd.subset_of(seg.flair));
    for (std::size_t i = 0; i < f.dims().count(); ++i) {
        CHECK(seg.flair.get(i) == (f[i] >= 0.2));
        CHECK(seg.t1gd.get(i) == (f[i] >= 0.6));
    }
    CHECK(segment(ScalarField(d)).flair.empty());
}

TEST_CASE("a saturated point tumor segments to its seed") {
    const TissueAtlas& a = atlas16();
    ForwardSolver solver(a);
    const auto r = solver.run_with_diffusion(ScalarField(a.dims()), {11, 8, 8, 0.0, 0.1, 60.0});
    const auto seg = segment(r.density);
    BinaryMask only(a.dims());
    only.set(11, 8, 8);
    CHECK(seg.t1gd == only);
    CHECK(seg.flair == only);
}

TEST_CASE("scalar and SIMD kernels give identical simulations") {
    const GrowthParams p{20, 12, 18, 0.25, 0.07, 200.0};
    const auto before = kernels::active_isa();
    REQUIRE(kernels::set_active_isa(kernels::Isa::Scalar));
    const auto scalar = simulate(atlas32(), p);
    for (auto isa : {kernels::Isa::Avx2, kernels::Isa::Neon}) {
        if (!kernels::set_active_isa(isa)) continue;
        CHECK(simulate(atlas32(), p) == scalar);
    }
    kernels::set_active_isa(before);
}
