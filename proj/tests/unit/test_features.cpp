#include <doctest.h>

#include <cmath>
#include <random>

#include "gq/error.hpp"
#include "gq/features.hpp"
#include "helpers.hpp"

using namespace gq;

namespace {

using Mat3 = std::array<std::array<long double, 3>, 3>;

// Brute-force population covariance of the voxel coordinates (mm^2).
Mat3 covariance(const BinaryMask& m) {
    const GridDims& d = m.dims();
    long double mean[3] = {0, 0, 0};
    long double n = 0;
    m.for_each_set([&](std::size_t i) {
        const auto c = d.unindex(i);
        for (int a = 0; a < 3; ++a) mean[a] += c[a];
        n += 1;
    });
    for (auto& v : mean) v /= n;
    Mat3 cov{};
    m.for_each_set([&](std::size_t i) {
        const auto c = d.unindex(i);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) cov[a][b] += (c[a] - mean[a]) * (c[b] - mean[b]);
    });
    for (auto& row : cov)
        for (auto& v : row) v = v / n * d.dx * d.dx;
    return cov;
}

// Number of eigenvalues below x, from the signs of the LDL^T pivots of A - xI.
int count_below(const Mat3& a, long double x) {
    const long double tiny = 1e-300L;
    long double d1 = a[0][0] - x;
    if (d1 == 0) d1 = tiny;
    const long double l21 = a[1][0] / d1, l31 = a[2][0] / d1;
    long double d2 = (a[1][1] - x) - l21 * a[1][0];
    if (d2 == 0) d2 = tiny;
    const long double m32 = (a[2][1] - l31 * a[1][0]) / d2;
    const long double d3 = (a[2][2] - x) - l31 * a[2][0] - m32 * (a[2][1] - l31 * a[1][0]);
    return (d1 < 0) + (d2 < 0) + (d3 < 0);
}

// Eigenvalues by bisection on the inertia count, descending.
std::array<double, 3> bisect_eigenvalues(const Mat3& a) {
    long double r = 0;
    for (const auto& row : a)
        for (auto v : row) r += std::abs(v);
    std::array<double, 3> out{};
    for (int k = 0; k < 3; ++k) {  // k-th smallest
        long double lo = -r - 1, hi = r + 1;
        for (int it = 0; it < 200; ++it) {
            const long double mid = 0.5L * (lo + hi);
            (count_below(a, mid) > k ? hi : lo) = mid;
        }
        out[2 - k] = static_cast<double>(0.5L * (lo + hi));
    }
    return out;
}

BinaryMask blob(const GridDims& d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double cx = 4 + 8 * u(rng), cy = 4 + 8 * u(rng), cz = 4 + 8 * u(rng);
    const double ax = 1 + 4 * u(rng), ay = 1 + 4 * u(rng), az = 1 + 4 * u(rng);
    const double keep = 0.5 + 0.5 * u(rng);
    BinaryMask m(d);
    for (std::uint32_t z = 0; z < d.nz; ++z)
        for (std::uint32_t y = 0; y < d.ny; ++y)
            for (std::uint32_t x = 0; x < d.nx; ++x) {
                const double q = std::pow((x - cx) / ax, 2) + std::pow((y - cy) / ay, 2) + std::pow((z - cz) / az, 2);
                if (q <= 1.0 && u(rng) < keep) m.set(x, y, z);
            }
    if (m.empty()) m.set(8, 8, 8);
    return m;
}

}  // namespace

TEST_CASE("center of mass") {
    const GridDims d1 = GridDims::cube(8, 1.0);
    BinaryMask m(d1);
    m.set(0, 0, 0);
    m.set(2, 0, 0);
    CHECK(center_of_mass(m) == std::array<double, 3>{1.0, 0.0, 0.0});

    BinaryMask s(GridDims::cube(8, 2.0));
    s.set(3, 4, 5);
    CHECK(center_of_mass(s) == std::array<double, 3>{6.0, 8.0, 10.0});

    const GridDims d7 = GridDims::cube(7, 1.5);
    const auto full = test::box_mask(d7, {0, 0, 0}, {7, 7, 7});
    for (double c : center_of_mass(full)) CHECK(c == doctest::Approx(3.0 * 1.5).epsilon(1e-15));

    CHECK_THROWS_AS(center_of_mass(BinaryMask(d1)), EmptyMaskError);
}

TEST_CASE("single voxel is degenerate") {
    BinaryMask m(GridDims::cube(6, 2.0));
    m.set(1, 2, 3);
    const auto f = shape_features(m);
    CHECK(f.volume_mm3 == 8.0);
    CHECK(f.major_axis == 0.0);
    CHECK(f.minor_axis == 0.0);
    CHECK(f.least_axis == 0.0);
    CHECK(f.elongation == 0.0);
    CHECK(f.flatness == 0.0);
}

TEST_CASE("4x2x2 box") {
    const auto m = test::box_mask(GridDims::cube(8, 1.0), {1, 2, 3}, {4, 2, 2});
    const Mat3 cov = covariance(m);
    CHECK(static_cast<double>(cov[0][0]) == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(static_cast<double>(cov[1][1]) == doctest::Approx(0.25).epsilon(1e-15));
    const auto f = shape_features(m);
    CHECK(f.volume_mm3 == 16.0);
    CHECK(std::abs(f.major_axis - 4.0 * std::sqrt(1.25)) <= 1e-9);
    CHECK(std::abs(f.minor_axis - 2.0) <= 1e-9);
    CHECK(std::abs(f.least_axis - 2.0) <= 1e-9);
    CHECK(std::abs(f.elongation - std::sqrt(0.2)) <= 1e-9);
    CHECK(std::abs(f.flatness - std::sqrt(0.2)) <= 1e-9);
}

TEST_CASE("digital ball is nearly round") {
    const GridDims d = GridDims::cube(24, 1.0);
    BinaryMask m(d);
    for (std::uint32_t z = 0; z < 24; ++z)
        for (std::uint32_t y = 0; y < 24; ++y)
            for (std::uint32_t x = 0; x < 24; ++x) {
                const int dx = int(x) - 12, dy = int(y) - 12, dz = int(z) - 12;
                if (dx * dx + dy * dy + dz * dz <= 100) m.set(x, y, z);
            }
    const auto f = shape_features(m);
    CHECK(f.elongation >= 0.95);
    CHECK(f.elongation <= 1.0);
    CHECK(f.flatness >= 0.95);
}

TEST_CASE("Jacobi eigenvalues agree with a bisection oracle") {
    std::mt19937_64 rng(17);
    const GridDims d = GridDims::cube(16, 1.5);
    for (int rep = 0; rep < 100; ++rep) {
        const BinaryMask m = blob(d, rng);
        const Mat3 cov = covariance(m);
        const auto oracle = bisect_eigenvalues(cov);
        const auto f = shape_features(m);
        const double tol = 1e-9 * std::max(1.0, oracle[0]);
        double ev[3] = {f.major_axis / 4, f.minor_axis / 4, f.least_axis / 4};
        for (int k = 0; k < 3; ++k) {
            const double expect = oracle[k] < 1e-12 * oracle[0] ? 0.0 : oracle[k];
            CHECK(std::abs(ev[k] * ev[k] - expect) <= tol);
        }
        const auto direct = symmetric_eigenvalues(double(cov[0][0]), double(cov[1][1]), double(cov[2][2]),
                                                  double(cov[0][1]), double(cov[0][2]), double(cov[1][2]));
        for (int k = 0; k < 3; ++k) CHECK(std::abs(direct[k] - oracle[k]) <= tol);
    }
}

TEST_CASE("shape features are translation and axis-permutation invariant") {
    std::mt19937_64 rng(23);
    const GridDims d = GridDims::cube(24, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const BinaryMask m = blob(GridDims::cube(16, 1.0), rng);
        BinaryMask shifted(d), permuted(d), base(d);
        const std::uint32_t sx = rep % 8, sy = (rep * 3) % 8, sz = (rep * 5) % 8;
        m.for_each_set([&](std::size_t i) {
            const auto c = m.dims().unindex(i);
            base.set(c[0], c[1], c[2]);
            shifted.set(c[0] + sx, c[1] + sy, c[2] + sz);
            permuted.set(c[2], c[0], c[1]);
        });
        const auto f0 = shape_features(base);
        const auto f1 = shape_features(shifted);
        const auto f2 = shape_features(permuted);
        CHECK(f1 == f0);  // integer moments make this exact
        CHECK(std::abs(f2.major_axis - f0.major_axis) <= 1e-12 * std::max(1.0, f0.major_axis));
        CHECK(std::abs(f2.elongation - f0.elongation) <= 1e-12);
        CHECK(std::abs(f2.flatness - f0.flatness) <= 1e-12);
        const auto c0 = center_of_mass(base), c1 = center_of_mass(shifted);
        CHECK(c1[0] - c0[0] == doctest::Approx(sx).epsilon(1e-12));
    }
}

TEST_CASE("pair features") {
    const GridDims d = GridDims::cube(16, 1.0);
    SegmentationPair p{BinaryMask(d), test::box_mask(d, {2, 2, 2}, {4, 2, 2})};
    const auto f = pair_features(p);
    CHECK(f.t1gd == ShapeFeatures{});
    CHECK(f.flair == shape_features(p.flair));
    CHECK(f.com == center_of_mass(p.flair));
    const auto v = f.shape();
    CHECK(v[0] == 16.0);
    CHECK(v[6] == 0.0);
    CHECK(shape_feature_name(0) == "flair_volume_mm3");
    CHECK(shape_feature_name(6) == "t1gd_volume_mm3");
    std::array<double, 15> raw{};
    raw[0] = f.com[0];
    raw[1] = f.com[1];
    raw[2] = f.com[2];
    for (std::size_t i = 0; i < 12; ++i) raw[3 + i] = v[i];
    CHECK(FeatureVector::from_values(raw) == f);
    CHECK_THROWS_AS(pair_features({p.flair, BinaryMask(d)}), EmptyMaskError);
}

TEST_CASE("feature distance properties") {
    FeatureStats st;
    st.stddev.fill(0.0);
    st.stddev[0] = 2.0;
    st.mean[0] = 5.0;
    FeatureVector a, b, c;
    a.flair.volume_mm3 = 0.0;
    b.flair.volume_mm3 = 1.0;
    c.flair.volume_mm3 = 2.0;
    CHECK(feature_distance(a, a, st) == 0.0);
    CHECK(feature_distance(a, c, st) == 2.0 * feature_distance(a, b, st));
    CHECK(feature_distance(a, b, st) == 0.5);
    c.flair.major_axis = 100.0;  // zero stddev, ignored
    CHECK(feature_distance(a, c, st) == 1.0);

    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 3.0);
    std::vector<FeatureVector> fs(30);
    for (auto& f : fs) {
        f.flair = {n(rng), n(rng), n(rng), n(rng), n(rng), n(rng)};
        f.t1gd = {n(rng), n(rng), n(rng), n(rng), n(rng), n(rng)};
    }
    const auto stats = compute_stats(fs);
    for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
        CHECK(feature_distance(fs[i], fs[i + 1], stats) == feature_distance(fs[i + 1], fs[i], stats));
        CHECK(feature_distance(fs[i], fs[i + 1], stats) > 0.0);
    }
}

TEST_CASE("population statistics") {
    std::vector<FeatureVector> fs(4);
    const double vols[4] = {1.0, 2.0, 3.0, 4.0};
    for (int i = 0; i < 4; ++i) fs[i].flair.volume_mm3 = vols[i];
    const auto st = compute_stats(fs);
    CHECK(st.mean[0] == 2.5);
    CHECK(st.stddev[0] == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
    CHECK(st.stddev[1] == 0.0);
}
