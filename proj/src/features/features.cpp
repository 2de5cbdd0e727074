#include "gq/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "gq/error.hpp"

namespace gq {

namespace {

constexpr std::string_view kNames[kShapeFeatureCount] = {
    "flair_volume_mm3", "flair_major_axis_mm", "flair_minor_axis_mm", "flair_least_axis_mm",
    "flair_elongation", "flair_flatness",      "t1gd_volume_mm3",     "t1gd_major_axis_mm",
    "t1gd_minor_axis_mm", "t1gd_least_axis_mm", "t1gd_elongation",    "t1gd_flatness",
};

// Exact integer moments of the set voxels. Second moments are taken about
// the first set voxel so they do not depend on where the mask sits.
struct Moments {
    std::int64_t n = 0;
    std::int64_t sum_abs[3] = {0, 0, 0};
    std::int64_t s[3] = {0, 0, 0};
    std::int64_t ss[6] = {0, 0, 0, 0, 0, 0};  // xx yy zz xy xz yz
};

Moments moments(const BinaryMask& mask) {
    const GridDims& d = mask.dims();
    Moments m;
    std::int64_t origin[3] = {0, 0, 0};
    mask.for_each_set([&](std::size_t i) {
        const auto c = d.unindex(i);
        if (m.n == 0) {
            for (int a = 0; a < 3; ++a) origin[a] = c[a];
        }
        const std::int64_t r[3] = {c[0] - origin[0], c[1] - origin[1], c[2] - origin[2]};
        ++m.n;
        for (int a = 0; a < 3; ++a) {
            m.sum_abs[a] += c[a];
            m.s[a] += r[a];
        }
        m.ss[0] += r[0] * r[0];
        m.ss[1] += r[1] * r[1];
        m.ss[2] += r[2] * r[2];
        m.ss[3] += r[0] * r[1];
        m.ss[4] += r[0] * r[2];
        m.ss[5] += r[1] * r[2];
    });
    return m;
}

}  // namespace

ShapeVector FeatureVector::shape() const noexcept {
    return {flair.volume_mm3, flair.major_axis, flair.minor_axis, flair.least_axis, flair.elongation, flair.flatness,
            t1gd.volume_mm3,  t1gd.major_axis,  t1gd.minor_axis,  t1gd.least_axis,  t1gd.elongation,  t1gd.flatness};
}

FeatureVector FeatureVector::from_values(std::span<const double, 3 + kShapeFeatureCount> v) {
    FeatureVector f;
    f.com = {v[0], v[1], v[2]};
    f.flair = {v[3], v[4], v[5], v[6], v[7], v[8]};
    f.t1gd = {v[9], v[10], v[11], v[12], v[13], v[14]};
    return f;
}

std::string_view shape_feature_name(std::size_t i) { return i < kShapeFeatureCount ? kNames[i] : "?"; }

std::array<double, 3> symmetric_eigenvalues(double xx, double yy, double zz, double xy, double xz, double yz) {
    double a[3][3] = {{xx, xy, xz}, {xy, yy, yz}, {xz, yz, zz}};
    for (int sweep = 0; sweep < 64; ++sweep) {
        const double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
        if (off == 0.0) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const double apq = a[p][q];
                if (apq == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // A <- J^T A J for the rotation in the (p,q) plane.
                for (int k = 0; k < 3; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = a[q][p] = 0.0;
            }
        }
    }
    std::array<double, 3> ev = {a[0][0], a[1][1], a[2][2]};
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

std::array<double, 3> center_of_mass(const BinaryMask& mask) {
    const Moments m = moments(mask);
    if (m.n == 0) {
        throw EmptyMaskError("center of mass of an empty mask");
    }
    const double dx = mask.dims().dx;
    const double n = static_cast<double>(m.n);
    return {static_cast<double>(m.sum_abs[0]) / n * dx, static_cast<double>(m.sum_abs[1]) / n * dx,
            static_cast<double>(m.sum_abs[2]) / n * dx};
}

ShapeFeatures shape_features(const BinaryMask& mask) {
    const Moments m = moments(mask);
    if (m.n == 0) {
        throw EmptyMaskError("shape features of an empty mask");
    }
    const double dx = mask.dims().dx;
    const double scale = dx * dx / (static_cast<double>(m.n) * static_cast<double>(m.n));
    auto cov = [&](int sa, int a, int b) {
        return static_cast<double>(m.n * m.ss[sa] - m.s[a] * m.s[b]) * scale;
    };
    auto ev = symmetric_eigenvalues(cov(0, 0, 0), cov(1, 1, 1), cov(2, 2, 2), cov(3, 0, 1), cov(4, 0, 2),
                                    cov(5, 1, 2));
    ShapeFeatures f;
    f.volume_mm3 = static_cast<double>(m.n) * dx * dx * dx;
    if (!(ev[0] > 0.0)) return f;
    for (double& l : ev) {
        if (l < ev[0] * 1e-12) l = 0.0;
    }
    f.major_axis = 4.0 * std::sqrt(ev[0]);
    f.minor_axis = 4.0 * std::sqrt(ev[1]);
    f.least_axis = 4.0 * std::sqrt(ev[2]);
    f.elongation = std::sqrt(ev[1] / ev[0]);
    f.flatness = std::sqrt(ev[2] / ev[0]);
    return f;
}

FeatureVector pair_features(const SegmentationPair& pair) {
    FeatureVector f;
    f.com = center_of_mass(pair.flair);
    f.flair = shape_features(pair.flair);
    if (!pair.t1gd.empty()) {
        f.t1gd = shape_features(pair.t1gd);
    }
    return f;
}

FeatureStats compute_stats(std::span<const FeatureVector> features) {
    FeatureStats st;
    if (features.empty()) return st;
    const double n = static_cast<double>(features.size());
    for (const auto& f : features) {
        const auto v = f.shape();
        for (std::size_t i = 0; i < kShapeFeatureCount; ++i) st.mean[i] += v[i];
    }
    for (double& m : st.mean) m /= n;
    for (const auto& f : features) {
        const auto v = f.shape();
        for (std::size_t i = 0; i < kShapeFeatureCount; ++i) {
            const double d = v[i] - st.mean[i];
            st.stddev[i] += d * d;
        }
    }
    for (double& s : st.stddev) s = std::sqrt(s / n);
    return st;
}

double feature_distance(const FeatureVector& a, const FeatureVector& b, const FeatureStats& stats) {
    const auto va = a.shape();
    const auto vb = b.shape();
    double d = 0.0;
    for (std::size_t i = 0; i < kShapeFeatureCount; ++i) {
        const double sd = stats.stddev[i];
        if (!(sd > 0.0)) continue;
        d += std::abs((va[i] - stats.mean[i]) / sd - (vb[i] - stats.mean[i]) / sd);
    }
    return d;
}

}  // namespace gq
