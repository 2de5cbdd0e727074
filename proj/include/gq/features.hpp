#pragma once

#include <array>
#include <span>
#include <string_view>

#include "gq/grid.hpp"
#include "gq/segmentation.hpp"

namespace gq {

/// Principal-axis shape descriptors of one binary mask. Axis lengths are
/// 4*sqrt(lambda_i) of the voxel-center covariance in mm;
/// elongation = sqrt(lambda2/lambda1), flatness = sqrt(lambda3/lambda1).
/// Degenerate masks (lambda1 = 0) report zero for everything but volume.
struct ShapeFeatures {
    double volume_mm3 = 0.0;
    double major_axis = 0.0;
    double minor_axis = 0.0;
    double least_axis = 0.0;
    double elongation = 0.0;
    double flatness = 0.0;

    bool operator==(const ShapeFeatures&) const = default;
};

inline constexpr std::size_t kShapeFeatureCount = 12;  // 6 per channel
using ShapeVector = std::array<double, kShapeFeatureCount>;

/// FLAIR center of mass (mm) plus shape descriptors of both channels. An
/// empty T1Gd channel contributes all-zero descriptors.
struct FeatureVector {
    std::array<double, 3> com{};
    ShapeFeatures flair;
    ShapeFeatures t1gd;

    /// FLAIR descriptors followed by T1Gd descriptors, in ShapeFeatures order.
    ShapeVector shape() const noexcept;
    static FeatureVector from_values(std::span<const double, 3 + kShapeFeatureCount> v);

    bool operator==(const FeatureVector&) const = default;
};

std::string_view shape_feature_name(std::size_t i);

/// Per-feature population mean and standard deviation over a database.
struct FeatureStats {
    ShapeVector mean{};
    ShapeVector stddev{};

    bool operator==(const FeatureStats&) const = default;
};

/// Arithmetic mean of set-voxel centers scaled by dx. Throws EmptyMaskError.
std::array<double, 3> center_of_mass(const BinaryMask& mask);

/// Throws EmptyMaskError.
ShapeFeatures shape_features(const BinaryMask& mask);

/// Requires a non-empty FLAIR mask (EmptyMaskError otherwise).
FeatureVector pair_features(const SegmentationPair& pair);

FeatureStats compute_stats(std::span<const FeatureVector> features);

/// Sum over shape features of |z(a) - z(b)| where z is the z-score under
/// stats. Features with zero stddev are skipped; the center of mass is not
/// part of the distance.
double feature_distance(const FeatureVector& a, const FeatureVector& b, const FeatureStats& stats);

/// Eigenvalues of the symmetric matrix [[xx,xy,xz],[xy,yy,yz],[xz,yz,zz]]
/// in descending order (cyclic Jacobi rotations).
std::array<double, 3> symmetric_eigenvalues(double xx, double yy, double zz, double xy, double xz, double yz);

}  // namespace gq
