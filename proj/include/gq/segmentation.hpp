#pragma once

#include <filesystem>

#include "gq/grid.hpp"

namespace gq {

/// Density isolines that stand in for the visible tumor outline on each
/// imaging channel.
struct Thresholds {
    double t1gd = 0.6;
    double flair = 0.2;

    bool operator==(const Thresholds&) const = default;
};

/// Binary T1Gd and FLAIR masks on one grid. Synthetic pairs satisfy
/// t1gd ⊆ flair; real segmentations may not.
struct SegmentationPair {
    BinaryMask t1gd;
    BinaryMask flair;

    const GridDims& dims() const noexcept { return flair.dims(); }
    bool operator==(const SegmentationPair&) const = default;
};

/// GQBM container: magic "GQBM", version u32 = 1, nx/ny/nz u32, dx f64,
/// then the packed bits.
std::vector<std::uint8_t> encode_mask(const BinaryMask& mask);
BinaryMask decode_mask(std::span<const std::uint8_t> bytes);
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);

/// GQU1 container: magic "GQU1", version u32 = 1, nx/ny/nz u32, dx f64,
/// then one f32 per voxel.
std::vector<std::uint8_t> encode_field(const ScalarField& field);
ScalarField decode_field(std::span<const std::uint8_t> bytes);
void save_field(const ScalarField& field, const std::filesystem::path& path);
ScalarField load_field(const std::filesystem::path& path);

}  // namespace gq
