#pragma once

#include <filesystem>
#include <vector>

#include "gq/grid.hpp"
#include "gq/hash.hpp"

namespace gq {

/// Tissue probability maps on a common grid. The simulation domain is the
/// set of voxels with p_wm + p_gm > kDomainThreshold.
struct TissueAtlas {
    static constexpr double kDomainThreshold = 0.1;

    ScalarField p_wm;
    ScalarField p_gm;
    ScalarField p_csf;

    const GridDims& dims() const noexcept { return p_wm.dims(); }

    bool in_domain(std::size_t i) const noexcept { return p_wm[i] + p_gm[i] > kDomainThreshold; }
    BinaryMask domain_mask() const;
    /// Linear indices of all domain voxels, ascending.
    std::vector<std::size_t> domain_voxels() const;

    bool operator==(const TissueAtlas&) const = default;
};

/// Checks probability ranges, the sum bound and a non-empty domain.
void validate(const TissueAtlas& atlas);

/// Hard-label concentric sphere phantom centered on voxel (n/2, n/2, n/2):
/// CSF ventricle to radius 0.08n, white matter to 0.28n, gray matter to
/// 0.38n, empty outside. Requires n >= 16.
TissueAtlas make_phantom_atlas(std::uint32_t n, double dx);

/// GQAT file encoding (see README for the layout).
std::vector<std::uint8_t> encode_atlas(const TissueAtlas& atlas);
TissueAtlas decode_atlas(std::span<const std::uint8_t> bytes);

void save_atlas(const TissueAtlas& atlas, const std::filesystem::path& path);
TissueAtlas load_atlas(const std::filesystem::path& path);

/// SHA-256 of the atlas's GQAT encoding. Stored in databases so that later
/// query generation can confirm it uses the same anatomy.
Digest atlas_fingerprint(const TissueAtlas& atlas);

}  // namespace gq
