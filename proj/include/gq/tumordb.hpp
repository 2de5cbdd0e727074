#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gq/atlas.hpp"
#include "gq/features.hpp"
#include "gq/forward.hpp"
#include "gq/hash.hpp"
#include "gq/segmentation.hpp"

namespace gq {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const Range&) const = default;
};

/// Uniform sampling intervals. The seed is drawn uniformly over domain voxels.
struct ParamRanges {
    Range dw{0.02, 0.3};      // mm^2/day
    Range rho{0.02, 0.1};     // 1/day
    Range t_end{60.0, 360.0};  // days

    void validate() const;
    bool operator==(const ParamRanges&) const = default;
};

/// Accepted FLAIR size as a fraction of the domain voxel count, inclusive.
struct SizeFilter {
    double min_frac = 0.001;
    double max_frac = 0.15;

    void validate() const;
    bool operator==(const SizeFilter&) const = default;
};

/// Contents of a ranges file: lines of `key = min max` with keys dw, rho,
/// tend and size; `#` starts a comment. Missing keys keep their defaults.
struct RangesConfig {
    ParamRanges ranges;
    SizeFilter size;
};
RangesConfig parse_ranges(std::string_view text);
RangesConfig load_ranges(const std::filesystem::path& path);

GrowthParams sample_params(const ParamRanges& ranges, const GridDims& dims, std::span<const std::size_t> domain_voxels,
                           std::uint64_t rng_state);
GrowthParams sample_params(const ParamRanges& ranges, const TissueAtlas& atlas, std::uint64_t rng_state);

/// Order-0 resampling: output voxel (x,y,z) = input voxel (f*x, f*y, f*z).
/// Dims must be divisible by factor.
BinaryMask downsample(const BinaryMask& mask, std::uint32_t factor);
SegmentationPair downsample(const SegmentationPair& pair, std::uint32_t factor);

struct PairCounts {
    std::uint64_t t1gd = 0;
    std::uint64_t flair = 0;
};

struct TumorRecord {
    std::uint64_t id = 0;
    GrowthParams params;
    SegmentationPair seg;
    SegmentationPair down2;
    SegmentationPair down4;
    FeatureVector features;

    /// factor 1, 2 or 4.
    const SegmentationPair& at_factor(std::uint32_t factor) const;
    const PairCounts& counts_at(std::uint32_t factor) const;

    /// Fills the downsampled masks, features and popcount caches from seg.
    void derive();
    /// Recomputes popcount caches only.
    void recount();

    bool operator==(const TumorRecord& o) const {
        return id == o.id && params == o.params && seg == o.seg && down2 == o.down2 && down4 == o.down4 &&
               features == o.features;
    }

private:
    std::array<PairCounts, 3> counts_{};
};

/// Immutable after construction; safe to share across query workers.
struct TumorDatabase {
    Digest atlas_fingerprint{};
    GridDims dims;
    Thresholds thresholds;
    std::vector<TumorRecord> records;
    FeatureStats stats;

    std::size_t size() const noexcept { return records.size(); }
    bool operator==(const TumorDatabase&) const = default;
};

/// Stream tags that keep database and held-out query candidates disjoint.
inline constexpr std::uint64_t kDatabaseStream = 0x6462;
inline constexpr std::uint64_t kQueryStream = 0x7179;

struct BuildOptions {
    std::size_t n_target = 2000;
    ParamRanges ranges;
    SizeFilter size_filter;
    std::uint64_t master_seed = 1;
    unsigned jobs = 1;
    Thresholds thresholds;
    SolverConfig solver;
};

struct BuildStats {
    std::uint64_t examined = 0;
    std::uint64_t accepted = 0;
    std::uint64_t too_small = 0;
    std::uint64_t too_large = 0;
    std::uint64_t vetoed = 0;

    std::string str() const;
};

/// One simulated candidate that passed the size filter.
struct Candidate {
    std::uint64_t index = 0;
    GrowthParams params;
    SegmentationPair seg;
};

/// Simulates candidates index = 0, 1, 2, ... with rng state
/// stream_key(seed, stream, index), accepting them in index order until
/// `count` pass the size filter and `veto` (if given) returns false. The
/// accepted list depends only on the inputs, never on `jobs`.
///
/// Throws BuildGaveUp once at least 10*count candidates were examined and
/// fewer than 0.1% of them were accepted.
std::vector<Candidate> generate_candidates(const TissueAtlas& atlas, std::size_t count, const ParamRanges& ranges,
                                           const SizeFilter& filter, std::uint64_t seed, std::uint64_t stream,
                                           unsigned jobs, const Thresholds& thresholds, const SolverConfig& solver,
                                           const std::function<bool(const SegmentationPair&)>& veto = {},
                                           BuildStats* stats = nullptr);

TumorDatabase build_database(const TissueAtlas& atlas, const BuildOptions& options, BuildStats* stats = nullptr);

std::vector<std::uint8_t> encode_database(const TumorDatabase& db);

struct LoadOptions {
    /// Re-derive masks and features and check record invariants.
    bool validate = false;
};
TumorDatabase decode_database(std::span<const std::uint8_t> bytes, const LoadOptions& options = {});

void save_db(const TumorDatabase& db, const std::filesystem::path& path);
TumorDatabase load_db(const std::filesystem::path& path, const LoadOptions& options = {});

/// Throws DimensionMismatch for a different grid and FormatError for a
/// different fingerprint: the atlas must be the one the database was
/// simulated in.
void require_atlas(const TumorDatabase& db, const TissueAtlas& atlas);

}  // namespace gq
