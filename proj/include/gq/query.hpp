#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gq/segmentation.hpp"
#include "gq/tumordb.hpp"

namespace gq {

enum class Method { Direct, Ds2, Ds4, Features, Embedding };

std::string_view method_name(Method m) noexcept;  // direct, ds2, ds4, rf, embed
std::optional<Method> parse_method(std::string_view name) noexcept;

struct RankEntry {
    std::uint64_t id = 0;
    double score = 0.0;
    bool operator==(const RankEntry&) const = default;
};

/// Records ordered best-first: by score in the declared direction, ties by
/// ascending id.
struct Ranking {
    Method method = Method::Direct;
    bool higher_is_better = true;
    std::vector<RankEntry> entries;

    bool operator==(const Ranking&) const = default;
};

/// 2|A∩B| / (|A|+|B|), with Dice(∅,∅) = 1. Throws DimensionMismatch.
double dice(const BinaryMask& a, const BinaryMask& b);
/// Same from precomputed counts.
double dice_from_counts(std::uint64_t intersection, std::uint64_t count_a, std::uint64_t count_b) noexcept;

/// Dice(T1Gd) + Dice(FLAIR), in [0,2].
double combined_dice(const SegmentationPair& q, const SegmentationPair& r);

struct QueryOptions {
    std::size_t k = 1;
    /// Workers for the scan over records (0 = all cores).
    unsigned jobs = 1;
    /// Stage-1 candidate count for the feature strategy.
    std::size_t n_prefilter = 1000;
};

/// Exhaustive combined-Dice scan at full resolution.
Ranking direct_query(const TumorDatabase& db, const SegmentationPair& q, const QueryOptions& opts = {});

/// Exhaustive combined-Dice scan over the stored factor-2 or factor-4 masks;
/// the query is downsampled with the same operator.
Ranking downsampled_query(const TumorDatabase& db, const SegmentationPair& q, std::uint32_t factor,
                          const QueryOptions& opts = {});

/// Two stages: the n_prefilter records whose FLAIR center of mass is nearest
/// the query's (ties by id), then those ranked by feature_distance. Returns
/// at most min(k, stage-1 size) entries. Throws EmptyMaskError for an empty
/// query FLAIR.
Ranking feature_query(const TumorDatabase& db, const SegmentationPair& q, const QueryOptions& opts = {});
Ranking feature_query(const TumorDatabase& db, const FeatureVector& q, const QueryOptions& opts = {});

/// Per-channel vectors for every record, stored row-major.
struct EmbeddingSet {
    std::size_t dim_t1gd = 0;
    std::size_t dim_flair = 0;
    std::vector<float> t1gd;
    std::vector<float> flair;

    std::size_t size() const noexcept { return dim_flair ? flair.size() / dim_flair : t1gd.size() / std::max<std::size_t>(dim_t1gd, 1); }
    std::span<const float> t1gd_row(std::size_t i) const { return std::span(t1gd).subspan(i * dim_t1gd, dim_t1gd); }
    std::span<const float> flair_row(std::size_t i) const { return std::span(flair).subspan(i * dim_flair, dim_flair); }
    void validate() const;

    bool operator==(const EmbeddingSet&) const = default;
};

/// GQEV container: magic "GQEV", version u32 = 1, count u64, dim_t1gd u32,
/// dim_flair u32, then per row dim_t1gd + dim_flair f32 values.
std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set);
EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes);
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);
EmbeddingSet load_embeddings(const std::filesystem::path& path);

/// Ranks by ||q_t1gd - r_t1gd||_2 + ||q_flair - r_flair||_2, ascending.
/// Throws DimensionMismatch when vector sizes disagree.
Ranking embedding_query(const EmbeddingSet& db_vectors, std::span<const float> q_t1gd, std::span<const float> q_flair,
                        const QueryOptions& opts = {});

/// Built-in stand-in for a learned encoder: the factor-4 masks as {0,1}
/// vectors, so distances are square roots of Hamming distances.
EmbeddingSet bitcode_embeddings(const TumorDatabase& db);
EmbeddingSet bitcode_embedding(const SegmentationPair& full_resolution_query);

/// The top-ranked record: its growth parameters solve the inverse problem.
struct Answer {
    std::uint64_t id = 0;
    double score = 0.0;
    GrowthParams params;
    const SegmentationPair* seg = nullptr;
};
Answer answer(const TumorDatabase& db, const Ranking& ranking);

/// Keeps the k best (id, score) pairs under the ranking order.
Ranking top_k(Method method, bool higher_is_better, std::span<const double> scores, std::size_t k);

}  // namespace gq
