#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gq/query.hpp"
#include "gq/tumordb.hpp"

namespace gq {

/// A held-out synthetic tumor with the parameters that produced it.
struct QueryCase {
    std::uint64_t index = 0;
    GrowthParams truth;
    SegmentationPair seg;
};

struct QuerySetOptions {
    std::size_t n = 50;
    std::uint64_t seed = 2;
    ParamRanges ranges;
    SizeFilter size_filter;
    unsigned jobs = 1;
    SolverConfig solver;
};

/// Simulates n tumors on the query rng stream (disjoint from every database
/// stream) in the database's atlas and thresholds. Candidates whose masks are
/// bit-identical to a database record are resampled and counted as vetoed.
std::vector<QueryCase> make_query_set(const TissueAtlas& atlas, const TumorDatabase& db, const QuerySetOptions& options,
                                      BuildStats* stats = nullptr);

/// Runs one strategy. db_vectors is required for Method::Embedding, where the
/// query is encoded with bitcode_embedding.
Ranking run_query(const TumorDatabase& db, const EmbeddingSet* db_vectors, Method method, const SegmentationPair& q,
                  const QueryOptions& opts);

/// Percentage of queries whose strategy top-1 id is among the first n ids of
/// the reference ranking. Throws std::invalid_argument on mismatched or empty
/// inputs.
double top_n_accuracy(std::span<const Ranking> strategy, std::span<const Ranking> reference, std::size_t n);

struct DiceTriple {
    double t1gd = 0.0;
    double flair = 0.0;
    double combined = 0.0;
};

/// Dice of every query against its strategy's top-1 record.
std::vector<DiceTriple> dice_distribution(const TumorDatabase& db, std::span<const SegmentationPair> queries,
                                          std::span<const Ranking> rankings);

struct MethodResult {
    Method method = Method::Direct;
    double top1 = 0.0;
    double top5 = 0.0;
    double top15 = 0.0;
    double mean_dice_combined = 0.0;
    double median_dice_combined = 0.0;
    std::optional<double> median_runtime_s;
};

struct EvalReport {
    std::size_t n_queries = 0;
    std::size_t db_size = 0;
    std::vector<MethodResult> rows;

    /// method,top1,top5,top15,mean_dice_combined,median_runtime_s with one
    /// row per method; the runtime is NA when timing was off.
    std::string csv() const;
};

inline const std::vector<Method> kAllMethods = {Method::Direct, Method::Ds2, Method::Ds4, Method::Features,
                                                Method::Embedding};

struct EvalOptions {
    std::vector<Method> methods = kAllMethods;
    /// Queries run concurrently on this many workers.
    unsigned jobs = 1;
    std::size_t n_prefilter = 1000;
    /// Record per-query wall-clock time. Off by default so reports are
    /// byte-reproducible.
    bool timing = false;
};

/// The reference for every strategy is the direct combined-Dice ranking.
EvalReport evaluate(const TumorDatabase& db, std::span<const SegmentationPair> queries, const EvalOptions& options = {});

struct BenchRow {
    Method method = Method::Direct;
    /// Median over repetitions of the per-repetition median query time.
    double median_s = 0.0;
    std::vector<double> rep_medians_s;
};

struct BenchReport {
    std::string machine;
    unsigned jobs = 1;
    std::string isa;
    std::size_t n_queries = 0;
    std::size_t db_size = 0;
    std::size_t reps = 0;
    std::vector<BenchRow> rows;

    std::string csv() const;
};

/// Times each strategy back-to-back, one query at a time, with `jobs`
/// workers inside each query. Requires reps >= 3.
BenchReport bench(const TumorDatabase& db, std::span<const SegmentationPair> queries, std::span<const Method> methods,
                  std::size_t reps, unsigned jobs = 1, std::size_t n_prefilter = 1000);

/// CPU model and logical core count, best effort.
std::string machine_info();

}  // namespace gq
