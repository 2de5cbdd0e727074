#include "gq/query.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gq/error.hpp"
#include "gq/kernels/kernels.hpp"
#include "gq/parallel.hpp"

namespace gq {

std::string_view method_name(Method m) noexcept {
    switch (m) {
        case Method::Direct: return "direct";
        case Method::Ds2: return "ds2";
        case Method::Ds4: return "ds4";
        case Method::Features: return "rf";
        case Method::Embedding: return "embed";
    }
    return "?";
}

std::optional<Method> parse_method(std::string_view name) noexcept {
    for (Method m : {Method::Direct, Method::Ds2, Method::Ds4, Method::Features, Method::Embedding}) {
        if (method_name(m) == name) return m;
    }
    return std::nullopt;
}

double dice_from_counts(std::uint64_t intersection, std::uint64_t count_a, std::uint64_t count_b) noexcept {
    const std::uint64_t total = count_a + count_b;
    if (total == 0) return 1.0;
    return (2.0 * static_cast<double>(intersection)) / static_cast<double>(total);
}

double dice(const BinaryMask& a, const BinaryMask& b) {
    require_same_dims(a.dims(), b.dims(), "dice");
    return dice_from_counts(kernels::and_popcount(a.words(), b.words()), a.popcount(), b.popcount());
}

double combined_dice(const SegmentationPair& q, const SegmentationPair& r) {
    return dice(q.t1gd, r.t1gd) + dice(q.flair, r.flair);
}

Ranking top_k(Method method, bool higher_is_better, std::span<const double> scores, std::size_t k) {
    std::vector<std::uint64_t> ids(scores.size());
    std::iota(ids.begin(), ids.end(), std::uint64_t{0});
    const auto better = [&](std::uint64_t a, std::uint64_t b) {
        if (scores[a] != scores[b]) return higher_is_better ? scores[a] > scores[b] : scores[a] < scores[b];
        return a < b;
    };
    k = std::min(k, ids.size());
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), better);
    Ranking r{method, higher_is_better, {}};
    r.entries.reserve(k);
    for (std::size_t i = 0; i < k; ++i) r.entries.push_back({ids[i], scores[ids[i]]});
    return r;
}

namespace {

void check_request(const TumorDatabase& db, const SegmentationPair& q, const QueryOptions& opts) {
    if (db.records.empty()) throw std::invalid_argument("query against an empty database");
    if (opts.k == 0) throw std::invalid_argument("k must be at least 1");
    require_same_dims(q.t1gd.dims(), q.flair.dims(), "query T1Gd vs FLAIR");
    require_same_dims(q.flair.dims(), db.dims, "query vs database");
}

// Scores are computed per record into their own slot and reduced serially,
// so the result does not depend on the worker count.
Ranking dice_scan(const TumorDatabase& db, const SegmentationPair& q, std::uint32_t factor, Method method,
                  const QueryOptions& opts) {
    const std::uint64_t qt = q.t1gd.popcount();
    const std::uint64_t qf = q.flair.popcount();
    const auto& table = kernels::active();
    const auto q_t1gd = q.t1gd.words();
    const auto q_flair = q.flair.words();
    std::vector<double> scores(db.records.size());
    const std::size_t n = db.records.size();
    const unsigned jobs = opts.jobs == 0 ? default_jobs() : opts.jobs;
    const std::size_t chunk = std::max<std::size_t>(1, (n + jobs - 1) / jobs);
    const std::size_t chunks = (n + chunk - 1) / chunk;
    parallel_for(chunks, jobs, [&](std::size_t c, unsigned) {
        const std::size_t end = std::min(n, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) {
            const TumorRecord& r = db.records[i];
            const SegmentationPair& rp = r.at_factor(factor);
            const PairCounts& rc = r.counts_at(factor);
            const double dt = dice_from_counts(
                table.and_popcount(q_t1gd.data(), rp.t1gd.words().data(), q_t1gd.size()), qt, rc.t1gd);
            const double df = dice_from_counts(
                table.and_popcount(q_flair.data(), rp.flair.words().data(), q_flair.size()), qf, rc.flair);
            scores[i] = dt + df;
        }
    });
    return top_k(method, true, scores, opts.k);
}

}  // namespace

Ranking direct_query(const TumorDatabase& db, const SegmentationPair& q, const QueryOptions& opts) {
    check_request(db, q, opts);
    return dice_scan(db, q, 1, Method::Direct, opts);
}

Ranking downsampled_query(const TumorDatabase& db, const SegmentationPair& q, std::uint32_t factor,
                          const QueryOptions& opts) {
    if (factor != 2 && factor != 4) {
        throw std::invalid_argument("downsampling factor must be 2 or 4, got " + std::to_string(factor));
    }
    check_request(db, q, opts);
    return dice_scan(db, downsample(q, factor), factor, factor == 2 ? Method::Ds2 : Method::Ds4, opts);
}

Ranking feature_query(const TumorDatabase& db, const SegmentationPair& q, const QueryOptions& opts) {
    check_request(db, q, opts);
    return feature_query(db, pair_features(q), opts);
}

Ranking feature_query(const TumorDatabase& db, const FeatureVector& q, const QueryOptions& opts) {
    if (db.records.empty()) throw std::invalid_argument("query against an empty database");
    if (opts.k == 0) throw std::invalid_argument("k must be at least 1");
    if (opts.n_prefilter == 0) throw std::invalid_argument("prefilter size must be at least 1");
    const std::size_t n = db.records.size();
    std::vector<double> com_dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = db.records[i].features.com;
        const double dx = c[0] - q.com[0];
        const double dy = c[1] - q.com[1];
        const double dz = c[2] - q.com[2];
        com_dist[i] = std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    std::vector<std::uint64_t> ids(n);
    std::iota(ids.begin(), ids.end(), std::uint64_t{0});
    const std::size_t m = std::min(opts.n_prefilter, n);
    if (m < n) {
        std::nth_element(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(m), ids.end(),
                         [&](std::uint64_t a, std::uint64_t b) {
                             if (com_dist[a] != com_dist[b]) return com_dist[a] < com_dist[b];
                             return a < b;
                         });
        ids.resize(m);
    }
    std::vector<RankEntry> stage2(m);
    for (std::size_t j = 0; j < m; ++j) {
        stage2[j] = {ids[j], feature_distance(q, db.records[ids[j]].features, db.stats)};
    }
    const std::size_t k = std::min(opts.k, m);
    std::partial_sort(stage2.begin(), stage2.begin() + static_cast<std::ptrdiff_t>(k), stage2.end(),
                      [](const RankEntry& a, const RankEntry& b) {
                          if (a.score != b.score) return a.score < b.score;
                          return a.id < b.id;
                      });
    stage2.resize(k);
    return {Method::Features, false, std::move(stage2)};
}

Answer answer(const TumorDatabase& db, const Ranking& ranking) {
    if (ranking.entries.empty()) throw std::invalid_argument("cannot answer from an empty ranking");
    const RankEntry& top = ranking.entries.front();
    if (top.id >= db.records.size()) throw std::out_of_range("ranking refers to record " + std::to_string(top.id));
    const TumorRecord& r = db.records[top.id];
    return {top.id, top.score, r.params, &r.seg};
}

}  // namespace gq
