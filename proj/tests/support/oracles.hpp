#pragma once
// Naive single-threaded reference implementations of every query strategy.
// They share no code with the library's scan: bits are read one voxel at a
// time, everything is sorted in full with an explicit (score, id) order.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gq/query.hpp"
#include "gq/tumordb.hpp"

namespace gq::oracle {

inline double naive_dice(const BinaryMask& a, const BinaryMask& b) {
    std::uint64_t na = 0, nb = 0, both = 0;
    for (std::size_t i = 0; i < a.dims().count(); ++i) {
        na += a.get(i);
        nb += b.get(i);
        both += a.get(i) && b.get(i);
    }
    return na + nb == 0 ? 1.0 : 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

inline BinaryMask naive_downsample(const BinaryMask& m, std::uint32_t f) {
    const GridDims& d = m.dims();
    BinaryMask out(GridDims(d.nx / f, d.ny / f, d.nz / f, d.dx * f));
    for (std::uint32_t z = 0; z < d.nz / f; ++z)
        for (std::uint32_t y = 0; y < d.ny / f; ++y)
            for (std::uint32_t x = 0; x < d.nx / f; ++x) out.set(x, y, z, m.get(f * x, f * y, f * z));
    return out;
}

inline std::vector<RankEntry> sorted(std::vector<RankEntry> all, bool higher_is_better, std::size_t k) {
    std::sort(all.begin(), all.end(), [&](const RankEntry& a, const RankEntry& b) {
        if (a.score != b.score) return higher_is_better ? a.score > b.score : a.score < b.score;
        return a.id < b.id;
    });
    all.resize(std::min(k, all.size()));
    return all;
}

inline std::vector<RankEntry> dice_ranking(const TumorDatabase& db, const SegmentationPair& q, std::uint32_t factor,
                                           std::size_t k) {
    const BinaryMask qt = factor == 1 ? q.t1gd : naive_downsample(q.t1gd, factor);
    const BinaryMask qf = factor == 1 ? q.flair : naive_downsample(q.flair, factor);
    std::vector<RankEntry> all;
    for (const auto& r : db.records) {
        const BinaryMask rt = factor == 1 ? r.seg.t1gd : naive_downsample(r.seg.t1gd, factor);
        const BinaryMask rf = factor == 1 ? r.seg.flair : naive_downsample(r.seg.flair, factor);
        all.push_back({r.id, naive_dice(qt, rt) + naive_dice(qf, rf)});
    }
    return sorted(std::move(all), true, k);
}

inline double naive_feature_distance(const FeatureVector& a, const FeatureVector& b, const FeatureStats& st) {
    const auto va = a.shape(), vb = b.shape();
    double d = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        if (!(st.stddev[i] > 0.0)) continue;
        d += std::abs((va[i] - st.mean[i]) / st.stddev[i] - (vb[i] - st.mean[i]) / st.stddev[i]);
    }
    return d;
}

inline std::vector<RankEntry> feature_ranking(const TumorDatabase& db, const FeatureVector& q, std::size_t n_prefilter,
                                              std::size_t k) {
    std::vector<RankEntry> by_com;
    for (const auto& r : db.records) {
        double s = 0.0;
        for (int a = 0; a < 3; ++a) s += (r.features.com[a] - q.com[a]) * (r.features.com[a] - q.com[a]);
        by_com.push_back({r.id, std::sqrt(s)});
    }
    by_com = sorted(std::move(by_com), false, n_prefilter);
    std::vector<RankEntry> stage2;
    for (const auto& e : by_com) stage2.push_back({e.id, naive_feature_distance(q, db.records[e.id].features, db.stats)});
    return sorted(std::move(stage2), false, k);
}

inline std::vector<RankEntry> embedding_ranking(const EmbeddingSet& set, const std::vector<float>& qt,
                                                const std::vector<float>& qf, std::size_t k) {
    std::vector<RankEntry> all;
    for (std::size_t i = 0; i < set.size(); ++i) {
        double st = 0.0, sf = 0.0;
        const auto rt = set.t1gd_row(i), rf = set.flair_row(i);
        for (std::size_t j = 0; j < rt.size(); ++j) st += (double(qt[j]) - rt[j]) * (double(qt[j]) - rt[j]);
        for (std::size_t j = 0; j < rf.size(); ++j) sf += (double(qf[j]) - rf[j]) * (double(qf[j]) - rf[j]);
        all.push_back({i, std::sqrt(st) + std::sqrt(sf)});
    }
    return sorted(std::move(all), false, k);
}

}  // namespace gq::oracle
