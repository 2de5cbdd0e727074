#include "gq/evalbench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "gq/kernels/kernels.hpp"
#include "gq/parallel.hpp"

namespace gq {

namespace {

std::uint64_t mask_hash(const SegmentationPair& p) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (const BinaryMask* m : {&p.t1gd, &p.flair}) {
        for (std::uint64_t w : m->words()) h = splitmix64(h ^ w);
    }
    return h;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::size_t reference_depth(const TumorDatabase& db) { return std::min<std::size_t>(15, db.size()); }

}  // namespace

std::vector<QueryCase> make_query_set(const TissueAtlas& atlas, const TumorDatabase& db, const QuerySetOptions& options,
                                      BuildStats* stats) {
    require_atlas(db, atlas);
    std::unordered_multimap<std::uint64_t, std::size_t> known;
    known.reserve(db.size());
    for (std::size_t i = 0; i < db.size(); ++i) known.emplace(mask_hash(db.records[i].seg), i);
    const auto collides = [&](const SegmentationPair& s) {
        const auto [lo, hi] = known.equal_range(mask_hash(s));
        for (auto it = lo; it != hi; ++it) {
            if (db.records[it->second].seg == s) return true;
        }
        return false;
    };
    auto candidates = generate_candidates(atlas, options.n, options.ranges, options.size_filter, options.seed,
                                          kQueryStream, options.jobs, db.thresholds, options.solver, collides, stats);
    std::vector<QueryCase> out;
    out.reserve(candidates.size());
    for (auto& c : candidates) out.push_back({c.index, c.params, std::move(c.seg)});
    return out;
}

Ranking run_query(const TumorDatabase& db, const EmbeddingSet* db_vectors, Method method, const SegmentationPair& q,
                  const QueryOptions& opts) {
    switch (method) {
        case Method::Direct: return direct_query(db, q, opts);
        case Method::Ds2: return downsampled_query(db, q, 2, opts);
        case Method::Ds4: return downsampled_query(db, q, 4, opts);
        case Method::Features: return feature_query(db, q, opts);
        case Method::Embedding: {
            if (!db_vectors) throw std::invalid_argument("embedding query needs database vectors");
            require_same_dims(q.flair.dims(), db.dims, "query vs database");
            const EmbeddingSet e = bitcode_embedding(q);
            return embedding_query(*db_vectors, e.t1gd, e.flair, opts);
        }
    }
    throw std::invalid_argument("unknown method");
}

double top_n_accuracy(std::span<const Ranking> strategy, std::span<const Ranking> reference, std::size_t n) {
    if (strategy.size() != reference.size()) {
        throw std::invalid_argument("strategy has " + std::to_string(strategy.size()) + " rankings, reference " +
                                    std::to_string(reference.size()));
    }
    if (strategy.empty()) throw std::invalid_argument("top-n accuracy of an empty query set");
    if (n == 0) throw std::invalid_argument("top-n accuracy needs n >= 1");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < strategy.size(); ++i) {
        const auto& s = strategy[i].entries;
        const auto& r = reference[i].entries;
        if (s.empty() || r.empty()) throw std::invalid_argument("empty ranking for query " + std::to_string(i));
        const std::size_t depth = std::min(n, r.size());
        const auto end = r.begin() + static_cast<std::ptrdiff_t>(depth);
        if (std::any_of(r.begin(), end, [&](const RankEntry& e) { return e.id == s.front().id; })) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(strategy.size());
}

std::vector<DiceTriple> dice_distribution(const TumorDatabase& db, std::span<const SegmentationPair> queries,
                                          std::span<const Ranking> rankings) {
    if (queries.size() != rankings.size()) throw std::invalid_argument("one ranking per query is required");
    std::vector<DiceTriple> out;
    out.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const SegmentationPair& m = *answer(db, rankings[i]).seg;
        DiceTriple t{dice(queries[i].t1gd, m.t1gd), dice(queries[i].flair, m.flair), 0.0};
        t.combined = t.t1gd + t.flair;
        out.push_back(t);
    }
    return out;
}

EvalReport evaluate(const TumorDatabase& db, std::span<const SegmentationPair> queries, const EvalOptions& options) {
    if (queries.empty()) throw std::invalid_argument("evaluation needs at least one query");
    if (db.records.empty()) throw std::invalid_argument("evaluation needs a non-empty database");
    const bool need_vectors = std::find(options.methods.begin(), options.methods.end(), Method::Embedding) !=
                              options.methods.end();
    const EmbeddingSet vectors = need_vectors ? bitcode_embeddings(db) : EmbeddingSet{};

    QueryOptions ref_opts;
    ref_opts.k = reference_depth(db);
    std::vector<Ranking> reference(queries.size());
    parallel_for(queries.size(), options.jobs,
                 [&](std::size_t i, unsigned) { reference[i] = direct_query(db, queries[i], ref_opts); });

    EvalReport report;
    report.n_queries = queries.size();
    report.db_size = db.size();
    for (Method m : options.methods) {
        QueryOptions opts;
        opts.k = 1;
        opts.n_prefilter = options.n_prefilter;
        std::vector<Ranking> rankings(queries.size());
        std::vector<double> seconds(queries.size());
        parallel_for(queries.size(), options.jobs, [&](std::size_t i, unsigned) {
            const auto t0 = std::chrono::steady_clock::now();
            rankings[i] = run_query(db, &vectors, m, queries[i], opts);
            seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        });
        MethodResult row;
        row.method = m;
        row.top1 = top_n_accuracy(rankings, reference, 1);
        row.top5 = top_n_accuracy(rankings, reference, 5);
        row.top15 = top_n_accuracy(rankings, reference, 15);
        std::vector<double> combined;
        combined.reserve(queries.size());
        for (const auto& t : dice_distribution(db, queries, rankings)) combined.push_back(t.combined);
        double sum = 0.0;
        for (double c : combined) sum += c;
        row.mean_dice_combined = sum / static_cast<double>(combined.size());
        row.median_dice_combined = median(combined);
        if (options.timing) row.median_runtime_s = median(seconds);
        report.rows.push_back(row);
    }
    return report;
}

std::string EvalReport::csv() const {
    std::string out = "method,top1,top5,top15,mean_dice_combined,median_runtime_s\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{:.2f},{:.2f},{:.2f},{:.6f},{}\n", method_name(r.method), r.top1, r.top5, r.top15,
                           r.mean_dice_combined,
                           r.median_runtime_s ? fmt::format("{:.6e}", *r.median_runtime_s) : std::string("NA"));
    }
    return out;
}

std::string machine_info() {
    std::string model = "unknown cpu";
    std::ifstream in("/proc/cpuinfo");
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("model name", 0) == 0 || line.rfind("Model", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                model = line.substr(line.find_first_not_of(" \t", colon + 1));
                break;
            }
        }
    }
    return fmt::format("{}, {} logical cores", model, std::thread::hardware_concurrency());
}

BenchReport bench(const TumorDatabase& db, std::span<const SegmentationPair> queries, std::span<const Method> methods,
                  std::size_t reps, unsigned jobs, std::size_t n_prefilter) {
    if (reps < 3) throw std::invalid_argument("bench needs at least 3 repetitions, got " + std::to_string(reps));
    if (queries.empty()) throw std::invalid_argument("bench needs at least one query");
    if (db.records.empty()) throw std::invalid_argument("bench needs a non-empty database");
    if (jobs == 0) jobs = default_jobs();
    const bool need_vectors = std::find(methods.begin(), methods.end(), Method::Embedding) != methods.end();
    const EmbeddingSet vectors = need_vectors ? bitcode_embeddings(db) : EmbeddingSet{};

    BenchReport report;
    report.machine = machine_info();
    report.jobs = jobs;
    report.isa = std::string(kernels::name(kernels::active_isa()));
    report.n_queries = queries.size();
    report.db_size = db.size();
    report.reps = reps;
    QueryOptions opts;
    opts.jobs = jobs;
    opts.n_prefilter = n_prefilter;
    for (Method m : methods) {
        BenchRow row;
        row.method = m;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            std::vector<double> seconds;
            seconds.reserve(queries.size());
            for (const auto& q : queries) {
                const auto t0 = std::chrono::steady_clock::now();
                const Ranking r = run_query(db, &vectors, m, q, opts);
                seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
                if (r.entries.empty()) throw std::logic_error("query returned no match");
            }
            row.rep_medians_s.push_back(median(std::move(seconds)));
        }
        row.median_s = median(row.rep_medians_s);
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string BenchReport::csv() const {
    std::string out = "method,median_runtime_s,min_rep_median_s,max_rep_median_s\n";
    for (const auto& r : rows) {
        const auto [lo, hi] = std::minmax_element(r.rep_medians_s.begin(), r.rep_medians_s.end());
        out += fmt::format("{},{:.6e},{:.6e},{:.6e}\n", method_name(r.method), r.median_s, *lo, *hi);
    }
    return out;
}

}  // namespace gq
