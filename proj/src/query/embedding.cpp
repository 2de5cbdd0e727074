#include <cmath>
#include <cstring>
#include <stdexcept>

#include "gq/binio.hpp"
#include "gq/error.hpp"
#include "gq/kernels/kernels.hpp"
#include "gq/parallel.hpp"
#include "gq/query.hpp"

namespace gq {

void EmbeddingSet::validate() const {
    if (dim_t1gd == 0 && dim_flair == 0) throw std::invalid_argument("embedding vectors have zero dimension");
    const std::size_t rows_t = dim_t1gd ? t1gd.size() / dim_t1gd : 0;
    const std::size_t rows_f = dim_flair ? flair.size() / dim_flair : 0;
    if ((dim_t1gd && t1gd.size() % dim_t1gd) || (dim_flair && flair.size() % dim_flair) ||
        (dim_t1gd && dim_flair && rows_t != rows_f) || (!dim_t1gd && !t1gd.empty()) ||
        (!dim_flair && !flair.empty())) {
        throw DimensionMismatch("embedding set rows do not match its declared dimensions");
    }
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set) {
    set.validate();
    io::ByteWriter w;
    w.magic("GQEV");
    w.put(std::uint32_t{1});
    w.put(static_cast<std::uint64_t>(set.size()));
    w.put(static_cast<std::uint32_t>(set.dim_t1gd));
    w.put(static_cast<std::uint32_t>(set.dim_flair));
    for (std::size_t i = 0; i < set.size(); ++i) {
        for (float v : set.t1gd_row(i)) w.put(v);
        for (float v : set.flair_row(i)) w.put(v);
    }
    return w.take();
}

EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes) {
    io::ByteReader r(bytes, "embeddings");
    r.expect_magic("GQEV");
    const auto version = r.get<std::uint32_t>("version");
    if (version != 1) r.fail("unsupported version " + std::to_string(version));
    const auto count = r.get<std::uint64_t>("count");
    EmbeddingSet set;
    set.dim_t1gd = r.get<std::uint32_t>("t1gd dimension");
    set.dim_flair = r.get<std::uint32_t>("flair dimension");
    if (set.dim_t1gd + set.dim_flair == 0) r.fail("zero-dimensional embeddings");
    if (r.remaining() != count * (set.dim_t1gd + set.dim_flair) * sizeof(float)) {
        r.fail("payload size does not match " + std::to_string(count) + " rows");
    }
    set.t1gd.reserve(count * set.dim_t1gd);
    set.flair.reserve(count * set.dim_flair);
    for (std::uint64_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < set.dim_t1gd; ++j) set.t1gd.push_back(r.get<float>("value"));
        for (std::size_t j = 0; j < set.dim_flair; ++j) set.flair.push_back(r.get<float>("value"));
    }
    return set;
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
    io::write_file_atomic(path, encode_embeddings(set));
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) { return decode_embeddings(io::read_file(path)); }

Ranking embedding_query(const EmbeddingSet& db_vectors, std::span<const float> q_t1gd, std::span<const float> q_flair,
                        const QueryOptions& opts) {
    db_vectors.validate();
    if (q_t1gd.size() != db_vectors.dim_t1gd || q_flair.size() != db_vectors.dim_flair) {
        throw DimensionMismatch("query vectors are " + std::to_string(q_t1gd.size()) + "+" +
                                std::to_string(q_flair.size()) + " wide, database vectors " +
                                std::to_string(db_vectors.dim_t1gd) + "+" + std::to_string(db_vectors.dim_flair));
    }
    const std::size_t n = db_vectors.size();
    if (n == 0) throw std::invalid_argument("query against an empty embedding set");
    if (opts.k == 0) throw std::invalid_argument("k must be at least 1");
    const auto& table = kernels::active();
    std::vector<double> scores(n);
    const unsigned jobs = opts.jobs == 0 ? default_jobs() : opts.jobs;
    const std::size_t chunk = std::max<std::size_t>(1, (n + jobs - 1) / jobs);
    parallel_for((n + chunk - 1) / chunk, jobs, [&](std::size_t c, unsigned) {
        const std::size_t end = std::min(n, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) {
            const auto rt = db_vectors.t1gd_row(i);
            const auto rf = db_vectors.flair_row(i);
            scores[i] = std::sqrt(table.squared_l2(q_t1gd.data(), rt.data(), rt.size())) +
                        std::sqrt(table.squared_l2(q_flair.data(), rf.data(), rf.size()));
        }
    });
    return top_k(Method::Embedding, false, scores, opts.k);
}

namespace {

void append_bits(const BinaryMask& m, std::vector<float>& out) {
    const std::size_t n = m.dims().count();
    for (std::size_t i = 0; i < n; ++i) out.push_back(m.get(i) ? 1.0f : 0.0f);
}

}  // namespace

EmbeddingSet bitcode_embeddings(const TumorDatabase& db) {
    EmbeddingSet set;
    if (db.records.empty()) return set;
    set.dim_t1gd = set.dim_flair = db.records.front().down4.flair.dims().count();
    set.t1gd.reserve(db.size() * set.dim_t1gd);
    set.flair.reserve(db.size() * set.dim_flair);
    for (const auto& r : db.records) {
        append_bits(r.down4.t1gd, set.t1gd);
        append_bits(r.down4.flair, set.flair);
    }
    return set;
}

EmbeddingSet bitcode_embedding(const SegmentationPair& full_resolution_query) {
    const SegmentationPair d = downsample(full_resolution_query, 4);
    EmbeddingSet set;
    set.dim_t1gd = set.dim_flair = d.flair.dims().count();
    append_bits(d.t1gd, set.t1gd);
    append_bits(d.flair, set.flair);
    return set;
}

}  // namespace gq
