#include <algorithm>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "gq/error.hpp"
#include "gq/kernels/kernels.hpp"
#include "gq/parallel.hpp"
#include "gq/tumordb.hpp"

namespace gq {

GrowthParams sample_params(const ParamRanges& ranges, const GridDims& dims, std::span<const std::size_t> domain_voxels,
                           std::uint64_t rng_state) {
    if (domain_voxels.empty()) {
        throw std::invalid_argument("cannot sample a seed from an empty domain");
    }
    Rng rng(rng_state);
    const auto c = dims.unindex(domain_voxels[rng.below(domain_voxels.size())]);
    GrowthParams p;
    p.seed_x = c[0];
    p.seed_y = c[1];
    p.seed_z = c[2];
    p.dw = rng.uniform(ranges.dw.lo, ranges.dw.hi);
    p.rho = rng.uniform(ranges.rho.lo, ranges.rho.hi);
    p.t_end = rng.uniform(ranges.t_end.lo, ranges.t_end.hi);
    return p;
}

GrowthParams sample_params(const ParamRanges& ranges, const TissueAtlas& atlas, std::uint64_t rng_state) {
    return sample_params(ranges, atlas.dims(), atlas.domain_voxels(), rng_state);
}

BinaryMask downsample(const BinaryMask& mask, std::uint32_t factor) {
    const GridDims& d = mask.dims();
    if (factor == 0 || d.nx % factor || d.ny % factor || d.nz % factor) {
        throw std::invalid_argument("grid " + d.str() + " is not divisible by downsampling factor " +
                                    std::to_string(factor));
    }
    const GridDims od(d.nx / factor, d.ny / factor, d.nz / factor, d.dx * factor);
    BinaryMask out(od);
    std::size_t o = 0;
    for (std::uint32_t z = 0; z < od.nz; ++z) {
        for (std::uint32_t y = 0; y < od.ny; ++y) {
            const std::size_t row = d.index(0, y * factor, z * factor);
            for (std::uint32_t x = 0; x < od.nx; ++x, ++o) {
                if (mask.get(row + std::size_t{x} * factor)) out.set(o);
            }
        }
    }
    return out;
}

SegmentationPair downsample(const SegmentationPair& pair, std::uint32_t factor) {
    return {downsample(pair.t1gd, factor), downsample(pair.flair, factor)};
}

const SegmentationPair& TumorRecord::at_factor(std::uint32_t factor) const {
    switch (factor) {
        case 1: return seg;
        case 2: return down2;
        case 4: return down4;
        default: throw std::invalid_argument("no stored masks at factor " + std::to_string(factor));
    }
}

const PairCounts& TumorRecord::counts_at(std::uint32_t factor) const {
    switch (factor) {
        case 1: return counts_[0];
        case 2: return counts_[1];
        case 4: return counts_[2];
        default: throw std::invalid_argument("no stored masks at factor " + std::to_string(factor));
    }
}

void TumorRecord::derive() {
    down2 = downsample(seg, 2);
    down4 = downsample(seg, 4);
    features = pair_features(seg);
    recount();
}

void TumorRecord::recount() {
    const SegmentationPair* pairs[3] = {&seg, &down2, &down4};
    for (int i = 0; i < 3; ++i) {
        counts_[i] = {pairs[i]->t1gd.popcount(), pairs[i]->flair.popcount()};
    }
}

std::string BuildStats::str() const {
    std::ostringstream os;
    os << "examined " << examined << ", accepted " << accepted << ", too small " << too_small << ", too large "
       << too_large << ", vetoed " << vetoed;
    return os.str();
}

namespace {

enum class Verdict { Accept, TooSmall, TooLarge };

struct Simulated {
    GrowthParams params;
    SegmentationPair seg;
    Verdict verdict = Verdict::TooSmall;
};

}  // namespace

std::vector<Candidate> generate_candidates(const TissueAtlas& atlas, std::size_t count, const ParamRanges& ranges,
                                           const SizeFilter& filter, std::uint64_t seed, std::uint64_t stream,
                                           unsigned jobs, const Thresholds& thresholds, const SolverConfig& solver,
                                           const std::function<bool(const SegmentationPair&)>& veto,
                                           BuildStats* stats_out) {
    ranges.validate();
    filter.validate();
    if (jobs == 0) jobs = default_jobs();
    const auto domain = atlas.domain_voxels();
    if (domain.empty()) {
        throw std::invalid_argument("atlas has an empty simulation domain");
    }
    const double domain_size = static_cast<double>(domain.size());

    std::vector<std::unique_ptr<ForwardSolver>> solvers(jobs);
    std::vector<Candidate> accepted;
    accepted.reserve(count);
    BuildStats stats;
    const std::size_t batch = std::max<std::size_t>(16, 4 * std::size_t{jobs});
    std::uint64_t base = 0;
    while (accepted.size() < count) {
        std::vector<Simulated> sims(batch);
        parallel_for(batch, jobs, [&](std::size_t j, unsigned worker) {
            if (!solvers[worker]) solvers[worker] = std::make_unique<ForwardSolver>(atlas);
            Simulated& s = sims[j];
            s.params = sample_params(ranges, atlas.dims(), domain, stream_key(seed, stream, base + j));
            s.seg = segment(solvers[worker]->run(s.params, solver).density, thresholds);
            const auto n = s.seg.flair.popcount();
            const double frac = static_cast<double>(n) / domain_size;
            if (n == 0 || frac < filter.min_frac) {
                s.verdict = Verdict::TooSmall;
            } else if (frac > filter.max_frac) {
                s.verdict = Verdict::TooLarge;
            } else {
                s.verdict = Verdict::Accept;
            }
        });
        for (std::size_t j = 0; j < batch && accepted.size() < count; ++j) {
            Simulated& s = sims[j];
            ++stats.examined;
            switch (s.verdict) {
                case Verdict::TooSmall: ++stats.too_small; break;
                case Verdict::TooLarge: ++stats.too_large; break;
                case Verdict::Accept:
                    if (veto && veto(s.seg)) {
                        ++stats.vetoed;
                    } else {
                        ++stats.accepted;
                        accepted.push_back({base + j, s.params, std::move(s.seg)});
                    }
                    break;
            }
            if (stats.examined >= 10 * count &&
                static_cast<double>(stats.accepted) < 0.001 * static_cast<double>(stats.examined)) {
                if (stats_out) *stats_out = stats;
                std::ostringstream os;
                os << "gave up generating tumors: " << stats.str() << "; dw [" << ranges.dw.lo << ", " << ranges.dw.hi
                   << "], rho [" << ranges.rho.lo << ", " << ranges.rho.hi << "], tend [" << ranges.t_end.lo << ", "
                   << ranges.t_end.hi << "], FLAIR size fraction [" << filter.min_frac << ", " << filter.max_frac
                   << "] of " << domain.size() << " domain voxels";
                throw BuildGaveUp(os.str());
            }
        }
        base += batch;
    }
    if (stats_out) *stats_out = stats;
    return accepted;
}

TumorDatabase build_database(const TissueAtlas& atlas, const BuildOptions& options, BuildStats* stats) {
    if (options.n_target < 1) {
        throw std::invalid_argument("database needs at least one record");
    }
    const GridDims& dims = atlas.dims();
    if (dims.nx % 4 || dims.ny % 4 || dims.nz % 4) {
        throw std::invalid_argument("database grid " + dims.str() + " must be divisible by 4 for downsampled masks");
    }
    auto candidates = generate_candidates(atlas, options.n_target, options.ranges, options.size_filter,
                                          options.master_seed, kDatabaseStream, options.jobs, options.thresholds,
                                          options.solver, {}, stats);
    TumorDatabase db;
    db.atlas_fingerprint = atlas_fingerprint(atlas);
    db.dims = dims;
    db.thresholds = options.thresholds;
    db.records.resize(candidates.size());
    parallel_for(candidates.size(), options.jobs, [&](std::size_t i, unsigned) {
        TumorRecord& r = db.records[i];
        r.id = i;
        r.params = candidates[i].params;
        r.seg = std::move(candidates[i].seg);
        r.derive();
    });
    std::vector<FeatureVector> features;
    features.reserve(db.records.size());
    for (const auto& r : db.records) features.push_back(r.features);
    db.stats = compute_stats(features);
    return db;
}

void require_atlas(const TumorDatabase& db, const TissueAtlas& atlas) {
    require_same_dims(db.dims, atlas.dims(), "atlas vs database");
    if (atlas_fingerprint(atlas) != db.atlas_fingerprint) {
        throw FormatError("atlas fingerprint " + to_hex(atlas_fingerprint(atlas)) +
                          " does not match the database's " + to_hex(db.atlas_fingerprint));
    }
}

}  // namespace gq
