// gq: command-line front end for the tumor growth query pipeline.
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gq/atlas.hpp"
#include "gq/binio.hpp"
#include "gq/error.hpp"
#include "gq/evalbench.hpp"
#include "gq/forward.hpp"
#include "gq/hash.hpp"
#include "gq/kernels/kernels.hpp"
#include "gq/query.hpp"
#include "gq/segmentation.hpp"
#include "gq/tumordb.hpp"

namespace {

using namespace gq;

constexpr int kExitOther = 1;
constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumerical = 4;

struct Loaded {
    std::vector<std::uint8_t> bytes;
    std::string sha;
};

Loaded read_hashed(const std::string& path) {
    Loaded l{io::read_file(path), {}};
    l.sha = to_hex(sha256(l.bytes));
    spdlog::info("input {} sha256={}", path, l.sha);
    return l;
}

TissueAtlas read_atlas(const std::string& path) { return decode_atlas(read_hashed(path).bytes); }
TumorDatabase read_db(const std::string& path) { return decode_database(read_hashed(path).bytes); }
BinaryMask read_mask(const std::string& path) { return decode_mask(read_hashed(path).bytes); }

void emit(const std::optional<std::string>& out, const std::string& text) {
    if (out) {
        io::write_text_atomic(*out, text);
        spdlog::info("wrote {}", *out);
    } else {
        std::cout << text;
    }
}

std::vector<Method> parse_methods(const std::string& list) {
    std::vector<Method> out;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.empty()) continue;
        const auto m = parse_method(item);
        if (!m) throw CLI::ValidationError("--methods", "unknown method '" + item + "'");
        out.push_back(*m);
    }
    if (out.empty()) throw CLI::ValidationError("--methods", "no methods given");
    return out;
}

// Databases only remember the grid; the phantom is regenerated from it and
// checked against the stored fingerprint.
TissueAtlas atlas_for(const TumorDatabase& db, const std::optional<std::string>& path) {
    TissueAtlas atlas;
    if (path) {
        atlas = read_atlas(*path);
    } else {
        if (db.dims.nx != db.dims.ny || db.dims.ny != db.dims.nz) {
            throw std::invalid_argument("database grid " + db.dims.str() + " is not a phantom; pass --atlas");
        }
        atlas = make_phantom_atlas(db.dims.nx, db.dims.dx);
        spdlog::info("regenerated phantom atlas {}", db.dims.str());
    }
    require_atlas(db, atlas);
    return atlas;
}

std::string params_csv(const GrowthParams& p) {
    return fmt::format("{},{},{},{:.17g},{:.17g},{:.17g}", p.seed_x, p.seed_y, p.seed_z, p.dw, p.rho, p.t_end);
}

std::string explain_csv(const TumorDatabase& db, const FeatureVector& q, const FeatureVector& m) {
    std::string out = "name,query,match,z_query,z_match\n";
    const char* axes[3] = {"com_x_mm", "com_y_mm", "com_z_mm"};
    for (int a = 0; a < 3; ++a) out += fmt::format("{},{:.17g},{:.17g},NA,NA\n", axes[a], q.com[a], m.com[a]);
    const auto vq = q.shape();
    const auto vm = m.shape();
    for (std::size_t i = 0; i < kShapeFeatureCount; ++i) {
        const double sd = db.stats.stddev[i];
        const auto z = [&](double v) {
            return sd > 0.0 ? fmt::format("{:.17g}", (v - db.stats.mean[i]) / sd) : std::string("NA");
        };
        out += fmt::format("{},{:.17g},{:.17g},{},{}\n", shape_feature_name(i), vq[i], vm[i], z(vq[i]), z(vm[i]));
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Tumor growth simulation database and similarity query tool"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // atlas-gen
    auto* ag = app.add_subcommand("atlas-gen", "Write a spherical phantom tissue atlas");
    std::uint32_t ag_size = 64;
    double ag_dx = 2.0;
    std::string ag_out;
    ag->add_option("--size", ag_size, "Voxels per axis")->capture_default_str()->check(CLI::Range(16u, 1024u));
    ag->add_option("--dx", ag_dx, "Voxel spacing in mm")->capture_default_str()->check(CLI::PositiveNumber);
    ag->add_option("--out", ag_out, "Atlas file")->required();

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run one forward simulation");
    std::string sim_atlas, sim_out;
    std::vector<std::uint32_t> sim_seed;
    double sim_dw = 0.1, sim_rho = 0.05, sim_tend = 200.0, sim_u0 = 0.1;
    std::optional<double> sim_dt;
    std::optional<std::string> sim_t1gd_out, sim_flair_out;
    sim->add_option("--atlas", sim_atlas, "Atlas file")->required();
    sim->add_option("--seed", sim_seed, "Seed voxel X,Y,Z")->required()->delimiter(',')->expected(3);
    sim->add_option("--dw", sim_dw, "White-matter diffusivity (mm^2/day)")->capture_default_str();
    sim->add_option("--rho", sim_rho, "Proliferation rate (1/day)")->capture_default_str();
    sim->add_option("--tend", sim_tend, "Simulated time (days)")->capture_default_str();
    sim->add_option("--u0", sim_u0, "Initial seed density")->capture_default_str();
    sim->add_option("--dt", sim_dt, "Fixed time step (days)");
    sim->add_option("--out", sim_out, "Density field file")->required();
    sim->add_option("--t1gd-out", sim_t1gd_out, "Also write the T1Gd mask");
    sim->add_option("--flair-out", sim_flair_out, "Also write the FLAIR mask");

    // build-db
    auto* bd = app.add_subcommand("build-db", "Simulate a tumor database");
    std::string bd_atlas, bd_out;
    std::optional<std::string> bd_ranges;
    std::size_t bd_n = 2000;
    std::uint64_t bd_seed = 1;
    unsigned bd_jobs = 0;
    bd->add_option("--atlas", bd_atlas, "Atlas file")->required();
    bd->add_option("--n", bd_n, "Number of records")->capture_default_str()->check(CLI::PositiveNumber);
    bd->add_option("--seed", bd_seed, "Master seed")->capture_default_str();
    bd->add_option("--ranges", bd_ranges, "Parameter ranges file");
    bd->add_option("--out", bd_out, "Database file")->required();
    bd->add_option("--jobs", bd_jobs, "Worker threads (0 = all cores)")->capture_default_str();

    // query
    auto* qy = app.add_subcommand("query", "Find the closest simulated tumor");
    std::string qy_db, qy_method = "direct";
    std::optional<std::string> qy_t1gd, qy_flair, qy_out, qy_dump, qy_db_vec, qy_q_vec;
    std::size_t qy_k = 1, qy_prefilter = 1000;
    bool qy_explain = false;
    unsigned qy_jobs = 0;
    qy->add_option("--db", qy_db, "Database file")->required();
    qy->add_option("--t1gd", qy_t1gd, "Query T1Gd mask");
    qy->add_option("--flair", qy_flair, "Query FLAIR mask");
    qy->add_option("--method", qy_method, "direct, ds2, ds4, rf or embed")
        ->capture_default_str()
        ->check(CLI::IsMember({"direct", "ds2", "ds4", "rf", "embed"}));
    qy->add_option("--k", qy_k, "Number of matches")->capture_default_str()->check(CLI::PositiveNumber);
    qy->add_option("--prefilter", qy_prefilter, "Center-of-mass candidates for rf")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    qy->add_flag("--explain", qy_explain, "Report the feature vectors of the query and best match");
    qy->add_option("--out", qy_out, "Result CSV (default stdout)");
    qy->add_option("--dump-match", qy_dump, "Write the best match masks to PREFIX.t1gd.gqbm and PREFIX.flair.gqbm");
    qy->add_option("--db-vectors", qy_db_vec, "Precomputed database embeddings for embed");
    qy->add_option("--query-vectors", qy_q_vec, "Precomputed query embedding for embed");
    qy->add_option("--jobs", qy_jobs, "Worker threads (0 = all cores)")->capture_default_str();

    // evaluate and bench share the held-out query set options
    auto* ev = app.add_subcommand("evaluate", "Top-N accuracy and Dice of each strategy on held-out tumors");
    auto* bn = app.add_subcommand("bench", "Median per-query runtime of each strategy");
    std::string ev_db, ev_methods = "direct,ds2,ds4,rf,embed";
    std::optional<std::string> ev_out, ev_atlas, ev_ranges;
    std::size_t ev_n = 50, ev_prefilter = 1000, bn_reps = 3;
    std::uint64_t ev_seed = 2;
    unsigned ev_jobs = 0;
    bool ev_timing = false;
    for (auto* sc : {ev, bn}) {
        sc->add_option("--db", ev_db, "Database file")->required();
        sc->add_option("--n-queries", ev_n, "Held-out queries")->capture_default_str()->check(CLI::PositiveNumber);
        sc->add_option("--seed", ev_seed, "Query set seed")->capture_default_str();
        sc->add_option("--methods", ev_methods, "Comma-separated strategies")->capture_default_str();
        sc->add_option("--out", ev_out, "Report CSV (default stdout)");
        sc->add_option("--atlas", ev_atlas, "Atlas file (default: phantom matching the database)");
        sc->add_option("--ranges", ev_ranges, "Parameter ranges file for the query set");
        sc->add_option("--prefilter", ev_prefilter, "Center-of-mass candidates for rf")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        sc->add_option("--jobs", ev_jobs, "Worker threads (0 = all cores)")->capture_default_str();
    }
    ev->add_flag("--timing", ev_timing, "Fill the runtime column (makes the report machine dependent)");
    bn->add_option("--reps", bn_reps, "Repetitions")->capture_default_str()->check(CLI::Range(3, 1000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    spdlog::info("kernels: {}", kernels::name(kernels::active_isa()));

    if (ag->parsed()) {
        spdlog::info("atlas-gen size={} dx={} out={}", ag_size, ag_dx, ag_out);
        const TissueAtlas atlas = make_phantom_atlas(ag_size, ag_dx);
        save_atlas(atlas, ag_out);
        spdlog::info("wrote {} ({} domain voxels, fingerprint {})", ag_out, atlas.domain_voxels().size(),
                     to_hex(atlas_fingerprint(atlas)));
    } else if (sim->parsed()) {
        spdlog::info("simulate atlas={} seed={},{},{} dw={} rho={} tend={} u0={} dt={} out={}", sim_atlas, sim_seed[0],
                     sim_seed[1], sim_seed[2], sim_dw, sim_rho, sim_tend, sim_u0,
                     sim_dt ? fmt::format("{}", *sim_dt) : "auto", sim_out);
        const TissueAtlas atlas = read_atlas(sim_atlas);
        GrowthParams p{sim_seed[0], sim_seed[1], sim_seed[2], sim_dw, sim_rho, sim_tend};
        SolverConfig cfg;
        cfg.u0 = sim_u0;
        cfg.dt_override = sim_dt;
        const SimulationResult r = simulate_detailed(atlas, p, cfg);
        spdlog::info("{} steps of dt={}", r.steps, r.dt);
        save_field(r.density, sim_out);
        const SegmentationPair seg = segment(r.density);
        if (sim_t1gd_out) save_mask(seg.t1gd, *sim_t1gd_out);
        if (sim_flair_out) save_mask(seg.flair, *sim_flair_out);
        spdlog::info("T1Gd {} voxels, FLAIR {} voxels", seg.t1gd.popcount(), seg.flair.popcount());
    } else if (bd->parsed()) {
        BuildOptions opts;
        opts.n_target = bd_n;
        opts.master_seed = bd_seed;
        opts.jobs = bd_jobs;
        if (bd_ranges) {
            const RangesConfig rc = parse_ranges(
                [&] {
                    const auto l = read_hashed(*bd_ranges);
                    return std::string(l.bytes.begin(), l.bytes.end());
                }());
            opts.ranges = rc.ranges;
            opts.size_filter = rc.size;
        }
        spdlog::info("build-db atlas={} n={} seed={} jobs={} dw=[{},{}] rho=[{},{}] tend=[{},{}] size=[{},{}] out={}",
                     bd_atlas, bd_n, bd_seed, bd_jobs, opts.ranges.dw.lo, opts.ranges.dw.hi, opts.ranges.rho.lo,
                     opts.ranges.rho.hi, opts.ranges.t_end.lo, opts.ranges.t_end.hi, opts.size_filter.min_frac,
                     opts.size_filter.max_frac, bd_out);
        const TissueAtlas atlas = read_atlas(bd_atlas);
        BuildStats stats;
        const TumorDatabase db = build_database(atlas, opts, &stats);
        spdlog::info("{}", stats.str());
        save_db(db, bd_out);
        spdlog::info("wrote {} ({} records)", bd_out, db.size());
    } else if (qy->parsed()) {
        const Method method = *parse_method(qy_method);
        spdlog::info("query db={} t1gd={} flair={} method={} k={} prefilter={} jobs={}", qy_db, qy_t1gd.value_or("-"),
                     qy_flair.value_or("-"), qy_method, qy_k, qy_prefilter, qy_jobs);
        const bool external = qy_db_vec || qy_q_vec;
        if (external && (!qy_db_vec || !qy_q_vec || method != Method::Embedding)) {
            throw CLI::ValidationError("--db-vectors", "--db-vectors and --query-vectors go together with --method embed");
        }
        if (!external && (!qy_t1gd || !qy_flair)) {
            throw CLI::ValidationError("--t1gd", "--t1gd and --flair are required");
        }
        const TumorDatabase db = read_db(qy_db);
        std::optional<SegmentationPair> q;
        if (qy_t1gd && qy_flair) {
            q = SegmentationPair{read_mask(*qy_t1gd), read_mask(*qy_flair)};
            require_same_dims(q->t1gd.dims(), q->flair.dims(), "query T1Gd vs FLAIR");
            require_same_dims(q->flair.dims(), db.dims, "query vs database");
        }
        QueryOptions opts;
        opts.k = qy_k;
        opts.jobs = qy_jobs;
        opts.n_prefilter = qy_prefilter;
        Ranking ranking;
        if (external) {
            const EmbeddingSet dbv = decode_embeddings(read_hashed(*qy_db_vec).bytes);
            const EmbeddingSet qv = decode_embeddings(read_hashed(*qy_q_vec).bytes);
            if (dbv.size() != db.size()) {
                throw DimensionMismatch("database vectors have " + std::to_string(dbv.size()) + " rows, database " +
                                        std::to_string(db.size()) + " records");
            }
            if (qv.size() != 1) throw FormatError("query vectors must hold exactly one row");
            ranking = embedding_query(dbv, qv.t1gd_row(0), qv.flair_row(0), opts);
        } else {
            const EmbeddingSet dbv = method == Method::Embedding ? bitcode_embeddings(db) : EmbeddingSet{};
            ranking = run_query(db, &dbv, method, *q, opts);
        }
        std::string csv = "rank,id,score,seed_x,seed_y,seed_z,dw,rho,tend\n";
        for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
            const auto& e = ranking.entries[i];
            csv += fmt::format("{},{},{:.17g},{}\n", i + 1, e.id, e.score, params_csv(db.records[e.id].params));
        }
        const Answer best = answer(db, ranking);
        if (qy_explain) {
            if (!q) throw CLI::ValidationError("--explain", "--explain needs --t1gd and --flair");
            const std::string ex = explain_csv(db, pair_features(*q), db.records[best.id].features);
            if (qy_out) {
                io::write_text_atomic(*qy_out + ".explain.csv", ex);
            } else {
                csv += "\n" + ex;
            }
        }
        emit(qy_out, csv);
        if (qy_dump) {
            save_mask(best.seg->t1gd, *qy_dump + ".t1gd.gqbm");
            save_mask(best.seg->flair, *qy_dump + ".flair.gqbm");
        }
    } else if (ev->parsed() || bn->parsed()) {
        const bool is_bench = bn->parsed();
        const std::vector<Method> methods = parse_methods(ev_methods);
        spdlog::info("{} db={} n-queries={} seed={} methods={} prefilter={} jobs={}{}", is_bench ? "bench" : "evaluate",
                     ev_db, ev_n, ev_seed, ev_methods, ev_prefilter, ev_jobs,
                     is_bench ? fmt::format(" reps={}", bn_reps) : fmt::format(" timing={}", ev_timing));
        const TumorDatabase db = read_db(ev_db);
        const TissueAtlas atlas = atlas_for(db, ev_atlas);
        QuerySetOptions qs;
        qs.n = ev_n;
        qs.seed = ev_seed;
        qs.jobs = ev_jobs;
        if (ev_ranges) {
            const auto l = read_hashed(*ev_ranges);
            const RangesConfig rc = parse_ranges(std::string(l.bytes.begin(), l.bytes.end()));
            qs.ranges = rc.ranges;
            qs.size_filter = rc.size;
        }
        BuildStats stats;
        const auto cases = make_query_set(atlas, db, qs, &stats);
        spdlog::info("query set: {}", stats.str());
        std::vector<SegmentationPair> queries;
        queries.reserve(cases.size());
        for (const auto& c : cases) queries.push_back(c.seg);
        if (is_bench) {
            const BenchReport r = bench(db, queries, methods, bn_reps, ev_jobs, ev_prefilter);
            std::cerr << "# machine: " << r.machine << "\n# kernels: " << r.isa << ", jobs: " << r.jobs
                      << "\n# database: " << r.db_size << " records, queries: " << r.n_queries << ", reps: " << r.reps
                      << "\n";
            emit(ev_out, r.csv());
        } else {
            EvalOptions eo;
            eo.methods = methods;
            eo.jobs = ev_jobs;
            eo.n_prefilter = ev_prefilter;
            eo.timing = ev_timing;
            const EvalReport r = evaluate(db, queries, eo);
            emit(ev_out, r.csv());
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_logger_mt("gq");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");
    const char* level = std::getenv("GQ_LOG");
    spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
    try {
        return run(argc, argv);
    } catch (const CLI::Error& e) {
        std::cerr << "gq: usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DimensionMismatch& e) {
        std::cerr << "gq: dimension mismatch: " << e.what() << "\n";
        return kExitFormat;
    } catch (const FormatError& e) {
        std::cerr << "gq: format error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const NumericalError& e) {
        std::cerr << "gq: numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const BuildGaveUp& e) {
        std::cerr << "gq: " << e.what() << "\n";
        return kExitOther;
    } catch (const std::invalid_argument& e) {
        std::cerr << "gq: invalid argument: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "gq: error: " << e.what() << "\n";
        return kExitOther;
    }
}
