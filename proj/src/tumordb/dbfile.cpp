#include <cstring>

#include "gq/binio.hpp"
#include "gq/error.hpp"
#include "gq/tumordb.hpp"

namespace gq {

namespace {

constexpr char kMagic[] = "GQDB";
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kStoredFeatures = 3 + kShapeFeatureCount;

std::uint64_t checksum(std::span<const std::uint8_t> region) {
    const Digest d = sha256(region);
    std::uint64_t v;
    std::memcpy(&v, d.data(), sizeof v);
    return v;
}

GridDims scaled(const GridDims& d, std::uint32_t f) { return {d.nx / f, d.ny / f, d.nz / f, d.dx * f}; }

}  // namespace

std::vector<std::uint8_t> encode_database(const TumorDatabase& db) {
    io::ByteWriter w;
    w.magic(kMagic);
    w.put(kVersion);
    w.raw(db.atlas_fingerprint.data(), db.atlas_fingerprint.size());
    w.put(db.dims.nx);
    w.put(db.dims.ny);
    w.put(db.dims.nz);
    w.put(db.dims.dx);
    w.put(db.thresholds.t1gd);
    w.put(db.thresholds.flair);
    w.put(static_cast<std::uint64_t>(db.records.size()));
    w.put(static_cast<std::uint32_t>(kShapeFeatureCount));
    for (double v : db.stats.mean) w.put(v);
    for (double v : db.stats.stddev) w.put(v);

    const std::size_t region_start = w.size();
    for (const TumorRecord& r : db.records) {
        w.put(r.id);
        w.put(static_cast<double>(r.params.seed_x));
        w.put(static_cast<double>(r.params.seed_y));
        w.put(static_cast<double>(r.params.seed_z));
        w.put(r.params.dw);
        w.put(r.params.rho);
        w.put(r.params.t_end);
        for (const BinaryMask* m : {&r.seg.flair, &r.seg.t1gd, &r.down2.flair, &r.down2.t1gd, &r.down4.flair,
                                    &r.down4.t1gd}) {
            const auto bytes = m->to_bytes();
            w.put(static_cast<std::uint64_t>(bytes.size()));
            w.bytes(bytes);
        }
        w.put(r.features.com[0]);
        w.put(r.features.com[1]);
        w.put(r.features.com[2]);
        for (double v : r.features.shape()) w.put(v);
    }
    const auto& buf = w.buffer();
    const std::uint64_t sum = checksum(std::span(buf).subspan(region_start));
    w.put(sum);
    return w.take();
}

TumorDatabase decode_database(std::span<const std::uint8_t> bytes, const LoadOptions& options) {
    io::ByteReader r(bytes, "database");
    r.expect_magic(kMagic);
    const auto version = r.get<std::uint32_t>("version");
    if (version != kVersion) r.fail("unsupported version " + std::to_string(version));

    TumorDatabase db;
    const auto fp = r.bytes(db.atlas_fingerprint.size(), "atlas fingerprint");
    std::memcpy(db.atlas_fingerprint.data(), fp.data(), fp.size());
    const auto nx = r.get<std::uint32_t>("nx");
    const auto ny = r.get<std::uint32_t>("ny");
    const auto nz = r.get<std::uint32_t>("nz");
    db.dims = GridDims(nx, ny, nz, r.get<double>("dx"));
    try {
        validate(db.dims);
    } catch (const std::invalid_argument& e) {
        r.fail(e.what());
    }
    if (nx % 4 || ny % 4 || nz % 4) r.fail("grid " + db.dims.str() + " is not divisible by 4");
    db.thresholds.t1gd = r.get<double>("t1gd threshold");
    db.thresholds.flair = r.get<double>("flair threshold");
    const auto count = r.get<std::uint64_t>("record count");
    const auto n_features = r.get<std::uint32_t>("feature count");
    if (n_features != kShapeFeatureCount) r.fail("expected " + std::to_string(kShapeFeatureCount) + " feature stats");
    for (double& v : db.stats.mean) v = r.get<double>("feature mean");
    for (double& v : db.stats.stddev) v = r.get<double>("feature stddev");

    const std::size_t region_start = r.pos();
    if (r.remaining() < sizeof(std::uint64_t)) r.fail("truncated before checksum");
    const std::size_t region_end = bytes.size() - sizeof(std::uint64_t);
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + region_end, sizeof stored);
    if (checksum(bytes.subspan(region_start, region_end - region_start)) != stored) {
        throw FormatError("database: record checksum mismatch", static_cast<std::int64_t>(region_end));
    }

    io::ByteReader rr(bytes.first(region_end), "database");
    rr.bytes(region_start, "header");
    const GridDims grids[3] = {db.dims, scaled(db.dims, 2), scaled(db.dims, 4)};
    if (count > rr.remaining()) rr.fail("record count " + std::to_string(count) + " exceeds file size");
    db.records.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        TumorRecord& rec = db.records[i];
        rec.id = rr.get<std::uint64_t>("record id");
        if (rec.id != i) rr.fail("record id " + std::to_string(rec.id) + " out of order, expected " + std::to_string(i));
        rec.params.seed_x = static_cast<std::uint32_t>(rr.get<double>("seed x"));
        rec.params.seed_y = static_cast<std::uint32_t>(rr.get<double>("seed y"));
        rec.params.seed_z = static_cast<std::uint32_t>(rr.get<double>("seed z"));
        rec.params.dw = rr.get<double>("dw");
        rec.params.rho = rr.get<double>("rho");
        rec.params.t_end = rr.get<double>("tend");
        BinaryMask* masks[6] = {&rec.seg.flair, &rec.seg.t1gd, &rec.down2.flair, &rec.down2.t1gd, &rec.down4.flair,
                                &rec.down4.t1gd};
        for (int m = 0; m < 6; ++m) {
            const GridDims& g = grids[m / 2];
            const auto len = rr.get<std::uint64_t>("mask length");
            const auto payload = rr.bytes(len, "mask bits");
            try {
                *masks[m] = BinaryMask::from_bytes(g, payload);
            } catch (const FormatError& e) {
                rr.fail(std::string("record ") + std::to_string(i) + ": " + e.what());
            }
        }
        double fv[kStoredFeatures];
        for (double& v : fv) v = rr.get<double>("feature");
        rec.features = FeatureVector::from_values(std::span<const double, kStoredFeatures>(fv, kStoredFeatures));
        rec.recount();
        if (options.validate) {
            if (!rec.seg.t1gd.subset_of(rec.seg.flair)) {
                rr.fail("record " + std::to_string(i) + ": T1Gd mask is not inside FLAIR");
            }
            TumorRecord check = rec;
            check.derive();
            if (!(check == rec)) {
                rr.fail("record " + std::to_string(i) + ": stored downsamples or features differ from recomputation");
            }
        }
    }
    rr.expect_end();
    return db;
}

void save_db(const TumorDatabase& db, const std::filesystem::path& path) {
    io::write_file_atomic(path, encode_database(db));
}

TumorDatabase load_db(const std::filesystem::path& path, const LoadOptions& options) {
    return decode_database(io::read_file(path), options);
}

}  // namespace gq
