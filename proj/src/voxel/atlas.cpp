#include "gq/atlas.hpp"

#include <cmath>
#include <stdexcept>

#include "gq/binio.hpp"
#include "gq/error.hpp"

namespace gq {

namespace {
constexpr char kMagic[] = "GQAT";
constexpr std::uint32_t kVersion = 1;
}  // namespace

BinaryMask TissueAtlas::domain_mask() const {
    BinaryMask m(dims());
    for (std::size_t i = 0; i < dims().count(); ++i) {
        if (in_domain(i)) m.set(i);
    }
    return m;
}

std::vector<std::size_t> TissueAtlas::domain_voxels() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < dims().count(); ++i) {
        if (in_domain(i)) out.push_back(i);
    }
    return out;
}

void validate(const TissueAtlas& atlas) {
    validate(atlas.dims());
    require_same_dims(atlas.p_wm.dims(), atlas.p_gm.dims(), "atlas gray matter");
    require_same_dims(atlas.p_wm.dims(), atlas.p_csf.dims(), "atlas csf");
    bool any = false;
    for (std::size_t i = 0; i < atlas.dims().count(); ++i) {
        const double w = atlas.p_wm[i];
        const double g = atlas.p_gm[i];
        const double c = atlas.p_csf[i];
        if (!(w >= 0.0 && w <= 1.0 && g >= 0.0 && g <= 1.0 && c >= 0.0 && c <= 1.0)) {
            throw std::invalid_argument("atlas probability outside [0,1] at voxel " + std::to_string(i));
        }
        if (w + g + c > 1.0 + 1e-6) {
            throw std::invalid_argument("atlas probabilities sum above 1 at voxel " + std::to_string(i));
        }
        any = any || atlas.in_domain(i);
    }
    if (!any) {
        throw std::invalid_argument("atlas has an empty simulation domain");
    }
}

TissueAtlas make_phantom_atlas(std::uint32_t n, double dx) {
    if (n < 16) {
        throw std::invalid_argument("phantom atlas needs at least 16 voxels per side, got " + std::to_string(n));
    }
    const GridDims dims = GridDims::cube(n, dx);
    validate(dims);
    TissueAtlas a{ScalarField(dims), ScalarField(dims), ScalarField(dims)};
    const double c = n / 2;
    const double r_csf = 0.08 * n;
    const double r_wm = 0.28 * n;
    const double r_gm = 0.38 * n;
    for (std::uint32_t z = 0; z < n; ++z) {
        for (std::uint32_t y = 0; y < n; ++y) {
            for (std::uint32_t x = 0; x < n; ++x) {
                const double r = std::sqrt((x - c) * (x - c) + (y - c) * (y - c) + (z - c) * (z - c));
                const std::size_t i = dims.index(x, y, z);
                if (r <= r_csf) {
                    a.p_csf[i] = 1.0;
                } else if (r <= r_wm) {
                    a.p_wm[i] = 1.0;
                } else if (r <= r_gm) {
                    a.p_gm[i] = 1.0;
                }
            }
        }
    }
    return a;
}

std::vector<std::uint8_t> encode_atlas(const TissueAtlas& atlas) {
    const GridDims& d = atlas.dims();
    io::ByteWriter w;
    w.magic(kMagic);
    w.put(kVersion);
    w.put(d.nx);
    w.put(d.ny);
    w.put(d.nz);
    w.put(d.dx);
    for (const ScalarField* f : {&atlas.p_wm, &atlas.p_gm, &atlas.p_csf}) {
        for (double v : f->values()) w.put(static_cast<float>(v));
    }
    return w.take();
}

TissueAtlas decode_atlas(std::span<const std::uint8_t> bytes) {
    io::ByteReader r(bytes, "atlas");
    r.expect_magic(kMagic);
    const auto version = r.get<std::uint32_t>("version");
    if (version != kVersion) {
        r.fail("unsupported version " + std::to_string(version));
    }
    const auto nx = r.get<std::uint32_t>("nx");
    const auto ny = r.get<std::uint32_t>("ny");
    const auto nz = r.get<std::uint32_t>("nz");
    const auto dx = r.get<double>("dx");
    const GridDims dims(nx, ny, nz, dx);
    try {
        validate(dims);
    } catch (const std::invalid_argument& e) {
        r.fail(e.what());
    }
    if (r.remaining() != 3 * dims.count() * sizeof(float)) {
        r.fail("payload is " + std::to_string(r.remaining()) + " bytes, expected " +
               std::to_string(3 * dims.count() * sizeof(float)));
    }
    TissueAtlas a{ScalarField(dims), ScalarField(dims), ScalarField(dims)};
    for (ScalarField* f : {&a.p_wm, &a.p_gm, &a.p_csf}) {
        for (double& v : f->values()) v = r.get<float>("probability");
    }
    r.expect_end();
    try {
        validate(a);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("atlas: ") + e.what());
    }
    return a;
}

void save_atlas(const TissueAtlas& atlas, const std::filesystem::path& path) {
    io::write_file_atomic(path, encode_atlas(atlas));
}

TissueAtlas load_atlas(const std::filesystem::path& path) { return decode_atlas(io::read_file(path)); }

Digest atlas_fingerprint(const TissueAtlas& atlas) { return sha256(encode_atlas(atlas)); }

}  // namespace gq
