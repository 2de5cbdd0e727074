#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "gq/atlas.hpp"
#include "gq/binio.hpp"
#include "gq/error.hpp"
#include "gq/hash.hpp"
#include "gq/segmentation.hpp"
#include "helpers.hpp"

using namespace gq;

namespace {

std::filesystem::path temp_path(const char* name) {
    return std::filesystem::temp_directory_path() / (std::string("gq_unit_") + name);
}

}  // namespace

TEST_CASE("linear index round trip") {
    const GridDims d(5, 7, 3, 1.0);
    std::size_t expect = 0;
    for (std::uint32_t z = 0; z < d.nz; ++z)
        for (std::uint32_t y = 0; y < d.ny; ++y)
            for (std::uint32_t x = 0; x < d.nx; ++x) {
                CHECK(d.index(x, y, z) == expect++);
                const auto c = d.unindex(d.index(x, y, z));
                CHECK(c == std::array<std::uint32_t, 3>{x, y, z});
            }
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(validate(GridDims(3, 4, 4, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(validate(GridDims(4, 4, 4, 0.0)), std::invalid_argument);
    CHECK_NOTHROW(validate(GridDims(4, 4, 4, 0.5)));
    CHECK_THROWS_AS(require_same_dims(GridDims(4, 4, 4, 1.0), GridDims(8, 4, 4, 1.0), "x"), DimensionMismatch);
}

TEST_CASE("mask volume") {
    BinaryMask empty(GridDims::cube(4, 2.0));
    CHECK(mask_volume_mm3(empty) == 0.0);
    BinaryMask five(GridDims::cube(4, 2.0));
    for (std::size_t i : {0, 5, 17, 40, 63}) five.set(i);
    CHECK(mask_volume_mm3(five) == 40.0);
    BinaryMask full(GridDims::cube(4, 1.0));
    for (std::size_t i = 0; i < 64; ++i) full.set(i);
    CHECK(mask_volume_mm3(full) == 64.0);
}

TEST_CASE("mask byte layout and pad bits") {
    const GridDims d(5, 3, 4, 1.0);  // 60 voxels, 8 bytes
    BinaryMask m(d);
    m.set(0);
    m.set(9);
    m.set(59);
    const auto bytes = m.to_bytes();
    REQUIRE(bytes.size() == 8);
    CHECK(bytes[0] == 0x01);
    CHECK(bytes[1] == 0x02);
    CHECK(bytes[7] == 0x08);
    CHECK(BinaryMask::from_bytes(d, bytes) == m);

    auto bad = bytes;
    bad[7] |= 0x80;  // voxel 63 does not exist
    CHECK_THROWS_AS(BinaryMask::from_bytes(d, bad), FormatError);
    bad.pop_back();
    CHECK_THROWS_AS(BinaryMask::from_bytes(d, bad), FormatError);
}

TEST_CASE("mask popcount and subset against a naive loop") {
    std::mt19937_64 rng(3);
    const GridDims d(13, 11, 7, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const BinaryMask a = test::random_mask(d, 0.3, rng);
        BinaryMask b = a;
        for (std::size_t i = 0; i < d.count(); i += 5) b.set(i);
        std::uint64_t n = 0;
        for (std::size_t i = 0; i < d.count(); ++i) n += a.get(i);
        CHECK(a.popcount() == n);
        CHECK(a.subset_of(b));
        if (b.popcount() > a.popcount()) CHECK_FALSE(b.subset_of(a));
        std::vector<std::size_t> seen;
        a.for_each_set([&](std::size_t i) { seen.push_back(i); });
        CHECK(seen.size() == n);
        CHECK(std::is_sorted(seen.begin(), seen.end()));
    }
}

TEST_CASE("phantom atlas labels") {
    const TissueAtlas a = make_phantom_atlas(64, 2.0);
    CHECK(a.p_csf.at(32, 32, 32) == 1.0);
    CHECK(a.p_wm.at(32, 32, 32) == 0.0);
    CHECK(a.p_wm.at(0, 0, 0) == 0.0);
    CHECK(a.p_gm.at(0, 0, 0) == 0.0);
    CHECK(a.p_csf.at(0, 0, 0) == 0.0);
    // 20 voxels from the center: between the white (17.92) and gray (24.32) radii.
    CHECK(a.p_gm.at(52, 32, 32) == 1.0);
    CHECK(a.p_wm.at(52, 32, 32) == 0.0);
    CHECK(a.p_wm.at(40, 32, 32) == 1.0);
    CHECK_NOTHROW(validate(a));
    CHECK_THROWS_AS(make_phantom_atlas(8, 1.0), std::invalid_argument);

    const auto dom = a.domain_voxels();
    CHECK(a.domain_mask().popcount() == dom.size());
    CHECK_FALSE(a.in_domain(a.dims().index(32, 32, 32)));
}

TEST_CASE("atlas file round trip and errors") {
    const TissueAtlas a = make_phantom_atlas(16, 1.0);
    const auto path = temp_path("atlas.bin");
    save_atlas(a, path);
    CHECK(load_atlas(path) == a);
    std::filesystem::remove(path);

    auto bytes = encode_atlas(a);
    CHECK(decode_atlas(bytes) == a);
    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    CHECK_THROWS_AS(decode_atlas(truncated), FormatError);
    auto wrong = bytes;
    std::copy_n("XXXX", 4, wrong.begin());
    try {
        decode_atlas(wrong);
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("magic mismatch") != std::string::npos);
        CHECK(e.offset() == 0);
    }
    CHECK(atlas_fingerprint(a) == sha256(bytes));
    CHECK(atlas_fingerprint(a) != atlas_fingerprint(make_phantom_atlas(16, 2.0)));
}

TEST_CASE("mask and field containers") {
    std::mt19937_64 rng(5);
    const GridDims d(8, 6, 5, 1.5);
    const BinaryMask m = test::random_mask(d, 0.4, rng);
    CHECK(decode_mask(encode_mask(m)) == m);
    auto bytes = encode_mask(m);
    bytes.push_back(0);
    CHECK_THROWS_AS(decode_mask(bytes), FormatError);

    ScalarField f(d);
    for (std::size_t i = 0; i < d.count(); ++i) f[i] = static_cast<float>(i) / 7.0f;
    const ScalarField back = decode_field(encode_field(f));
    CHECK(back == f);
    CHECK_THROWS_AS(decode_field(encode_mask(m)), FormatError);
}

TEST_CASE("sha256 known answer") {
    const std::string abc = "abc";
    const auto d = sha256({reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size()});
    CHECK(to_hex(d) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("rng determinism and ranges") {
    Rng a(stream_key(1, 2, 3));
    Rng b(stream_key(1, 2, 3));
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    CHECK(stream_key(1, 2, 3) != stream_key(1, 2, 4));
    CHECK(stream_key(1, 2, 3) != stream_key(1, 3, 3));
    Rng r(9);
    CHECK(r.uniform(0.25, 0.25) == 0.25);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform01();
        CHECK((u >= 0.0 && u < 1.0));
        CHECK(r.below(7) < 7);
    }
}

TEST_CASE("atomic write replaces the target") {
    const auto path = temp_path("atomic.txt");
    io::write_text_atomic(path, "first");
    io::write_text_atomic(path, "second");
    const auto bytes = io::read_file(path);
    CHECK(std::string(bytes.begin(), bytes.end()) == "second");
    std::filesystem::remove(path);
}
