#include "gq/binio.hpp"
#include "gq/segmentation.hpp"

namespace gq {

namespace {

constexpr std::uint32_t kVersion = 1;

void put_dims(io::ByteWriter& w, const GridDims& d) {
    w.put(d.nx);
    w.put(d.ny);
    w.put(d.nz);
    w.put(d.dx);
}

GridDims get_dims(io::ByteReader& r) {
    const auto version = r.get<std::uint32_t>("version");
    if (version != kVersion) {
        r.fail("unsupported version " + std::to_string(version));
    }
    const auto nx = r.get<std::uint32_t>("nx");
    const auto ny = r.get<std::uint32_t>("ny");
    const auto nz = r.get<std::uint32_t>("nz");
    const GridDims d(nx, ny, nz, r.get<double>("dx"));
    try {
        validate(d);
    } catch (const std::invalid_argument& e) {
        r.fail(e.what());
    }
    return d;
}

}  // namespace

std::vector<std::uint8_t> encode_mask(const BinaryMask& mask) {
    io::ByteWriter w;
    w.magic("GQBM");
    w.put(kVersion);
    put_dims(w, mask.dims());
    w.bytes(mask.to_bytes());
    return w.take();
}

BinaryMask decode_mask(std::span<const std::uint8_t> bytes) {
    io::ByteReader r(bytes, "mask");
    r.expect_magic("GQBM");
    const GridDims d = get_dims(r);
    const std::size_t n = (d.count() + 7) / 8;
    const auto payload = r.bytes(n, "mask bits");
    r.expect_end();
    try {
        return BinaryMask::from_bytes(d, payload);
    } catch (const FormatError& e) {
        r.fail(e.what());
    }
}

void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
    io::write_file_atomic(path, encode_mask(mask));
}

BinaryMask load_mask(const std::filesystem::path& path) { return decode_mask(io::read_file(path)); }

std::vector<std::uint8_t> encode_field(const ScalarField& field) {
    io::ByteWriter w;
    w.magic("GQU1");
    w.put(kVersion);
    put_dims(w, field.dims());
    for (double v : field.values()) w.put(static_cast<float>(v));
    return w.take();
}

ScalarField decode_field(std::span<const std::uint8_t> bytes) {
    io::ByteReader r(bytes, "density field");
    r.expect_magic("GQU1");
    const GridDims d = get_dims(r);
    if (r.remaining() != d.count() * sizeof(float)) {
        r.fail("payload is " + std::to_string(r.remaining()) + " bytes, expected " +
               std::to_string(d.count() * sizeof(float)));
    }
    ScalarField f(d);
    for (double& v : f.values()) v = r.get<float>("density");
    return f;
}

void save_field(const ScalarField& field, const std::filesystem::path& path) {
    io::write_file_atomic(path, encode_field(field));
}

ScalarField load_field(const std::filesystem::path& path) { return decode_field(io::read_file(path)); }

}  // namespace gq
