#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gq {

/// Voxel counts per axis and the isotropic voxel edge length in mm.
/// Voxel (x,y,z) lives at linear index x + nx*(y + ny*z) everywhere,
/// including on disk.
struct GridDims {
    std::uint32_t nx = 0;
    std::uint32_t ny = 0;
    std::uint32_t nz = 0;
    double dx = 1.0;

    GridDims() = default;
    GridDims(std::uint32_t nx_, std::uint32_t ny_, std::uint32_t nz_, double dx_);

    static GridDims cube(std::uint32_t n, double dx) { return {n, n, n, dx}; }

    std::size_t count() const noexcept { return std::size_t{nx} * ny * nz; }

    std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const noexcept {
        return x + std::size_t{nx} * (y + std::size_t{ny} * z);
    }

    std::array<std::uint32_t, 3> unindex(std::size_t i) const noexcept {
        const auto x = static_cast<std::uint32_t>(i % nx);
        i /= nx;
        const auto y = static_cast<std::uint32_t>(i % ny);
        return {x, y, static_cast<std::uint32_t>(i / ny)};
    }

    bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
        return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
    }

    /// Same voxel counts and bit-identical spacing.
    bool operator==(const GridDims&) const = default;

    std::string str() const;
};

/// Throws std::invalid_argument unless nx,ny,nz >= 4 and dx > 0 (finite).
void validate(const GridDims& dims);

/// Throws DimensionMismatch naming both grids when they differ.
void require_same_dims(const GridDims& a, const GridDims& b, const char* what);

/// One double per voxel in canonical linear order.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const GridDims& dims, double fill = 0.0);
    ScalarField(const GridDims& dims, std::vector<double> values);

    const GridDims& dims() const noexcept { return dims_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    double at(std::uint32_t x, std::uint32_t y, std::uint32_t z) const { return values_[dims_.index(x, y, z)]; }
    double& at(std::uint32_t x, std::uint32_t y, std::uint32_t z) { return values_[dims_.index(x, y, z)]; }

    double sum() const noexcept;
    double max() const noexcept;

    bool operator==(const ScalarField&) const = default;

private:
    GridDims dims_;
    std::vector<double> values_;
};

/// One bit per voxel, packed in linear-index order: voxel i is bit (i mod 64)
/// of word i/64, which on a little-endian byte stream is bit (i mod 8) of
/// byte i/8. Pad bits past count() are always zero.
class BinaryMask {
public:
    BinaryMask() = default;
    explicit BinaryMask(const GridDims& dims);

    /// Builds from the on-disk byte layout. Throws FormatError if the byte
    /// count is wrong or pad bits are set.
    static BinaryMask from_bytes(const GridDims& dims, std::span<const std::uint8_t> bytes);
    std::vector<std::uint8_t> to_bytes() const;
    std::size_t byte_size() const noexcept { return (dims_.count() + 7) / 8; }

    const GridDims& dims() const noexcept { return dims_; }
    std::span<const std::uint64_t> words() const noexcept { return words_; }
    std::span<std::uint64_t> words() noexcept { return words_; }

    bool get(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i, bool on = true) noexcept {
        const std::uint64_t bit = std::uint64_t{1} << (i & 63);
        if (on) {
            words_[i >> 6] |= bit;
        } else {
            words_[i >> 6] &= ~bit;
        }
    }
    bool get(std::uint32_t x, std::uint32_t y, std::uint32_t z) const noexcept { return get(dims_.index(x, y, z)); }
    void set(std::uint32_t x, std::uint32_t y, std::uint32_t z, bool on = true) noexcept {
        set(dims_.index(x, y, z), on);
    }

    std::uint64_t popcount() const noexcept;
    bool empty() const noexcept { return popcount() == 0; }

    /// Every set bit of *this is also set in other. Dims must match.
    bool subset_of(const BinaryMask& other) const;

    /// Calls fn(linear_index) for every set voxel in ascending order.
    template <typename Fn>
    void for_each_set(Fn&& fn) const {
        for (std::size_t w = 0; w < words_.size(); ++w) {
            std::uint64_t bits = words_[w];
            while (bits != 0) {
                const int b = __builtin_ctzll(bits);
                fn(w * 64 + static_cast<std::size_t>(b));
                bits &= bits - 1;
            }
        }
    }

    bool operator==(const BinaryMask&) const = default;

private:
    GridDims dims_;
    std::vector<std::uint64_t> words_;
};

/// popcount(mask) * dx^3.
double mask_volume_mm3(const BinaryMask& mask);

}  // namespace gq
