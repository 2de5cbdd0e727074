#include "gq/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gq/error.hpp"
#include "gq/kernels/kernels.hpp"

namespace gq {

GridDims::GridDims(std::uint32_t nx_, std::uint32_t ny_, std::uint32_t nz_, double dx_)
    : nx(nx_), ny(ny_), nz(nz_), dx(dx_) {}

std::string GridDims::str() const {
    std::ostringstream os;
    os << nx << "x" << ny << "x" << nz << " @ " << dx << " mm";
    return os.str();
}

void validate(const GridDims& dims) {
    if (dims.nx < 4 || dims.ny < 4 || dims.nz < 4) {
        throw std::invalid_argument("grid must be at least 4 voxels per axis, got " + dims.str());
    }
    if (!(dims.dx > 0.0) || !std::isfinite(dims.dx)) {
        throw std::invalid_argument("voxel size must be positive and finite, got " + dims.str());
    }
}

void require_same_dims(const GridDims& a, const GridDims& b, const char* what) {
    if (!(a == b)) {
        throw DimensionMismatch(std::string(what) + ": dimension mismatch, " + a.str() + " vs " + b.str());
    }
}

ScalarField::ScalarField(const GridDims& dims, double fill) : dims_(dims), values_(dims.count(), fill) {}

ScalarField::ScalarField(const GridDims& dims, std::vector<double> values)
    : dims_(dims), values_(std::move(values)) {
    if (values_.size() != dims_.count()) {
        throw std::invalid_argument("scalar field has " + std::to_string(values_.size()) + " values for grid " +
                                    dims_.str());
    }
}

double ScalarField::sum() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
}

double ScalarField::max() const noexcept {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : values_) m = std::max(m, v);
    return m;
}

BinaryMask::BinaryMask(const GridDims& dims) : dims_(dims), words_((dims.count() + 63) / 64, 0) {}

BinaryMask BinaryMask::from_bytes(const GridDims& dims, std::span<const std::uint8_t> bytes) {
    BinaryMask m(dims);
    if (bytes.size() != m.byte_size()) {
        throw FormatError("mask for grid " + dims.str() + " needs " + std::to_string(m.byte_size()) +
                          " bytes, got " + std::to_string(bytes.size()));
    }
    std::memcpy(m.words_.data(), bytes.data(), bytes.size());
    const std::size_t n = dims.count();
    if (n % 64 != 0) {
        const std::uint64_t pad = ~((std::uint64_t{1} << (n % 64)) - 1);
        if (m.words_.back() & pad) {
            throw FormatError("mask has non-zero pad bits");
        }
    }
    return m;
}

std::vector<std::uint8_t> BinaryMask::to_bytes() const {
    std::vector<std::uint8_t> out(byte_size());
    std::memcpy(out.data(), words_.data(), out.size());
    return out;
}

std::uint64_t BinaryMask::popcount() const noexcept { return kernels::popcount(words_); }

bool BinaryMask::subset_of(const BinaryMask& other) const {
    require_same_dims(dims_, other.dims_, "mask inclusion");
    for (std::size_t i = 0; i < words_.size(); ++i) {
        if (words_[i] & ~other.words_[i]) return false;
    }
    return true;
}

double mask_volume_mm3(const BinaryMask& mask) {
    const double dx = mask.dims().dx;
    return static_cast<double>(mask.popcount()) * dx * dx * dx;
}

}  // namespace gq
