#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gq {

/// Malformed or inconsistent file contents. Carries the byte offset where
/// decoding stopped when one is known.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what, std::int64_t offset = -1)
        : std::runtime_error(offset >= 0 ? what + " (at byte offset " + std::to_string(offset) + ")" : what),
          offset_(offset) {}

    std::int64_t offset() const noexcept { return offset_; }

private:
    std::int64_t offset_;
};

/// Two grids that must agree do not.
class DimensionMismatch : public FormatError {
public:
    using FormatError::FormatError;
};

/// Non-finite or out-of-range values produced by the solver.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An operation that needs at least one set voxel received an empty mask.
class EmptyMaskError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Database generation stopped because almost no candidate passed the filter.
class BuildGaveUp : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gq
