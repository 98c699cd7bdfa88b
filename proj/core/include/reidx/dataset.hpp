#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "reidx/distribution.hpp"

namespace reidx {

enum class DataKind : std::uint8_t { uniform = 0, skew = 1 };

/// n sorted keys: u ~ U[0,1), key = floor(u^alpha * 2^63).
/// alpha = 1 reduces to uniform; duplicates are allowed.
Keys gen_keys(DataKind kind, unsigned alpha, std::uint64_t n, std::uint64_t seed);

struct SosdError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SosdFormatError : SosdError {
    using SosdError::SosdError;
};
struct SosdTruncatedError : SosdError {
    using SosdError::SosdError;
};
struct SosdUnsortedError : SosdError {
    using SosdError::SosdError;
};

/// Little-endian u64 count followed by count ascending u64 keys.
void sosd_write(const Keys& d, const std::filesystem::path& path);

/// Validates count, sortedness, and exact file length.
Keys sosd_read(const std::filesystem::path& path);

}  // namespace reidx
