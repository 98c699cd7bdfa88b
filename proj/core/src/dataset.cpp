#include "reidx/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace reidx {

Keys gen_keys(DataKind kind, unsigned alpha, std::uint64_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("gen_keys: n must be >= 1");
    if (kind == DataKind::uniform) alpha = 1;
    if (alpha == 0) throw std::invalid_argument("gen_keys: alpha must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    constexpr double kScale = 9223372036854775808.0;  // 2^63
    Keys keys;
    keys.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const double u = uni(rng);
        keys.push_back(static_cast<Key>(
            std::floor(std::pow(u, static_cast<double>(alpha)) * kScale)));
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

void sosd_write(const Keys& d, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw SosdError("cannot open for writing: " + path.string());
    const std::uint64_t n = d.size();
    os.write(reinterpret_cast<const char*>(&n), sizeof(n));
    os.write(reinterpret_cast<const char*>(d.data()),
             static_cast<std::streamsize>(n * sizeof(Key)));
    if (!os) throw SosdError("failed writing: " + path.string());
}

Keys sosd_read(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw SosdError("cannot open: " + path.string());
    std::uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!is) throw SosdTruncatedError("truncated header: " + path.string());
    Keys keys(n);
    is.read(reinterpret_cast<char*>(keys.data()),
            static_cast<std::streamsize>(n * sizeof(Key)));
    if (static_cast<std::uint64_t>(is.gcount()) != n * sizeof(Key))
        throw SosdTruncatedError("key count mismatch: " + path.string());
    if (is.peek() != std::ifstream::traits_type::eof())
        throw SosdFormatError("trailing bytes: " + path.string());
    if (!std::is_sorted(keys.begin(), keys.end()))
        throw SosdUnsortedError("keys not ascending: " + path.string());
    return keys;
}

}  // namespace reidx
