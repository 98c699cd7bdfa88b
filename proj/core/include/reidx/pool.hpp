#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "reidx/model.hpp"

namespace reidx {

/// One pre-trained model with the histogram of its source dataset.
/// Bounds are in source position units over a set of pool.ns keys.
struct PoolEntry {
    std::uint32_t id = 0;
    Histogram histogram;  // m bins on [0, 1]
    CoreModel model;
    ErrorBounds bounds;
    double max_abs_err = 0.0;
};

/// Priority queue of reusable models, ascending by max_abs_err.
class ModelPool {
public:
    ModelPool() = default;
    ModelPool(ModelKind kind, double eps, std::size_t m, std::uint64_t ns)
        : kind_(kind), eps_(eps), m_(m), ns_(ns) {}

    ModelKind kind() const { return kind_; }
    double eps() const { return eps_; }
    std::size_t bin_count() const { return m_; }
    std::uint64_t source_size() const { return ns_; }
    const std::vector<PoolEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// Inserts keeping ascending max_abs_err order; assigns the id if the
    /// entry has none. Returns the entry id.
    std::uint32_t enqueue(PoolEntry entry);

    std::uint32_t next_id() const { return next_id_; }

private:
    ModelKind kind_ = ModelKind::linear;
    double eps_ = 0.9;
    std::size_t m_ = 12;
    std::uint64_t ns_ = 100;
    std::uint32_t next_id_ = 0;
    std::vector<PoolEntry> entries_;

    friend ModelPool load_pool(const std::filesystem::path&);
};

/// ceil(2/(1-eps)) bins, except eps = 0.9 which uses 12.
std::size_t default_bin_count(double eps);

/// All histograms of m bins with values in {0, (1-eps)/2, 1-eps} summing
/// to 1, in lexicographic order. Empty (with a warning on stderr) when
/// 2/(1-eps) is not an integer, i.e. no valid composition exists.
std::vector<Histogram> enumerate_histograms(double eps, std::size_t m);

/// ns keys apportioned to bins by largest remainder, drawn uniformly
/// within each bin's subinterval of [0, 1], sorted, and emitted as
/// 64-bit fixed-point fractions of the full unsigned key range.
Keys synthesize_dataset(const Histogram& h, std::uint64_t ns, std::uint64_t seed);

/// Domain span covered by synthesize_dataset output (the full key range);
/// bin a synthetic set over this span to recover its grid histogram.
DomainSpan synthetic_span();

/// One pool entry per enumerated histogram: synthesize, fit, bound.
/// Deterministic given the seed. m = 0 selects default_bin_count(eps).
ModelPool pretrain_pool(double eps, ModelKind kind, std::uint64_t ns,
                        std::uint64_t seed, std::size_t m = 0,
                        const TrainConfig& train = {});

/// Walks entries in ascending max_abs_err order and adapts the first one
/// whose histogram distance to d is <= 1-eps. Otherwise trains a new
/// model on d, enqueues it, and returns it with trained provenance.
AdaptedModel agile_model_reuse(const Keys& d, ModelPool& pool, double eps,
                               const TrainConfig& train = {});

struct PoolIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PoolFormatError : PoolIoError {
    using PoolIoError::PoolIoError;
};
struct PoolVersionError : PoolIoError {
    using PoolIoError::PoolIoError;
};
struct PoolTruncatedError : PoolIoError {
    using PoolIoError::PoolIoError;
};

/// Versioned little-endian binary format, lossless round trip.
void save_pool(const ModelPool& pool, const std::filesystem::path& path);
ModelPool load_pool(const std::filesystem::path& path);

}  // namespace reidx
