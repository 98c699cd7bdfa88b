#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "reidx/model.hpp"
#include "reidx/pool.hpp"

namespace reidx {

struct IndexConfig {
    double eps = 0.9;
    ModelKind model = ModelKind::linear;
    bool reuse = true;  // false: always train, never touch the pool
    TrainConfig train;
};

/// floor((sim - eps)/(1 + eps - sim) * n_d), clamped to >= 0.
/// The number of insertions a leaf tolerates before its model must be
/// rebuilt while keeping the CDF drift within sim - eps.
std::uint64_t insertion_budget(double sim, double eps, std::uint64_t n_d);

/// A leaf owns its key slice; insertions shift positions only locally.
struct LeafSegment {
    Keys keys;
    std::vector<std::uint8_t> dead;  // tombstones, aligned to keys
    AdaptedModel model;
    double sim = 1.0;
    std::uint64_t insert_count = 0;
    std::uint64_t insert_budget = 0;
    std::uint64_t base_size = 0;  // n_D at last (re)build
};

struct LookupResult {
    std::uint32_t leaf = 0;
    std::uint64_t offset = 0;
};

enum class InsertOutcome { inserted, inserted_with_rebuild };

struct IndexStats {
    std::uint64_t key_count = 0;
    std::size_t model_count = 0;
    std::size_t trained_count = 0;
    std::size_t reused_count = 0;
    double reuse_rate = 0.0;
    std::size_t max_depth = 0;
    double mean_leaf_depth = 0.0;
    std::size_t param_bytes = 0;
    double mean_window = 0.0;
    std::uint64_t rebuild_count = 0;
};

/// Two-layer recursive model index: one root model routes each key to one
/// of `fanout` leaf segments by clamp(floor(rank * fanout), 0, fanout-1).
class RmiIndex {
public:
    RmiIndex(const Keys& d, std::size_t fanout, ModelPool* pool, IndexConfig cfg);

    std::optional<LookupResult> lookup(Key k) const;
    InsertOutcome insert(Key k);
    bool erase(Key k);
    IndexStats stats() const;

    const AdaptedModel& root() const { return root_; }
    const std::vector<LeafSegment>& leaves() const { return leaves_; }

private:
    std::size_t route(Key k) const;

    AdaptedModel root_;
    double root_rank_scale_ = 1.0;  // 1/(n-1) at build
    std::size_t fanout_ = 1;
    std::vector<LeafSegment> leaves_;
    IndexConfig cfg_;
    ModelPool* pool_ = nullptr;
    std::uint64_t rebuilds_ = 0;
};

/// Recursive model reuse tree node: internal nodes route by model rank
/// (or explicit separators after a quantile fallback), leaves hold data.
struct RmrtNode {
    bool is_leaf = true;
    LeafSegment leaf;

    AdaptedModel router;
    double router_rank_scale_ = 1.0;
    std::vector<Key> separators;  // non-empty: quantile routing
    std::vector<std::unique_ptr<RmrtNode>> children;
};

class RmrtIndex {
public:
    RmrtIndex(const Keys& d, std::uint64_t leaf_cap, std::size_t branch,
              ModelPool* pool, IndexConfig cfg);

    std::optional<LookupResult> lookup(Key k) const;
    InsertOutcome insert(Key k);
    bool erase(Key k);
    IndexStats stats() const;

    const RmrtNode& root() const { return *root_; }
    std::uint64_t leaf_capacity() const { return leaf_cap_; }

private:
    std::unique_ptr<RmrtNode> build_node(Keys keys) const;
    std::size_t route(const RmrtNode& node, Key k) const;
    const RmrtNode* descend(Key k) const;

    std::unique_ptr<RmrtNode> root_;
    std::uint64_t leaf_cap_ = 10000;
    std::size_t branch_ = 16;
    IndexConfig cfg_;
    ModelPool* pool_ = nullptr;
    std::uint64_t rebuilds_ = 0;
};

/// Plain sorted-array baseline with the same tombstone semantics.
class BinarySearchIndex {
public:
    explicit BinarySearchIndex(const Keys& d) : keys_(d), dead_(d.size(), 0) {}

    std::optional<LookupResult> lookup(Key k) const;
    InsertOutcome insert(Key k);
    bool erase(Key k);
    IndexStats stats() const;

private:
    Keys keys_;
    std::vector<std::uint8_t> dead_;
};

}  // namespace reidx
