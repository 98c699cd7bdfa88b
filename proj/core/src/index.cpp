#include "reidx/index.hpp"

#include <algorithm>
#include <cmath>

namespace reidx {

namespace {

constexpr std::uint64_t kNotFound = ~std::uint64_t{0};

AdaptedModel acquire_model(const Keys& keys, ModelPool* pool,
                           const IndexConfig& cfg) {
    if (cfg.reuse && pool != nullptr)
        return agile_model_reuse(keys, *pool, cfg.eps, cfg.train);
    AdaptedModel m = train_model(keys, cfg.model, cfg.train);
    fold_linear_maps(m);
    return m;
}

AdaptedModel sentinel_model() {
    AdaptedModel m;
    m.core = LinearModel{0.0, 0.0};
    m.bounds = {0, 0};
    m.provenance = {Provenance::Source::trained, 1.0, 0};
    return m;
}

void refit_leaf(LeafSegment& leaf, ModelPool* pool, const IndexConfig& cfg) {
    if (leaf.keys.empty()) {
        leaf.model = sentinel_model();
        leaf.sim = 1.0;
        leaf.insert_budget = 0;
    } else {
        leaf.model = acquire_model(leaf.keys, pool, cfg);
        leaf.sim = leaf.model.provenance.similarity;
        leaf.insert_budget =
            insertion_budget(leaf.sim, cfg.eps, leaf.keys.size());
    }
    leaf.insert_count = 0;
    leaf.base_size = leaf.keys.size();
}

LeafSegment make_leaf(Keys keys, ModelPool* pool, const IndexConfig& cfg) {
    LeafSegment leaf;
    leaf.dead.assign(keys.size(), 0);
    leaf.keys = std::move(keys);
    refit_leaf(leaf, pool, cfg);
    return leaf;
}

// First live occurrence of k inside the leaf's predicted window.
std::uint64_t leaf_find(const LeafSegment& leaf, Key k) {
    const auto n = static_cast<std::int64_t>(leaf.keys.size());
    if (n == 0) return kNotFound;
    double pred = leaf.model.predict_position(static_cast<double>(k));
    if (!std::isfinite(pred)) pred = 0.0;
    std::int64_t lo = static_cast<std::int64_t>(std::floor(pred)) +
                      leaf.model.bounds.lower;
    std::int64_t hi = static_cast<std::int64_t>(std::ceil(pred)) +
                      leaf.model.bounds.upper;
    lo = std::clamp<std::int64_t>(lo, 0, n - 1);
    hi = std::clamp<std::int64_t>(hi, 0, n - 1);
    if (lo > hi) return kNotFound;
    const auto first = leaf.keys.begin() + lo;
    const auto last = leaf.keys.begin() + hi + 1;
    auto it = std::lower_bound(first, last, k);
    if (it == leaf.keys.end() || *it != k) return kNotFound;
    // duplicates may run past the window; they are still equal keys
    for (; it != leaf.keys.end() && *it == k; ++it) {
        const auto pos = static_cast<std::uint64_t>(it - leaf.keys.begin());
        if (!leaf.dead[pos]) return pos;
    }
    return kNotFound;
}

// Inserts k and widens the window by one position on each side; rebuilds
// the leaf model once the similarity-derived insert budget is exceeded.
InsertOutcome leaf_insert(LeafSegment& leaf, Key k, ModelPool* pool,
                          const IndexConfig& cfg, std::uint64_t& rebuilds) {
    const auto it = std::upper_bound(leaf.keys.begin(), leaf.keys.end(), k);
    const auto pos = it - leaf.keys.begin();
    leaf.keys.insert(it, k);
    leaf.dead.insert(leaf.dead.begin() + pos, 0);
    leaf.model.bounds.lower -= 1;
    leaf.model.bounds.upper += 1;
    ++leaf.insert_count;
    if (leaf.insert_count <= leaf.insert_budget) return InsertOutcome::inserted;
    refit_leaf(leaf, pool, cfg);
    ++rebuilds;
    return InsertOutcome::inserted_with_rebuild;
}

bool leaf_erase(LeafSegment& leaf, Key k) {
    const std::uint64_t pos = leaf_find(leaf, k);
    if (pos == kNotFound) return false;
    leaf.dead[pos] = 1;
    return true;
}

std::size_t model_bytes(const AdaptedModel& m) {
    std::size_t b = std::holds_alternative<LinearModel>(m.core)
                        ? 2 * sizeof(double)
                        : 13 * sizeof(double);
    if (m.input.scale != 1.0 || m.input.shift != 0.0 ||
        m.output.scale != 1.0 || m.output.shift != 0.0)
        b += 4 * sizeof(double);
    return b;
}

struct StatsAccum {
    IndexStats s;
    std::uint64_t leaf_count = 0;
    double depth_sum = 0.0;
    double window_sum = 0.0;

    void add_model(const AdaptedModel& m) {
        ++s.model_count;
        s.param_bytes += model_bytes(m);
        if (m.provenance.source == Provenance::Source::reused)
            ++s.reused_count;
        else
            ++s.trained_count;
    }
    void add_leaf(const LeafSegment& leaf, std::size_t depth) {
        s.key_count += leaf.keys.size();
        s.max_depth = std::max(s.max_depth, depth);
        if (leaf.keys.empty()) return;  // sentinel leaves carry no model
        add_model(leaf.model);
        ++leaf_count;
        depth_sum += static_cast<double>(depth);
        window_sum += static_cast<double>(leaf.model.bounds.upper -
                                          leaf.model.bounds.lower);
    }
    IndexStats finish(std::uint64_t rebuilds) {
        s.rebuild_count = rebuilds;
        if (s.model_count > 0)
            s.reuse_rate = static_cast<double>(s.reused_count) /
                           static_cast<double>(s.model_count);
        if (leaf_count > 0) {
            s.mean_leaf_depth = depth_sum / static_cast<double>(leaf_count);
            s.mean_window = window_sum / static_cast<double>(leaf_count);
        }
        return s;
    }
};

}  // namespace

std::uint64_t insertion_budget(double sim, double eps, std::uint64_t n_d) {
    if (sim <= eps) return 0;
    const double b = (sim - eps) / (1.0 + eps - sim) * static_cast<double>(n_d);
    if (b <= 0.0) return 0;
    // absorb float noise so exact ratios (e.g. 0.1/0.9*900) floor cleanly
    return static_cast<std::uint64_t>(std::floor(b + 1e-9));
}

// ---------------------------------------------------------------- RmiIndex

RmiIndex::RmiIndex(const Keys& d, std::size_t fanout, ModelPool* pool,
                   IndexConfig cfg)
    : fanout_(fanout), cfg_(cfg), pool_(pool) {
    if (d.empty()) throw std::invalid_argument("RmiIndex: empty key set");
    if (fanout == 0) throw std::invalid_argument("RmiIndex: fanout must be >= 1");
    root_ = acquire_model(d, pool_, cfg_);
    root_rank_scale_ =
        d.size() > 1 ? 1.0 / static_cast<double>(d.size() - 1) : 0.0;

    std::vector<Keys> parts(fanout);
    for (Key k : d) parts[route(k)].push_back(k);
    leaves_.reserve(fanout);
    for (auto& part : parts)
        leaves_.push_back(make_leaf(std::move(part), pool_, cfg_));
}

std::size_t RmiIndex::route(Key k) const {
    const double rank =
        root_.predict_position(static_cast<double>(k)) * root_rank_scale_;
    const double f = static_cast<double>(fanout_);
    const auto j = static_cast<std::int64_t>(std::floor(rank * f));
    return static_cast<std::size_t>(
        std::clamp<std::int64_t>(j, 0, static_cast<std::int64_t>(f) - 1));
}

std::optional<LookupResult> RmiIndex::lookup(Key k) const {
    const std::size_t j = route(k);
    const std::uint64_t pos = leaf_find(leaves_[j], k);
    if (pos == kNotFound) return std::nullopt;
    return LookupResult{static_cast<std::uint32_t>(j), pos};
}

InsertOutcome RmiIndex::insert(Key k) {
    return leaf_insert(leaves_[route(k)], k, pool_, cfg_, rebuilds_);
}

bool RmiIndex::erase(Key k) { return leaf_erase(leaves_[route(k)], k); }

IndexStats RmiIndex::stats() const {
    StatsAccum acc;
    acc.add_model(root_);
    for (const LeafSegment& leaf : leaves_) acc.add_leaf(leaf, 1);
    return acc.finish(rebuilds_);
}

// --------------------------------------------------------------- RmrtIndex

RmrtIndex::RmrtIndex(const Keys& d, std::uint64_t leaf_cap, std::size_t branch,
                     ModelPool* pool, IndexConfig cfg)
    : leaf_cap_(leaf_cap), branch_(branch), cfg_(cfg), pool_(pool) {
    if (d.empty()) throw std::invalid_argument("RmrtIndex: empty key set");
    if (leaf_cap_ == 0)
        throw std::invalid_argument("RmrtIndex: leaf capacity must be >= 1");
    if (branch_ < 2)
        throw std::invalid_argument("RmrtIndex: branching must be >= 2");
    root_ = build_node(Keys(d));
}

std::size_t RmrtIndex::route(const RmrtNode& node, Key k) const {
    if (!node.separators.empty()) {
        const auto it = std::upper_bound(node.separators.begin(),
                                         node.separators.end(), k);
        return static_cast<std::size_t>(it - node.separators.begin());
    }
    const double rank = node.router.predict_position(static_cast<double>(k)) *
                        node.router_rank_scale_;
    const double b = static_cast<double>(node.children.size());
    const auto j = static_cast<std::int64_t>(std::floor(rank * b));
    return static_cast<std::size_t>(
        std::clamp<std::int64_t>(j, 0, static_cast<std::int64_t>(b) - 1));
}

std::unique_ptr<RmrtNode> RmrtIndex::build_node(Keys keys) const {
    auto node = std::make_unique<RmrtNode>();
    const bool all_equal = !keys.empty() && keys.front() == keys.back();
    if (keys.size() <= leaf_cap_ || all_equal) {
        node->is_leaf = true;
        node->leaf = make_leaf(std::move(keys), pool_, cfg_);
        return node;
    }

    node->is_leaf = false;
    node->router = acquire_model(keys, pool_, cfg_);
    node->router_rank_scale_ = 1.0 / static_cast<double>(keys.size() - 1);
    node->children.resize(branch_);

    std::vector<Keys> parts(branch_);
    for (Key k : keys) parts[route(*node, k)].push_back(k);

    const auto degenerate = [&] {
        for (const Keys& p : parts)
            if (p.size() == keys.size()) return true;
        return false;
    };
    if (degenerate()) {
        // router failed to split; fall back to equal-frequency separators
        node->separators.resize(branch_ - 1);
        for (std::size_t i = 0; i + 1 < branch_; ++i)
            node->separators[i] = keys[(i + 1) * keys.size() / branch_];
        for (Keys& p : parts) p.clear();
        for (Key k : keys) parts[route(*node, k)].push_back(k);
        if (degenerate()) {
            // heavy duplicates: quantiles cannot split either, keep a leaf
            node->is_leaf = true;
            node->separators.clear();
            node->children.clear();
            node->leaf = make_leaf(std::move(keys), pool_, cfg_);
            return node;
        }
    }
    keys.clear();
    keys.shrink_to_fit();
    for (std::size_t i = 0; i < branch_; ++i)
        node->children[i] = build_node(std::move(parts[i]));
    return node;
}

const RmrtNode* RmrtIndex::descend(Key k) const {
    const RmrtNode* cur = root_.get();
    while (!cur->is_leaf) cur = cur->children[route(*cur, k)].get();
    return cur;
}

std::optional<LookupResult> RmrtIndex::lookup(Key k) const {
    const RmrtNode* leaf_node = descend(k);
    const std::uint64_t pos = leaf_find(leaf_node->leaf, k);
    if (pos == kNotFound) return std::nullopt;
    // leaf ids are not stable across subtree rebuilds; report 0
    return LookupResult{0, pos};
}

InsertOutcome RmrtIndex::insert(Key k) {
    RmrtNode* cur = root_.get();
    while (!cur->is_leaf) cur = cur->children[route(*cur, k)].get();
    const InsertOutcome out = leaf_insert(cur->leaf, k, pool_, cfg_, rebuilds_);
    if (out == InsertOutcome::inserted_with_rebuild &&
        cur->leaf.keys.size() > 2 * leaf_cap_) {
        // overgrown leaf: rebuild the subtree from its live keys
        Keys live;
        live.reserve(cur->leaf.keys.size());
        for (std::size_t i = 0; i < cur->leaf.keys.size(); ++i)
            if (!cur->leaf.dead[i]) live.push_back(cur->leaf.keys[i]);
        *cur = std::move(*build_node(std::move(live)));
    }
    return out;
}

bool RmrtIndex::erase(Key k) {
    RmrtNode* cur = root_.get();
    while (!cur->is_leaf) cur = cur->children[route(*cur, k)].get();
    return leaf_erase(cur->leaf, k);
}

namespace {

void collect_stats(const RmrtNode& node, std::size_t depth, StatsAccum& acc) {
    if (node.is_leaf) {
        acc.add_leaf(node.leaf, depth);
        return;
    }
    acc.add_model(node.router);
    for (const auto& child : node.children)
        collect_stats(*child, depth + 1, acc);
}

}  // namespace

IndexStats RmrtIndex::stats() const {
    StatsAccum acc;
    collect_stats(*root_, 0, acc);
    return acc.finish(rebuilds_);
}

// ------------------------------------------------------- BinarySearchIndex

std::optional<LookupResult> BinarySearchIndex::lookup(Key k) const {
    auto it = std::lower_bound(keys_.begin(), keys_.end(), k);
    for (; it != keys_.end() && *it == k; ++it) {
        const auto pos = static_cast<std::uint64_t>(it - keys_.begin());
        if (!dead_[pos]) return LookupResult{0, pos};
    }
    return std::nullopt;
}

InsertOutcome BinarySearchIndex::insert(Key k) {
    const auto it = std::upper_bound(keys_.begin(), keys_.end(), k);
    const auto pos = it - keys_.begin();
    keys_.insert(it, k);
    dead_.insert(dead_.begin() + pos, 0);
    return InsertOutcome::inserted;
}

bool BinarySearchIndex::erase(Key k) {
    const auto res = lookup(k);
    if (!res) return false;
    dead_[res->offset] = 1;
    return true;
}

IndexStats BinarySearchIndex::stats() const {
    IndexStats s;
    s.key_count = keys_.size();
    return s;
}

}  // namespace reidx
