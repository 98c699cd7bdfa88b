#include <doctest.h>

#include <functional>
#include <random>
#include <set>

#include "reidx/dataset.hpp"
#include "reidx/index.hpp"

using namespace reidx;

namespace {

// Every live key at leaf position i must sit inside its predicted window.
void check_leaf_windows(const LeafSegment& leaf) {
    for (std::size_t i = 0; i < leaf.keys.size(); ++i) {
        if (leaf.dead[i]) continue;
        const double pred =
            leaf.model.predict_position(static_cast<double>(leaf.keys[i]));
        CHECK(static_cast<double>(i) >=
              std::floor(pred) + static_cast<double>(leaf.model.bounds.lower) - 1e-9);
        CHECK(static_cast<double>(i) <=
              std::ceil(pred) + static_cast<double>(leaf.model.bounds.upper) + 1e-9);
    }
}

void walk_leaves(const RmrtNode& node, std::size_t depth,
                 const std::function<void(const LeafSegment&, std::size_t)>& fn) {
    if (node.is_leaf) {
        fn(node.leaf, depth);
        return;
    }
    for (const auto& c : node.children) walk_leaves(*c, depth + 1, fn);
}

// Deterministic piecewise-uniform keys: `masses[i]` of the n keys evenly
// spaced inside [edges[i], edges[i+1]) of the unit interval, scaled to u64.
Keys piecewise_keys(const std::vector<double>& edges,
                    const std::vector<double>& masses, std::size_t n) {
    constexpr double kScale = 9007199254740992.0;  // 2^53
    Keys out;
    for (std::size_t b = 0; b + 1 <= masses.size(); ++b) {
        const auto cnt = static_cast<std::size_t>(masses[b] * static_cast<double>(n) + 0.5);
        for (std::size_t i = 0; i < cnt; ++i) {
            const double frac = (static_cast<double>(i) + 0.5) / static_cast<double>(cnt);
            out.push_back(static_cast<Key>(
                (edges[b] + frac * (edges[b + 1] - edges[b])) * kScale));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("insertion_budget") {
    CHECK(insertion_budget(1.0, 0.9, 900) == 100);
    CHECK(insertion_budget(0.9, 0.9, 1000) == 0);   // sim == eps
    CHECK(insertion_budget(0.5, 0.9, 1000) == 0);   // sim < eps clamps
    CHECK(insertion_budget(1.0, 0.5, 100) == 100);  // 0.5/0.5 * 100
    CHECK(insertion_budget(0.95, 0.9, 1000) == 52); // 0.05/0.95*1000 = 52.6
}

TEST_CASE("RmiIndex basics") {
    const Keys d = gen_keys(DataKind::uniform, 1, 10000, 3);
    IndexConfig cfg;
    cfg.eps = 0.8;
    cfg.reuse = false;

    SUBCASE("fanout 1 degenerates to a single leaf") {
        RmiIndex idx(d, 1, nullptr, cfg);
        CHECK(idx.leaves().size() == 1);
        CHECK(idx.leaves()[0].keys.size() == d.size());
        for (Key k : d) CHECK(idx.lookup(k).has_value());
    }
    SUBCASE("leaves partition the keys") {
        RmiIndex idx(d, 64, nullptr, cfg);
        std::size_t total = 0;
        Key prev_max = 0;
        bool first = true;
        for (const LeafSegment& leaf : idx.leaves()) {
            total += leaf.keys.size();
            if (leaf.keys.empty()) continue;
            CHECK(std::is_sorted(leaf.keys.begin(), leaf.keys.end()));
            if (!first) CHECK(leaf.keys.front() >= prev_max);
            prev_max = leaf.keys.back();
            first = false;
            check_leaf_windows(leaf);
        }
        CHECK(total == d.size());
    }
    SUBCASE("warm pool build answers every key") {
        ModelPool pool = pretrain_pool(0.8, ModelKind::linear, 100, 5);
        IndexConfig rcfg;
        rcfg.eps = 0.8;
        const Keys big = gen_keys(DataKind::uniform, 1, 100000, 7);
        RmiIndex idx(big, 64, &pool, rcfg);
        for (Key k : big) {
            const auto res = idx.lookup(k);
            REQUIRE(res.has_value());
            CHECK(idx.leaves()[res->leaf].keys[res->offset] == k);
        }
        CHECK(!idx.lookup(big.front() - 1).has_value());
    }
    SUBCASE("empty input throws") {
        CHECK_THROWS_AS(RmiIndex({}, 4, nullptr, cfg), std::invalid_argument);
        CHECK_THROWS_AS(RmiIndex(d, 0, nullptr, cfg), std::invalid_argument);
    }
}

TEST_CASE("two-layer build with a stub pool walks the reuse narrative") {
    // Lower half: decreasing density on [0, 0.45); upper half: uniform on
    // [0.5, 1). The full set resembles entry A; the upper half resembles
    // entry B; the lower half (over its own span) resembles neither.
    const std::vector<double> edges = {0.0, 0.09, 0.18, 0.27, 0.36, 0.45, 0.5, 1.0};
    const std::vector<double> masses = {0.15, 0.12, 0.10, 0.08, 0.05, 0.0, 0.5};
    const Keys d = piecewise_keys(edges, masses, 2000);

    ModelPool pool(ModelKind::linear, 0.8, 10, d.size());
    {
        PoolEntry a;  // trained on (a copy of) the full dataset
        a.model = fit_linear(d);
        AdaptedModel wrap = train_model(d, ModelKind::linear);
        a.bounds = wrap.bounds;
        a.max_abs_err = max_abs_error(a.bounds);
        a.histogram = build_histogram(d, 10);
        a.histogram.span = {0.0, 1.0};
        pool.enqueue(std::move(a));

        Keys upper(d.begin() + 1000, d.end());
        PoolEntry b;
        b.model = fit_linear(upper);
        AdaptedModel uw = train_model(upper, ModelKind::linear);
        // rescale to the pool's source-size convention, rounding outward
        const double s = static_cast<double>(d.size() - 1) /
                         static_cast<double>(upper.size() - 1);
        b.bounds = {static_cast<std::int64_t>(
                        std::floor(static_cast<double>(uw.bounds.lower) * s)),
                    static_cast<std::int64_t>(
                        std::ceil(static_cast<double>(uw.bounds.upper) * s))};
        b.max_abs_err = max_abs_error(b.bounds);
        b.histogram = build_histogram(upper, 10);
        b.histogram.span = {0.0, 1.0};
        pool.enqueue(std::move(b));
    }
    const std::size_t pool_before = pool.size();

    IndexConfig cfg;
    cfg.eps = 0.8;
    reset_training_counters();
    RmiIndex idx(d, 2, &pool, cfg);

    CHECK(idx.root().provenance.source == Provenance::Source::reused);
    REQUIRE(idx.leaves().size() == 2);
    const auto src0 = idx.leaves()[0].model.provenance.source;
    const auto src1 = idx.leaves()[1].model.provenance.source;
    CHECK(src0 == Provenance::Source::trained);
    CHECK(src1 == Provenance::Source::reused);
    CHECK(pool.size() == pool_before + 1);  // the trained child was enqueued
    for (Key k : d) CHECK(idx.lookup(k).has_value());
}

TEST_CASE("RmrtIndex structure") {
    SUBCASE("12 keys with capacity 4 and branching 2 split 4/8 then 4/4") {
        const Keys d = {0, 1, 2, 3, 60, 61, 62, 63, 100, 101, 102, 103};
        IndexConfig cfg;
        cfg.reuse = false;
        RmrtIndex idx(d, 4, 2, nullptr, cfg);
        const RmrtNode& root = idx.root();
        REQUIRE(!root.is_leaf);
        REQUIRE(root.children.size() == 2);
        CHECK(root.children[0]->is_leaf);
        CHECK(root.children[0]->leaf.keys.size() == 4);
        REQUIRE(!root.children[1]->is_leaf);
        CHECK(root.children[1]->children[0]->is_leaf);
        CHECK(root.children[1]->children[0]->leaf.keys.size() == 4);
        CHECK(root.children[1]->children[1]->is_leaf);
        CHECK(root.children[1]->children[1]->leaf.keys.size() == 4);
        const IndexStats st = idx.stats();
        CHECK(st.max_depth == 2);
        for (Key k : d) CHECK(idx.lookup(k).has_value());
    }
    SUBCASE("small inputs build a single leaf") {
        RmrtIndex idx({5, 6, 7}, 4, 2, nullptr, {});
        CHECK(idx.root().is_leaf);
        CHECK(idx.stats().max_depth == 0);
    }
    SUBCASE("all-equal keys force a leaf regardless of capacity") {
        const Keys same(100, 42);
        RmrtIndex idx(same, 4, 2, nullptr, {});
        CHECK(idx.root().is_leaf);
        CHECK(idx.lookup(42).has_value());
        CHECK(!idx.lookup(41).has_value());
    }
    SUBCASE("leaf sizes respect the capacity at build time") {
        const Keys d = gen_keys(DataKind::skew, 3, 20000, 11);
        RmrtIndex idx(d, 500, 8, nullptr, {});
        std::size_t total = 0;
        walk_leaves(idx.root(), 0, [&](const LeafSegment& leaf, std::size_t) {
            CHECK(leaf.keys.size() <= 500);
            check_leaf_windows(leaf);
            total += leaf.keys.size();
        });
        CHECK(total == d.size());
    }
    SUBCASE("dense regions grow deeper subtrees than sparse regions") {
        const Keys d = gen_keys(DataKind::skew, 9, 100000, 13);
        RmrtIndex idx(d, 1000, 4, nullptr, {});
        std::size_t dense_depth = 0, sparse_depth = 0;
        const double cut = static_cast<double>(d[d.size() / 2]);
        walk_leaves(idx.root(), 0, [&](const LeafSegment& leaf, std::size_t depth) {
            if (leaf.keys.empty()) return;
            if (static_cast<double>(leaf.keys.back()) <= cut)
                dense_depth = std::max(dense_depth, depth);
            if (static_cast<double>(leaf.keys.front()) > cut)
                sparse_depth = std::max(sparse_depth, depth);
        });
        CHECK(dense_depth > sparse_depth);
    }
    SUBCASE("invalid parameters throw") {
        CHECK_THROWS_AS(RmrtIndex({}, 4, 2, nullptr, {}), std::invalid_argument);
        CHECK_THROWS_AS(RmrtIndex({1}, 0, 2, nullptr, {}), std::invalid_argument);
        CHECK_THROWS_AS(RmrtIndex({1}, 4, 1, nullptr, {}), std::invalid_argument);
    }
}

TEST_CASE("lookup against the sorted-array oracle") {
    const Keys d = gen_keys(DataKind::skew, 3, 30000, 17);
    ModelPool pool = pretrain_pool(0.8, ModelKind::linear, 100, 17);
    IndexConfig cfg;
    cfg.eps = 0.8;
    RmrtIndex rmrt(d, 1000, 8, &pool, cfg);
    RmiIndex rmi(d, 32, &pool, cfg);
    BinarySearchIndex bs(d);

    std::mt19937_64 rng(19);
    std::uniform_int_distribution<Key> any;
    for (int t = 0; t < 20000; ++t) {
        const Key k = t % 2 == 0 ? d[static_cast<std::size_t>(any(rng) % d.size())]
                                 : any(rng);
        const bool expect = std::binary_search(d.begin(), d.end(), k);
        CHECK(rmrt.lookup(k).has_value() == expect);
        CHECK(rmi.lookup(k).has_value() == expect);
        CHECK(bs.lookup(k).has_value() == expect);
    }
    CHECK(!rmrt.lookup(d.front() - 1).has_value());
}

TEST_CASE("insert") {
    SUBCASE("budget boundary: the (budget+1)-th insert rebuilds once") {
        const Keys d = gen_keys(DataKind::uniform, 1, 900, 23);
        IndexConfig cfg;
        cfg.eps = 0.9;
        cfg.reuse = false;  // trained leaf: sim = 1
        RmiIndex idx(d, 1, nullptr, cfg);
        REQUIRE(idx.leaves()[0].insert_budget == 100);
        const Key probe = d[450];
        for (int i = 0; i < 100; ++i)
            CHECK(idx.insert(probe) == InsertOutcome::inserted);
        CHECK(idx.stats().rebuild_count == 0);
        check_leaf_windows(idx.leaves()[0]);
        CHECK(idx.insert(probe) == InsertOutcome::inserted_with_rebuild);
        CHECK(idx.stats().rebuild_count == 1);
        CHECK(idx.leaves()[0].insert_count == 0);  // counter reset
        check_leaf_windows(idx.leaves()[0]);
        for (Key k : d) CHECK(idx.lookup(k).has_value());
    }
    SUBCASE("zero budget rebuilds on the first insert") {
        CHECK(insertion_budget(0.9, 0.9, 12345) == 0);
        const Keys d = gen_keys(DataKind::uniform, 1, 100, 29);
        IndexConfig cfg;
        cfg.eps = 1.0;  // sim(trained) == eps, so the budget is zero
        cfg.reuse = false;
        RmiIndex idx(d, 1, nullptr, cfg);
        REQUIRE(idx.leaves()[0].insert_budget == 0);
        CHECK(idx.insert(d[50]) == InsertOutcome::inserted_with_rebuild);
        CHECK(idx.stats().rebuild_count == 1);
        for (Key k : d) CHECK(idx.lookup(k).has_value());
    }
    SUBCASE("interleaved inserts and lookups stay correct") {
        const Keys d = gen_keys(DataKind::skew, 3, 20000, 31);
        ModelPool pool = pretrain_pool(0.8, ModelKind::linear, 100, 31);
        IndexConfig cfg;
        cfg.eps = 0.8;
        RmrtIndex idx(d, 800, 8, &pool, cfg);
        std::multiset<Key> oracle_set(d.begin(), d.end());
        const Keys extra = gen_keys(DataKind::skew, 3, 5000, 97);
        std::mt19937_64 rng(33);
        for (Key k : extra) {
            idx.insert(k);
            oracle_set.insert(k);
            CHECK(idx.lookup(k).has_value());
            const Key probe = d[static_cast<std::size_t>(rng() % d.size())];
            CHECK(idx.lookup(probe).has_value() == (oracle_set.count(probe) > 0));
        }
        // leaves stay within twice the capacity at rest
        walk_leaves(idx.root(), 0, [&](const LeafSegment& leaf, std::size_t) {
            CHECK(leaf.keys.size() <= 1600);
            check_leaf_windows(leaf);
        });
    }
}

TEST_CASE("delete semantics") {
    const Keys d = {10, 20, 30, 40, 50};
    RmrtIndex idx(d, 10, 2, nullptr, {});
    CHECK(idx.erase(30));
    CHECK(!idx.lookup(30).has_value());
    CHECK(idx.lookup(20).has_value());
    CHECK(idx.lookup(40).has_value());
    CHECK(!idx.erase(30));   // already gone
    CHECK(!idx.erase(999));  // never present
    idx.insert(30);
    CHECK(idx.lookup(30).has_value());  // re-inserted key is live again

    SUBCASE("duplicate keys tombstone one occurrence at a time") {
        RmiIndex dup({5, 5, 5, 8}, 1, nullptr, {});
        CHECK(dup.erase(5));
        CHECK(dup.lookup(5).has_value());
        CHECK(dup.erase(5));
        CHECK(dup.erase(5));
        CHECK(!dup.lookup(5).has_value());
        CHECK(dup.lookup(8).has_value());
    }
}

TEST_CASE("stats") {
    const Keys d = gen_keys(DataKind::uniform, 1, 5000, 41);

    SUBCASE("fresh index has no rebuilds") {
        RmrtIndex idx(d, 500, 4, nullptr, {});
        CHECK(idx.stats().rebuild_count == 0);
        CHECK(idx.stats().key_count == d.size());
    }
    SUBCASE("empty-pool build reports all models trained") {
        ModelPool pool(ModelKind::linear, 0.99999, 12, 100);
        IndexConfig cfg;
        cfg.eps = 0.99999;  // nothing can qualify for reuse
        RmrtIndex idx(d, 500, 4, &pool, cfg);
        const IndexStats st = idx.stats();
        CHECK(st.trained_count == st.model_count);
        CHECK(st.reuse_rate == 0.0);
    }
    SUBCASE("warm pool over pool-family data reuses everything") {
        ModelPool pool = pretrain_pool(0.8, ModelKind::linear, 100, 43);
        const Keys fam = synthesize_dataset(pool.entries()[100].histogram, 20000, 43);
        IndexConfig cfg;
        cfg.eps = 0.8;
        RmrtIndex idx(fam, 30000, 4, &pool, cfg);
        CHECK(idx.stats().reuse_rate == 1.0);
    }
}

TEST_CASE("determinism: identical inputs give identical structures") {
    const Keys d = gen_keys(DataKind::skew, 3, 30000, 47);
    const auto build = [&] {
        ModelPool pool = pretrain_pool(0.8, ModelKind::linear, 100, 47);
        IndexConfig cfg;
        cfg.eps = 0.8;
        return std::make_unique<RmrtIndex>(d, 1000, 8, &pool, cfg);
    };
    const auto a = build();
    const auto b = build();
    std::vector<std::pair<std::size_t, std::size_t>> la, lb;
    walk_leaves(a->root(), 0, [&](const LeafSegment& leaf, std::size_t depth) {
        la.emplace_back(depth, leaf.keys.size());
    });
    walk_leaves(b->root(), 0, [&](const LeafSegment& leaf, std::size_t depth) {
        lb.emplace_back(depth, leaf.keys.size());
    });
    CHECK(la == lb);
    const IndexStats sa = a->stats(), sb = b->stats();
    CHECK(sa.model_count == sb.model_count);
    CHECK(sa.reused_count == sb.reused_count);
    CHECK(sa.param_bytes == sb.param_bytes);
    CHECK(sa.mean_window == sb.mean_window);
}
