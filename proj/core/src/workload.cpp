#include "reidx/workload.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace reidx {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// One-of wrapper so the workload loop is index-kind agnostic.
struct AnyIndex {
    std::unique_ptr<RmiIndex> rmi;
    std::unique_ptr<RmrtIndex> rmrt;
    std::unique_ptr<BinarySearchIndex> bs;

    bool lookup(Key k) const {
        if (rmi) return rmi->lookup(k).has_value();
        if (rmrt) return rmrt->lookup(k).has_value();
        return bs->lookup(k).has_value();
    }
    void insert(Key k) {
        if (rmi)
            rmi->insert(k);
        else if (rmrt)
            rmrt->insert(k);
        else
            bs->insert(k);
    }
    IndexStats stats() const {
        if (rmi) return rmi->stats();
        if (rmrt) return rmrt->stats();
        return bs->stats();
    }
};

bool oracle_present(const Keys& sorted, Key k) {
    return std::binary_search(sorted.begin(), sorted.end(), k);
}

}  // namespace

std::string to_string(IndexKind k) {
    switch (k) {
        case IndexKind::rmrt: return "rmrt";
        case IndexKind::rmi_mr: return "rmi-mr";
        case IndexKind::rmi: return "rmi";
        case IndexKind::bsearch: return "bsearch";
    }
    return "?";
}

std::string to_string(ModelKind k) {
    return k == ModelKind::linear ? "linear" : "tinynet";
}

IndexKind index_kind_from_string(const std::string& s) {
    if (s == "rmrt") return IndexKind::rmrt;
    if (s == "rmi-mr") return IndexKind::rmi_mr;
    if (s == "rmi") return IndexKind::rmi;
    if (s == "bsearch" || s == "binary-search") return IndexKind::bsearch;
    throw std::invalid_argument("unknown index kind: " + s);
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "linear") return ModelKind::linear;
    if (s == "tinynet") return ModelKind::tinynet;
    throw std::invalid_argument("unknown model kind: " + s);
}

std::string MetricsReport::to_json() const {
    nlohmann::json j{
        {"index", index_kind},
        {"model", model_kind},
        {"eps", eps},
        {"keys", key_count},
        {"build_ms", build_ms},
        {"lookup_mean_ns", lookup_mean_ns},
        {"lookup_median_ns", lookup_median_ns},
        {"lookup_p99_ns", lookup_p99_ns},
        {"lookups", lookups},
        {"inserts", inserts},
        {"insert_ops_per_s", insert_ops_per_s},
        {"rebuilds", rebuild_count},
        {"param_bytes", param_bytes},
        {"mean_window", mean_window},
        {"found", found},
        {"expected_found", expected_found},
        {"total", total},
        {"correct", correct},
    };
    if (reuse_rate_valid) j["reuse_rate"] = reuse_rate;
    if (!mismatch_sample.empty()) j["mismatch_sample"] = mismatch_sample;
    return j.dump();
}

std::string MetricsReport::csv_header() {
    return "index,model,eps,keys,build_ms,lookup_mean_ns,lookup_median_ns,"
           "lookup_p99_ns,lookups,inserts,insert_ops_per_s,rebuilds,"
           "reuse_rate,param_bytes,mean_window,found,total,correct";
}

std::string MetricsReport::to_csv_row() const {
    std::ostringstream os;
    os << index_kind << ',' << model_kind << ',' << eps << ',' << key_count
       << ',' << build_ms << ',' << lookup_mean_ns << ',' << lookup_median_ns
       << ',' << lookup_p99_ns << ',' << lookups << ',' << inserts << ','
       << insert_ops_per_s << ',' << rebuild_count << ','
       << (reuse_rate_valid ? std::to_string(reuse_rate) : std::string()) << ','
       << param_bytes << ',' << mean_window << ',' << found << ',' << total
       << ',' << (correct ? 1 : 0);
    return os.str();
}

MetricsReport run_workload(const WorkloadSpec& spec) {
    const Keys data = spec.keys.empty() ? sosd_read(spec.data_path) : spec.keys;
    if (data.empty()) throw std::invalid_argument("run_workload: empty dataset");

    ModelPool pool;
    bool have_pool = false;
    if (!spec.pool_path.empty() && spec.index != IndexKind::rmi &&
        spec.index != IndexKind::bsearch) {
        pool = load_pool(spec.pool_path);
        have_pool = true;
    }
    if (!have_pool) pool = ModelPool(spec.model, spec.eps, default_bin_count(spec.eps), 100);

    IndexConfig cfg;
    cfg.eps = spec.eps;
    cfg.model = spec.model;
    cfg.reuse = spec.index == IndexKind::rmrt || spec.index == IndexKind::rmi_mr;

    MetricsReport rep;
    rep.index_kind = to_string(spec.index);
    rep.model_kind = to_string(spec.model);
    rep.eps = spec.eps;
    rep.key_count = data.size();

    AnyIndex idx;
    const auto t_build = Clock::now();
    switch (spec.index) {
        case IndexKind::rmrt:
            idx.rmrt = std::make_unique<RmrtIndex>(data, spec.leaf_cap,
                                                   spec.fanout, &pool, cfg);
            break;
        case IndexKind::rmi_mr:
        case IndexKind::rmi:
            idx.rmi = std::make_unique<RmiIndex>(data, spec.fanout, &pool, cfg);
            break;
        case IndexKind::bsearch:
            idx.bs = std::make_unique<BinarySearchIndex>(data);
            break;
    }
    rep.build_ms = ms_since(t_build);

    // lookup key sample: present keys plus an optional absent fraction
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    std::uniform_int_distribution<Key> any_key;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<std::pair<Key, bool>> queries;
    queries.reserve(spec.lookups);
    for (std::uint64_t i = 0; i < spec.lookups; ++i) {
        if (spec.absent_ratio > 0.0 && coin(rng) < spec.absent_ratio) {
            Key k = any_key(rng);
            while (oracle_present(data, k)) k = any_key(rng);
            queries.emplace_back(k, false);
        } else {
            queries.emplace_back(data[pick(rng)], true);
        }
    }

    const std::size_t warmup = queries.size() / 10;
    for (std::size_t i = 0; i < warmup; ++i) {
        volatile bool sink = idx.lookup(queries[i].first);
        (void)sink;
    }

    std::vector<double> lat_ns;
    rep.total = queries.size();
    if (spec.lookup_threads <= 1) {
        lat_ns.reserve(queries.size());
        for (const auto& [k, expected] : queries) {
            const auto t0 = Clock::now();
            const bool got = idx.lookup(k);
            lat_ns.push_back(
                std::chrono::duration<double, std::nano>(Clock::now() - t0)
                    .count());
            if (expected) ++rep.expected_found;
            if (got) ++rep.found;
            if (got != expected && rep.mismatch_sample.size() < 10)
                rep.mismatch_sample.push_back(k);
        }
    } else {
        // throughput mode: immutable index, wall time across threads
        std::vector<std::uint64_t> founds(spec.lookup_threads, 0);
        std::vector<std::uint64_t> mismatches(spec.lookup_threads, 0);
        const auto t0 = Clock::now();
        std::vector<std::thread> workers;
        for (unsigned t = 0; t < spec.lookup_threads; ++t) {
            workers.emplace_back([&, t] {
                for (std::size_t i = t; i < queries.size();
                     i += spec.lookup_threads) {
                    const bool got = idx.lookup(queries[i].first);
                    if (got) ++founds[t];
                    if (got != queries[i].second) ++mismatches[t];
                }
            });
        }
        for (auto& w : workers) w.join();
        const double total_ns =
            std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
        rep.lookup_mean_ns = total_ns / static_cast<double>(queries.size());
        for (const auto& [k, expected] : queries)
            if (expected) ++rep.expected_found;
        std::uint64_t bad = 0;
        for (unsigned t = 0; t < spec.lookup_threads; ++t) {
            rep.found += founds[t];
            bad += mismatches[t];
        }
        if (bad > 0) rep.correct = false;
    }
    if (!lat_ns.empty()) {
        double sum = 0.0;
        for (double v : lat_ns) sum += v;
        rep.lookup_mean_ns = sum / static_cast<double>(lat_ns.size());
        std::sort(lat_ns.begin(), lat_ns.end());
        rep.lookup_median_ns = lat_ns[lat_ns.size() / 2];
        rep.lookup_p99_ns = lat_ns[std::min(lat_ns.size() - 1,
                                            lat_ns.size() * 99 / 100)];
    }
    rep.lookups = queries.size();
    if (!rep.mismatch_sample.empty()) rep.correct = false;

    // inserts drawn from the build dataset's generator family, fresh seed
    const auto insert_count = static_cast<std::uint64_t>(
        std::floor(spec.insert_ratio / 100.0 * static_cast<double>(data.size())));
    if (insert_count > 0) {
        const Keys extra =
            gen_keys(spec.gen_kind, spec.alpha, insert_count, spec.seed ^ 0x5eedULL);
        const auto t0 = Clock::now();
        for (Key k : extra) idx.insert(k);
        const double secs =
            std::chrono::duration<double>(Clock::now() - t0).count();
        rep.inserts = insert_count;
        rep.insert_ops_per_s =
            secs > 0.0 ? static_cast<double>(insert_count) / secs : 0.0;
        for (Key k : extra) {
            if (idx.lookup(k)) continue;
            rep.correct = false;
            if (rep.mismatch_sample.size() < 10) rep.mismatch_sample.push_back(k);
        }
        // original keys must survive the inserts
        for (std::size_t i = 0; i < std::min<std::size_t>(data.size(), 10000); ++i) {
            const Key k = data[pick(rng)];
            if (idx.lookup(k)) continue;
            rep.correct = false;
            if (rep.mismatch_sample.size() < 10) rep.mismatch_sample.push_back(k);
        }
    }

    const IndexStats st = idx.stats();
    rep.rebuild_count = st.rebuild_count;
    rep.param_bytes = st.param_bytes;
    rep.mean_window = st.mean_window;
    if (spec.index != IndexKind::bsearch) {
        rep.reuse_rate_valid = true;
        rep.reuse_rate = st.reuse_rate;
    }
    return rep;
}

}  // namespace reidx
