#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "reidx/dataset.hpp"
#include "reidx/index.hpp"

namespace reidx {

enum class IndexKind : std::uint8_t { rmrt = 0, rmi_mr = 1, rmi = 2, bsearch = 3 };

std::string to_string(IndexKind k);
std::string to_string(ModelKind k);
IndexKind index_kind_from_string(const std::string& s);
ModelKind model_kind_from_string(const std::string& s);

struct WorkloadSpec {
    std::filesystem::path data_path;  // SOSD file; ignored when keys set
    Keys keys;                        // optional in-memory dataset
    std::filesystem::path pool_path;  // optional warm pool
    IndexKind index = IndexKind::rmrt;
    ModelKind model = ModelKind::linear;
    double eps = 0.9;
    std::size_t fanout = 256;       // RMI fanout / RMRT branching
    std::uint64_t leaf_cap = 10000; // RMRT leaf capacity N
    std::uint64_t lookups = 100000;
    double insert_ratio = 0.0;      // percent of n
    double absent_ratio = 0.0;      // fraction of lookups on absent keys
    DataKind gen_kind = DataKind::uniform;  // family for inserted keys
    unsigned alpha = 1;
    std::uint64_t seed = 42;
    unsigned lookup_threads = 1;    // >1: throughput mode, no percentiles
};

struct MetricsReport {
    std::string index_kind;
    std::string model_kind;
    double eps = 0.0;
    std::uint64_t key_count = 0;
    double build_ms = 0.0;
    double lookup_mean_ns = 0.0;
    double lookup_median_ns = 0.0;
    double lookup_p99_ns = 0.0;
    std::uint64_t lookups = 0;
    std::uint64_t inserts = 0;
    double insert_ops_per_s = 0.0;
    std::uint64_t rebuild_count = 0;
    bool reuse_rate_valid = false;  // absent for the binary-search baseline
    double reuse_rate = 0.0;
    std::size_t param_bytes = 0;
    double mean_window = 0.0;
    std::uint64_t found = 0;
    std::uint64_t expected_found = 0;
    std::uint64_t total = 0;
    bool correct = true;
    std::vector<Key> mismatch_sample;  // up to 10 offending keys

    std::string to_json() const;
    static std::string csv_header();
    std::string to_csv_row() const;
};

/// Builds the index (timed), runs verified lookups (timed individually,
/// 10% warmup excluded), applies inserts drawn from the same generator
/// family (timed in bulk), and re-verifies.
MetricsReport run_workload(const WorkloadSpec& spec);

}  // namespace reidx
