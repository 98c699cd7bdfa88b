#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "reidx/pool.hpp"
#include "reidx/workload.hpp"

using namespace reidx;
namespace fs = std::filesystem;

namespace {

struct TempFile {
    fs::path path;
    explicit TempFile(const char* name)
        : path(fs::temp_directory_path() / name) {}
    ~TempFile() { std::error_code ec; fs::remove(path, ec); }
};

constexpr double kGenScale = 9223372036854775808.0;  // 2^63

}  // namespace

TEST_CASE("gen_keys") {
    SUBCASE("uniform output tracks the identity CDF") {
        const Keys d = gen_keys(DataKind::uniform, 1, 1000000, 3);
        REQUIRE(d.size() == 1000000);
        CHECK(std::is_sorted(d.begin(), d.end()));
        double worst = 0.0;
        const double n = static_cast<double>(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double x = static_cast<double>(d[i]) / kGenScale;
            worst = std::max(worst, std::abs(static_cast<double>(i + 1) / n - x));
        }
        CHECK(worst < 0.005);
    }
    SUBCASE("alpha 9 is heavily left-skewed") {
        const Keys d = gen_keys(DataKind::skew, 9, 100000, 5);
        const Histogram h = build_histogram(d, 10, {0.0, kGenScale});
        CHECK(h.bins[0] > 0.5);
    }
    SUBCASE("determinism and bounds") {
        const Keys a = gen_keys(DataKind::skew, 3, 1000, 7);
        const Keys b = gen_keys(DataKind::skew, 3, 1000, 7);
        CHECK(a == b);
        CHECK_THROWS_AS(gen_keys(DataKind::uniform, 1, 0, 1), std::invalid_argument);
    }
}

TEST_CASE("SOSD file round trips") {
    TempFile f("reidx_sosd_rt.bin");

    SUBCASE("single key") {
        sosd_write({42}, f.path);
        CHECK(sosd_read(f.path) == Keys{42});
    }
    SUBCASE("large file matches in-memory generation byte for byte") {
        const Keys d = gen_keys(DataKind::uniform, 1, 1000000, 11);
        sosd_write(d, f.path);
        CHECK(fs::file_size(f.path) == 8 + 8 * d.size());
        CHECK(sosd_read(f.path) == d);
        TempFile g("reidx_sosd_rt2.bin");
        sosd_write(d, g.path);
        std::ifstream a(f.path, std::ios::binary), b(g.path, std::ios::binary);
        const std::string ba((std::istreambuf_iterator<char>(a)), {});
        const std::string bb((std::istreambuf_iterator<char>(b)), {});
        CHECK(ba == bb);
    }
    SUBCASE("the header is a little-endian count") {
        sosd_write({1, 2, 3}, f.path);
        std::ifstream is(f.path, std::ios::binary);
        unsigned char hdr[8];
        is.read(reinterpret_cast<char*>(hdr), 8);
        CHECK(hdr[0] == 3);
        for (int i = 1; i < 8; ++i) CHECK(hdr[i] == 0);
    }
    SUBCASE("truncated payload is a truncation error") {
        sosd_write({1, 2, 3}, f.path);
        fs::resize_file(f.path, 8 + 8 * 2);
        CHECK_THROWS_AS(sosd_read(f.path), SosdTruncatedError);
    }
    SUBCASE("zero-count header with trailing bytes is a format error") {
        std::ofstream os(f.path, std::ios::binary | std::ios::trunc);
        const std::uint64_t zero = 0;
        os.write(reinterpret_cast<const char*>(&zero), 8);
        os.write("junk", 4);
        os.close();
        CHECK_THROWS_AS(sosd_read(f.path), SosdFormatError);
    }
    SUBCASE("unsorted keys are rejected") {
        std::ofstream os(f.path, std::ios::binary | std::ios::trunc);
        const std::uint64_t two = 2;
        const std::uint64_t keys[2] = {9, 4};
        os.write(reinterpret_cast<const char*>(&two), 8);
        os.write(reinterpret_cast<const char*>(keys), 16);
        os.close();
        CHECK_THROWS_AS(sosd_read(f.path), SosdUnsortedError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(sosd_read("/nonexistent/x.sosd"), SosdError);
    }
}

TEST_CASE("kind round trips") {
    for (const char* s : {"rmrt", "rmi-mr", "rmi", "bsearch"})
        CHECK(to_string(index_kind_from_string(s)) == s);
    for (const char* s : {"linear", "tinynet"})
        CHECK(to_string(model_kind_from_string(s)) == s);
    CHECK_THROWS_AS(index_kind_from_string("btree"), std::invalid_argument);
    CHECK_THROWS_AS(model_kind_from_string("resnet"), std::invalid_argument);
}

TEST_CASE("run_workload") {
    WorkloadSpec spec;
    spec.keys = gen_keys(DataKind::skew, 3, 50000, 13);
    spec.gen_kind = DataKind::skew;
    spec.alpha = 3;
    spec.lookups = 5000;
    spec.seed = 13;

    SUBCASE("binary-search baseline is correct and reports no reuse rate") {
        spec.index = IndexKind::bsearch;
        const MetricsReport rep = run_workload(spec);
        CHECK(rep.correct);
        CHECK(rep.found == rep.total);
        CHECK(!rep.reuse_rate_valid);
        CHECK(rep.to_json().find("reuse_rate") == std::string::npos);
    }
    SUBCASE("rmrt with a warm pool over pool-family data reuses fully") {
        TempFile pf("reidx_wl_pool.bin");
        ModelPool pool = pretrain_pool(0.8, ModelKind::linear, 100, 17);
        save_pool(pool, pf.path);
        WorkloadSpec fam = spec;
        fam.keys = synthesize_dataset(pool.entries()[7].histogram, 30000, 17);
        fam.pool_path = pf.path;
        fam.index = IndexKind::rmrt;
        fam.eps = 0.8;
        fam.leaf_cap = 50000;
        const MetricsReport rep = run_workload(fam);
        CHECK(rep.correct);
        CHECK(rep.reuse_rate_valid);
        CHECK(rep.reuse_rate == 1.0);
    }
    SUBCASE("absent-key lookups are verified too") {
        spec.index = IndexKind::rmi;
        spec.absent_ratio = 0.3;
        const MetricsReport rep = run_workload(spec);
        CHECK(rep.correct);
        CHECK(rep.expected_found < rep.total);
        CHECK(rep.found == rep.expected_found);
    }
    SUBCASE("inserts are applied and re-verified") {
        spec.index = IndexKind::rmrt;
        spec.leaf_cap = 2000;
        spec.insert_ratio = 5.0;
        const MetricsReport rep = run_workload(spec);
        CHECK(rep.correct);
        CHECK(rep.inserts == 2500);
        CHECK(rep.insert_ops_per_s > 0.0);
    }
    SUBCASE("non-timing fields are deterministic given the seed") {
        spec.index = IndexKind::rmrt;
        const MetricsReport a = run_workload(spec);
        const MetricsReport b = run_workload(spec);
        CHECK(a.found == b.found);
        CHECK(a.total == b.total);
        CHECK(a.reuse_rate == b.reuse_rate);
        CHECK(a.param_bytes == b.param_bytes);
        CHECK(a.mean_window == b.mean_window);
        CHECK(a.rebuild_count == b.rebuild_count);
    }
    SUBCASE("multi-thread throughput mode stays correct") {
        spec.index = IndexKind::rmi;
        spec.lookup_threads = 4;
        const MetricsReport rep = run_workload(spec);
        CHECK(rep.correct);
        CHECK(rep.found == rep.total);
    }
    SUBCASE("CSV rows match the header arity") {
        spec.index = IndexKind::bsearch;
        const MetricsReport rep = run_workload(spec);
        const auto count = [](const std::string& s) {
            return std::count(s.begin(), s.end(), ',');
        };
        CHECK(count(MetricsReport::csv_header()) == count(rep.to_csv_row()));
    }
}
