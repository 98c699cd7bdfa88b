// Benchmark and utility CLI for the reidx learned-index library.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "reidx/pool.hpp"
#include "reidx/workload.hpp"

namespace {

using nlohmann::json;

int exit_usage(const std::string& msg) {
    std::cerr << "error: " << msg << "\n";
    return 1;
}

reidx::WorkloadSpec spec_from_json(const json& j) {
    reidx::WorkloadSpec s;
    if (j.contains("data")) s.data_path = j.at("data").get<std::string>();
    if (j.contains("pool")) s.pool_path = j.at("pool").get<std::string>();
    if (j.contains("index"))
        s.index = reidx::index_kind_from_string(j.at("index").get<std::string>());
    if (j.contains("model"))
        s.model = reidx::model_kind_from_string(j.at("model").get<std::string>());
    if (j.contains("eps")) s.eps = j.at("eps").get<double>();
    if (j.contains("fanout")) s.fanout = j.at("fanout").get<std::size_t>();
    if (j.contains("leaf_cap")) s.leaf_cap = j.at("leaf_cap").get<std::uint64_t>();
    if (j.contains("lookups")) s.lookups = j.at("lookups").get<std::uint64_t>();
    if (j.contains("insert_ratio")) s.insert_ratio = j.at("insert_ratio").get<double>();
    if (j.contains("absent_ratio")) s.absent_ratio = j.at("absent_ratio").get<double>();
    if (j.contains("alpha")) {
        s.alpha = j.at("alpha").get<unsigned>();
        s.gen_kind = s.alpha > 1 ? reidx::DataKind::skew : reidx::DataKind::uniform;
    }
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) s.lookup_threads = j.at("threads").get<unsigned>();
    return s;
}

json pool_summary(const reidx::ModelPool& pool) {
    double min_err = 0.0, max_err = 0.0;
    if (!pool.empty()) {
        min_err = pool.entries().front().max_abs_err;
        max_err = pool.entries().back().max_abs_err;
    }
    return json{{"model", reidx::to_string(pool.kind())},
                {"eps", pool.eps()},
                {"m", pool.bin_count()},
                {"ns", pool.source_size()},
                {"entries", pool.size()},
                {"min_max_abs_err", min_err},
                {"max_max_abs_err", max_err}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reidx: learned indexes with pre-trained model reuse"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a sorted key file");
    std::string gen_kind = "uniform";
    unsigned alpha = 1;
    std::uint64_t n = 1000000, seed = 42;
    std::string out_path;
    gen->add_option("--kind", gen_kind, "uniform|skew")
        ->check(CLI::IsMember({"uniform", "skew"}));
    gen->add_option("--alpha", alpha, "skew exponent (odd, >= 1)");
    gen->add_option("--n", n, "key count")->required();
    gen->add_option("--seed", seed, "random seed");
    gen->add_option("--out", out_path, "output SOSD file")->required();

    // gen-pool
    auto* gpool = app.add_subcommand("gen-pool", "Pre-train a model pool");
    double eps = 0.9;
    std::size_t m = 0;
    std::uint64_t ns = 100;
    std::string model = "linear", pool_out;
    gpool->add_option("--eps", eps, "model reuse threshold")->required();
    gpool->add_option("--m", m, "histogram bins (default: derived from eps)");
    gpool->add_option("--ns", ns, "synthetic dataset size");
    gpool->add_option("--model", model, "linear|tinynet")
        ->check(CLI::IsMember({"linear", "tinynet"}));
    gpool->add_option("--seed", seed, "random seed");
    gpool->add_option("--out", pool_out, "output pool file")->required();

    // build
    auto* build = app.add_subcommand("build", "Build an index and print stats");
    std::string index_kind = "rmrt", data_path, pool_path;
    std::size_t fanout = 256;
    std::uint64_t leaf_cap = 10000;
    build->add_option("--index", index_kind, "rmrt|rmi-mr|rmi|bsearch")->required();
    build->add_option("--data", data_path, "SOSD key file")->required();
    build->add_option("--pool", pool_path, "warm pool file");
    build->add_option("--eps", eps, "model reuse threshold");
    build->add_option("--model", model, "linear|tinynet");
    build->add_option("--fanout", fanout, "RMI fanout / RMRT branching");
    build->add_option("--leaf-cap", leaf_cap, "RMRT leaf capacity N");

    // bench
    auto* bench = app.add_subcommand("bench", "Run a measured workload");
    std::string spec_path, csv_path;
    std::uint64_t lookups = 100000;
    double insert_ratio = 0.0, absent_ratio = 0.0;
    unsigned threads = 1;
    bool as_json = false;
    bench->add_option("--spec", spec_path, "JSON workload spec file");
    bench->add_option("--index", index_kind, "rmrt|rmi-mr|rmi|bsearch");
    bench->add_option("--data", data_path, "SOSD key file");
    bench->add_option("--pool", pool_path, "warm pool file");
    bench->add_option("--eps", eps, "model reuse threshold");
    bench->add_option("--model", model, "linear|tinynet");
    bench->add_option("--fanout", fanout, "RMI fanout / RMRT branching");
    bench->add_option("--leaf-cap", leaf_cap, "RMRT leaf capacity N");
    bench->add_option("--lookups", lookups, "number of lookups");
    bench->add_option("--insert-ratio", insert_ratio, "inserts as % of n");
    bench->add_option("--absent-ratio", absent_ratio, "absent-key lookup fraction");
    bench->add_option("--alpha", alpha, "generator family for inserted keys");
    bench->add_option("--seed", seed, "random seed");
    bench->add_option("--threads", threads, "lookup threads (throughput mode)");
    bench->add_flag("--json", as_json, "print the report as JSON (default)");
    bench->add_option("--csv", csv_path, "append a CSV row to this file");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Describe a pool or an index");
    std::string ipool, ispec;
    inspect->add_option("--pool", ipool, "pool file to describe");
    inspect->add_option("--index", ispec, "JSON build spec: build and describe");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto kind = gen_kind == "skew" ? reidx::DataKind::skew
                                                 : reidx::DataKind::uniform;
            reidx::sosd_write(reidx::gen_keys(kind, alpha, n, seed), out_path);
            std::cout << json{{"written", out_path}, {"n", n}}.dump() << "\n";
            return 0;
        }
        if (*gpool) {
            const auto pool = reidx::pretrain_pool(
                eps, reidx::model_kind_from_string(model), ns, seed, m);
            reidx::save_pool(pool, pool_out);
            std::cout << json{{"written", pool_out}, {"entries", pool.size()}}.dump()
                      << "\n";
            return 0;
        }
        if (*build || *bench || *inspect) {
            reidx::WorkloadSpec spec;
            if (*inspect && !ipool.empty()) {
                std::cout << pool_summary(reidx::load_pool(ipool)).dump(2) << "\n";
                return 0;
            }
            if ((*bench && !spec_path.empty()) || (*inspect && !ispec.empty())) {
                std::ifstream is(*bench ? spec_path : ispec);
                if (!is) return exit_usage("cannot open spec file");
                json j;
                is >> j;
                spec = spec_from_json(j);
            } else {
                if (data_path.empty()) return exit_usage("--data is required");
                spec.data_path = data_path;
                spec.pool_path = pool_path;
                spec.index = reidx::index_kind_from_string(index_kind);
                spec.model = reidx::model_kind_from_string(model);
                spec.eps = eps;
                spec.fanout = fanout;
                spec.leaf_cap = leaf_cap;
                spec.seed = seed;
                spec.alpha = alpha;
                spec.gen_kind = alpha > 1 ? reidx::DataKind::skew
                                          : reidx::DataKind::uniform;
            }
            if (*build || *inspect) {
                spec.lookups = 0;
                spec.insert_ratio = 0.0;
            } else {
                spec.lookups = lookups;
                spec.insert_ratio = insert_ratio;
                spec.absent_ratio = absent_ratio;
                spec.lookup_threads = threads;
            }
            const reidx::MetricsReport rep = reidx::run_workload(spec);
            std::cout << rep.to_json() << "\n";
            if (*bench && !csv_path.empty()) {
                const bool fresh = !std::filesystem::exists(csv_path);
                std::ofstream os(csv_path, std::ios::app);
                if (fresh) os << reidx::MetricsReport::csv_header() << "\n";
                os << rep.to_csv_row() << "\n";
            }
            if (!rep.correct) {
                std::cerr << "correctness failure; sample keys: ";
                for (auto k : rep.mismatch_sample) std::cerr << k << " ";
                std::cerr << "\n";
                return 2;
            }
            return 0;
        }
    } catch (const std::exception& e) {
        return exit_usage(e.what());
    }
    return exit_usage("no subcommand");
}
