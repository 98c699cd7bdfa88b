#include "reidx/pool.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

namespace reidx {

namespace {

constexpr char kMagic[7] = {'R', 'I', 'P', 'O', 'O', 'L', '\0'};
constexpr std::uint8_t kVersion = 1;
constexpr double kFullRange = 18446744073709551616.0;  // 2^64

Key to_fixed_point(double x) {
    const long double v = static_cast<long double>(x) * 18446744073709551616.0L;
    if (v <= 0.0L) return 0;
    if (v >= 18446744073709551615.0L) return ~Key{0};
    return static_cast<Key>(v);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Rescale source bounds to the pool's ns-key convention so that every
// stored entry shares one source size. Outward rounding keeps them sound.
ErrorBounds rescale_bounds(const ErrorBounds& e, std::uint64_t from_n,
                           std::uint64_t to_n) {
    if (from_n < 2 || to_n < 2 || from_n == to_n) return e;
    const double f = static_cast<double>(to_n - 1) / static_cast<double>(from_n - 1);
    return {static_cast<std::int64_t>(std::floor(static_cast<double>(e.lower) * f)),
            static_cast<std::int64_t>(std::ceil(static_cast<double>(e.upper) * f))};
}

}  // namespace

std::uint32_t ModelPool::enqueue(PoolEntry entry) {
    if (entry.id >= next_id_) next_id_ = entry.id + 1;
    const auto it = std::upper_bound(
        entries_.begin(), entries_.end(), entry.max_abs_err,
        [](double err, const PoolEntry& e) { return err < e.max_abs_err; });
    const std::uint32_t id = entry.id;
    entries_.insert(it, std::move(entry));
    return id;
}

std::size_t default_bin_count(double eps) {
    if (std::abs(eps - 0.9) < 1e-9) return 12;
    const double units = 2.0 / (1.0 - eps);
    const double rounded = std::round(units);
    // tolerate float noise: 2/(1-0.8) must yield 10 bins, not 11
    if (std::abs(units - rounded) < 1e-9)
        return static_cast<std::size_t>(rounded);
    return static_cast<std::size_t>(std::ceil(units));
}

std::vector<Histogram> enumerate_histograms(double eps, std::size_t m) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("enumerate_histograms: eps must be in (0, 1)");
    if (m == 0)
        throw std::invalid_argument("enumerate_histograms: m must be >= 1");
    const double units_exact = 2.0 / (1.0 - eps);
    const auto units = static_cast<std::int64_t>(std::llround(units_exact));
    std::vector<Histogram> out;
    if (std::abs(units_exact - static_cast<double>(units)) > 1e-9 ||
        units > static_cast<std::int64_t>(2 * m)) {
        std::cerr << "enumerate_histograms: no valid composition for eps=" << eps
                  << ", m=" << m << "\n";
        return out;
    }
    const double step = (1.0 - eps) / 2.0;
    std::vector<int> c(m, 0);
    // lexicographic enumeration of c in {0,1,2}^m with sum == units
    const auto recurse = [&](auto&& self, std::size_t i, std::int64_t left) -> void {
        if (i == m) {
            if (left != 0) return;
            Histogram h;
            h.span = {0.0, 1.0};
            h.bins.resize(m);
            for (std::size_t k = 0; k < m; ++k)
                h.bins[k] = static_cast<double>(c[k]) * step;
            out.push_back(std::move(h));
            return;
        }
        const auto remaining_max = static_cast<std::int64_t>(2 * (m - i));
        for (int v = 0; v <= 2; ++v) {
            if (left - v < 0 || left - v > remaining_max - 2) continue;
            c[i] = v;
            self(self, i + 1, left - v);
        }
        c[i] = 0;
    };
    recurse(recurse, 0, units);
    return out;
}

Keys synthesize_dataset(const Histogram& h, std::uint64_t ns, std::uint64_t seed) {
    if (ns == 0) throw std::invalid_argument("synthesize_dataset: ns must be >= 1");
    const std::size_t m = h.bins.size();
    // largest-remainder apportionment of h.bins * ns
    std::vector<std::uint64_t> counts(m, 0);
    std::vector<std::pair<double, std::size_t>> remainders(m);
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double quota = h.bins[i] * static_cast<double>(ns);
        const double base = std::floor(quota + 1e-9);
        counts[i] = static_cast<std::uint64_t>(base);
        assigned += counts[i];
        remainders[i] = {quota - base, i};
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < ns; ++k, ++assigned)
        ++counts[remainders[k % m].second];

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Keys keys;
    keys.reserve(ns);
    const double w = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double lo = static_cast<double>(i) * w;
        for (std::uint64_t k = 0; k < counts[i]; ++k)
            keys.push_back(to_fixed_point(lo + uni(rng) * w));
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

DomainSpan synthetic_span() { return {0.0, kFullRange}; }

ModelPool pretrain_pool(double eps, ModelKind kind, std::uint64_t ns,
                        std::uint64_t seed, std::size_t m,
                        const TrainConfig& train) {
    if (m == 0) m = default_bin_count(eps);
    ModelPool pool(kind, eps, m, ns);
    const auto histograms = enumerate_histograms(eps, m);
    for (std::size_t i = 0; i < histograms.size(); ++i) {
        PoolEntry e;
        e.id = static_cast<std::uint32_t>(i);
        const Keys d = synthesize_dataset(histograms[i], ns, mix_seed(seed, i));
        // store the histogram of the data the model actually saw, under the
        // same own-span normalization applied to reuse targets; the ideal
        // grid shape misstates the trained CDF whenever end bins are empty,
        // which silently breaks the transferred-bound guarantee
        e.histogram = build_histogram(d, m);
        e.histogram.span = {0.0, 1.0};
        TrainConfig tc = train;
        tc.seed = mix_seed(seed, i ^ 0xa5a5a5a5ULL);
        const AdaptedModel wrapped = train_model(d, kind, tc);
        e.model = wrapped.core;
        e.bounds = wrapped.bounds;
        e.max_abs_err = max_abs_error(e.bounds);
        pool.enqueue(std::move(e));
    }
    return pool;
}

AdaptedModel agile_model_reuse(const Keys& d, ModelPool& pool, double eps,
                               const TrainConfig& train) {
    if (d.empty()) throw std::invalid_argument("agile_model_reuse: empty key set");
    const std::uint64_t n = d.size();
    const std::uint64_t ns = pool.source_size();

    if (n >= 2 && ns >= 2 && !pool.empty()) {
        const Histogram ht = build_histogram(d, pool.bin_count());
        for (const PoolEntry& entry : pool.entries()) {
            const double dist = histogram_distance(entry.histogram, ht);
            // grid histograms sit exactly at dist == 1 - eps against
            // themselves; absorb representation noise at the boundary
            if (dist > 1.0 - eps + 1e-9) continue;

            const auto [t_in, t_out] =
                make_maps({0.0, 1.0}, {0.0, static_cast<double>(ns - 1)},
                          key_span(d), {0.0, static_cast<double>(n - 1)});
            AdaptedModel out;
            out.bounds = adapt_error_bounds(entry.bounds, dist, n, t_out.scale);
            // the transferred bound is exact at CDF level; converting ranks
            // to integer positions can overshoot by one slot on each side
            out.bounds.lower -= 1;
            out.bounds.upper += 1;
            out.provenance = {Provenance::Source::reused, 1.0 - dist, entry.id};
            out.target_size = n;
            const double src_scale = static_cast<double>(ns - 1);
            if (const auto* lin = std::get_if<LinearModel>(&entry.model)) {
                // position-space source model, then fold the maps away
                const LinearModel pos{lin->a * src_scale, lin->b * src_scale};
                out.core = fold_affine(pos, t_in, t_out);
                out.input = AffineMap::identity();
                out.output = AffineMap::identity();
            } else {
                out.core = entry.model;
                out.input = t_in;
                out.output = {t_out.scale * src_scale, t_out.shift};
            }
            return out;
        }
    }

    // no qualifying entry: train on d and enqueue for later reuse
    AdaptedModel out = train_model(d, pool.kind(), train);

    PoolEntry e;
    e.id = pool.next_id();
    e.histogram = build_histogram(d, pool.bin_count());
    e.histogram.span = {0.0, 1.0};  // bins are span-normalized by construction
    e.model = out.core;
    e.bounds = rescale_bounds(out.bounds, n, ns);
    e.max_abs_err = max_abs_error(e.bounds);
    pool.enqueue(std::move(e));

    fold_linear_maps(out);
    return out;
}

namespace {

void write_raw(std::ofstream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_val(std::ofstream& os, T v) {
    write_raw(os, &v, sizeof(v));
}

template <typename T>
T read_val(std::ifstream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw PoolTruncatedError("pool file truncated");
    return v;
}

}  // namespace

void save_pool(const ModelPool& pool, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw PoolIoError("cannot open pool file for writing: " + path.string());
    write_raw(os, kMagic, sizeof(kMagic));
    write_val<std::uint8_t>(os, kVersion);
    write_val<std::uint8_t>(os, static_cast<std::uint8_t>(pool.kind()));
    write_val<double>(os, pool.eps());
    write_val<std::uint32_t>(os, static_cast<std::uint32_t>(pool.bin_count()));
    write_val<std::uint32_t>(os, static_cast<std::uint32_t>(pool.source_size()));
    write_val<std::uint64_t>(os, pool.size());
    for (const PoolEntry& e : pool.entries()) {
        write_val<std::uint32_t>(os, e.id);
        for (double b : e.histogram.bins) write_val<double>(os, b);
        if (const auto* lin = std::get_if<LinearModel>(&e.model)) {
            write_val<double>(os, lin->a);
            write_val<double>(os, lin->b);
        } else {
            const auto p = tinynet_params(std::get<TinyNet>(e.model));
            for (double v : p) write_val<double>(os, v);
        }
        write_val<std::int64_t>(os, e.bounds.lower);
        write_val<std::int64_t>(os, e.bounds.upper);
        write_val<double>(os, e.max_abs_err);
    }
    if (!os) throw PoolIoError("failed writing pool file: " + path.string());
}

ModelPool load_pool(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw PoolIoError("cannot open pool file: " + path.string());
    char magic[sizeof(kMagic)];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw PoolFormatError("not a pool file: " + path.string());
    const auto version = read_val<std::uint8_t>(is);
    if (version != kVersion)
        throw PoolVersionError("unsupported pool file version " +
                               std::to_string(version));
    const auto kind_raw = read_val<std::uint8_t>(is);
    if (kind_raw > 1) throw PoolFormatError("unknown model kind in pool file");
    const auto kind = static_cast<ModelKind>(kind_raw);
    const double eps = read_val<double>(is);
    const auto m = read_val<std::uint32_t>(is);
    const auto ns = read_val<std::uint32_t>(is);
    const auto count = read_val<std::uint64_t>(is);
    if (m == 0) throw PoolFormatError("pool file has zero bins");

    ModelPool pool(kind, eps, m, ns);
    for (std::uint64_t i = 0; i < count; ++i) {
        PoolEntry e;
        e.id = read_val<std::uint32_t>(is);
        e.histogram.span = {0.0, 1.0};
        e.histogram.bins.resize(m);
        for (auto& b : e.histogram.bins) b = read_val<double>(is);
        if (kind == ModelKind::linear) {
            LinearModel lin;
            lin.a = read_val<double>(is);
            lin.b = read_val<double>(is);
            e.model = lin;
        } else {
            std::array<double, 13> p;
            for (auto& v : p) v = read_val<double>(is);
            e.model = tinynet_from_params(p);
        }
        e.bounds.lower = read_val<std::int64_t>(is);
        e.bounds.upper = read_val<std::int64_t>(is);
        e.max_abs_err = read_val<double>(is);
        // entries were saved in order; append directly
        pool.entries_.push_back(std::move(e));
        if (pool.entries_.back().id >= pool.next_id_)
            pool.next_id_ = pool.entries_.back().id + 1;
    }
    if (is.peek() != std::ifstream::traits_type::eof())
        throw PoolFormatError("trailing bytes in pool file: " + path.string());
    for (std::size_t i = 1; i < pool.entries_.size(); ++i)
        if (pool.entries_[i - 1].max_abs_err > pool.entries_[i].max_abs_err)
            throw PoolFormatError("pool file entries out of order");
    return pool;
}

}  // namespace reidx
