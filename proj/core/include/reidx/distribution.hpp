#pragma once

#include <cstdint>
#include <vector>

namespace reidx {

using Key = std::uint64_t;

/// Ordered sequence of 64-bit keys, ascending, duplicates allowed.
using Keys = std::vector<Key>;

/// Closed interval [lo, hi] in key or position space.
struct DomainSpan {
    double lo = 0.0;
    double hi = 0.0;
};

/// Equal-width relative-frequency histogram; the discrete CDF sketch.
struct Histogram {
    std::vector<double> bins;
    DomainSpan span;
};

/// [min, max] of a nonempty key sequence, as doubles.
DomainSpan key_span(const Keys& d);

/// Affine map of each key from the sequence's own span onto [0, 1].
/// A degenerate span (all keys equal) collapses to 0.
std::vector<double> normalize_keys(const Keys& d);

/// Fraction of keys <= x. Throws std::invalid_argument on an empty set.
double empirical_cdf_at(const Keys& d, Key x);

/// Exact two-sample Kolmogorov-Smirnov distance between the empirical
/// CDFs of a and b after each set is normalized to [0, 1] by its own span.
/// Single merge walk, O(|a| + |b|).
double ks_distance(const Keys& a, const Keys& b);

/// Same, over already-normalized (sorted, in [0, 1]) values.
double ks_distance_normalized(const std::vector<double>& a,
                              const std::vector<double>& b);

/// m equal-width bins over the given span. Bin i counts keys in
/// [edge_i, edge_{i+1}), the last bin includes its upper edge.
/// Counting is by binary search on the edges, O(m log n).
Histogram build_histogram(const Keys& d, std::size_t m, DomainSpan span);

/// Bins over the sequence's own [min, max] span. All mass lands in bin 0
/// when the span is degenerate.
Histogram build_histogram(const Keys& d, std::size_t m);

/// Over-approximating CDF distance between two aligned histograms.
/// Guarantees result >= KS distance of the underlying sets and
/// result <= KS + max bin mass. Note dist_h(h, h) = max_i h[i], not 0.
double histogram_distance(const Histogram& hs, const Histogram& ht);

}  // namespace reidx
