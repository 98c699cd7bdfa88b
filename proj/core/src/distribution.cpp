#include "reidx/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reidx {

DomainSpan key_span(const Keys& d) {
    if (d.empty()) throw std::invalid_argument("key_span: empty key set");
    return {static_cast<double>(d.front()), static_cast<double>(d.back())};
}

std::vector<double> normalize_keys(const Keys& d) {
    if (d.empty()) throw std::invalid_argument("normalize_keys: empty key set");
    const DomainSpan s = key_span(d);
    std::vector<double> out(d.size());
    if (s.hi <= s.lo) {
        std::fill(out.begin(), out.end(), 0.0);
        return out;
    }
    const double w = s.hi - s.lo;
    for (std::size_t i = 0; i < d.size(); ++i)
        out[i] = (static_cast<double>(d[i]) - s.lo) / w;
    return out;
}

double empirical_cdf_at(const Keys& d, Key x) {
    if (d.empty()) throw std::invalid_argument("empirical_cdf_at: empty key set");
    const auto it = std::upper_bound(d.begin(), d.end(), x);
    return static_cast<double>(it - d.begin()) / static_cast<double>(d.size());
}

double ks_distance_normalized(const std::vector<double>& a,
                              const std::vector<double>& b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("ks_distance: empty key set");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double best = 0.0;
    // At each distinct breakpoint both step functions take their
    // post-jump value; the pre-jump gap equals the gap at the previous
    // breakpoint, so walking distinct values covers the full sup.
    while (i < a.size() || j < b.size()) {
        double x;
        if (i == a.size())
            x = b[j];
        else if (j == b.size())
            x = a[i];
        else
            x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / na -
                                       static_cast<double>(j) / nb));
    }
    return best;
}

double ks_distance(const Keys& a, const Keys& b) {
    return ks_distance_normalized(normalize_keys(a), normalize_keys(b));
}

Histogram build_histogram(const Keys& d, std::size_t m, DomainSpan span) {
    if (d.empty()) throw std::invalid_argument("build_histogram: empty key set");
    if (m == 0) throw std::invalid_argument("build_histogram: m must be >= 1");
    Histogram h;
    h.span = span;
    h.bins.assign(m, 0.0);
    const double n = static_cast<double>(d.size());
    if (span.hi <= span.lo) {
        h.bins[0] = 1.0;
        return h;
    }
    const double w = (span.hi - span.lo) / static_cast<double>(m);
    // rank(e) = number of keys strictly below edge e
    const auto rank_below = [&](double e) {
        return static_cast<std::size_t>(
            std::lower_bound(d.begin(), d.end(), e,
                             [](Key k, double v) {
                                 return static_cast<double>(k) < v;
                             }) -
            d.begin());
    };
    std::size_t prev = rank_below(span.lo);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const std::size_t r = rank_below(span.lo + w * static_cast<double>(i + 1));
        h.bins[i] = static_cast<double>(r - prev) / n;
        prev = r;
    }
    // last bin is upper-inclusive
    const auto last = static_cast<std::size_t>(
        std::upper_bound(d.begin(), d.end(), span.hi,
                         [](double v, Key k) {
                             return v < static_cast<double>(k);
                         }) -
        d.begin());
    h.bins[m - 1] = static_cast<double>(last - prev) / n;
    return h;
}

Histogram build_histogram(const Keys& d, std::size_t m) {
    if (d.empty()) throw std::invalid_argument("build_histogram: empty key set");
    return build_histogram(d, m, key_span(d));
}

double histogram_distance(const Histogram& hs, const Histogram& ht) {
    if (hs.bins.size() != ht.bins.size())
        throw std::invalid_argument("histogram_distance: bin counts differ");
    double dist = 0.0, ps = 0.0, pt = 0.0;
    for (std::size_t i = 0; i < hs.bins.size(); ++i) {
        dist = std::max({hs.bins[i] + ps - pt, ht.bins[i] + pt - ps, dist});
        ps += hs.bins[i];
        pt += ht.bins[i];
    }
    return dist;
}

}  // namespace reidx
