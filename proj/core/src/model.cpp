#include "reidx/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

namespace reidx {

namespace {

std::atomic<std::uint64_t> g_tinynet_runs{0};
std::atomic<std::uint64_t> g_linear_runs{0};

// Target ranks i/(n-1); a single point gets rank 0.
std::vector<double> rank_targets(std::size_t n) {
    std::vector<double> y(n);
    if (n > 1) {
        const double d = static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<double>(i) / d;
    }
    return y;
}

// Strided subsample keeping the first and last pair.
void subsample(std::vector<double>& x, std::vector<double>& y, std::size_t cap) {
    if (cap == 0 || x.size() <= cap) return;
    std::vector<double> sx, sy;
    sx.reserve(cap);
    sy.reserve(cap);
    const double step = static_cast<double>(x.size() - 1) / static_cast<double>(cap - 1);
    for (std::size_t i = 0; i < cap; ++i) {
        const auto j = static_cast<std::size_t>(std::llround(step * static_cast<double>(i)));
        sx.push_back(x[j]);
        sy.push_back(y[j]);
    }
    x = std::move(sx);
    y = std::move(sy);
}

}  // namespace

std::uint64_t tinynet_training_runs() { return g_tinynet_runs.load(); }
std::uint64_t linear_fit_runs() { return g_linear_runs.load(); }
void reset_training_counters() {
    g_tinynet_runs.store(0);
    g_linear_runs.store(0);
}

LinearModel fit_linear(const Keys& d) {
    if (d.empty()) throw std::invalid_argument("fit_linear: empty key set");
    g_linear_runs.fetch_add(1, std::memory_order_relaxed);
    const std::size_t n = d.size();
    if (n == 1) return {0.0, 0.0};
    const std::vector<double> x = normalize_keys(d);
    const std::vector<double> y = rank_targets(n);
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) return {0.0, my};
    const double a = sxy / sxx;
    return {a, my - a * mx};
}

std::array<double, 13> tinynet_params(const TinyNet& net) {
    std::array<double, 13> p{};
    for (int j = 0; j < 4; ++j) {
        p[j] = net.w1[j];
        p[4 + j] = net.b1[j];
        p[8 + j] = net.w2[j];
    }
    p[12] = net.b2;
    return p;
}

TinyNet tinynet_from_params(const std::array<double, 13>& p) {
    TinyNet net;
    for (int j = 0; j < 4; ++j) {
        net.w1[j] = p[j];
        net.b1[j] = p[4 + j];
        net.w2[j] = p[8 + j];
    }
    net.b2 = p[12];
    return net;
}

double tinynet_loss(const TinyNet& net, const std::vector<double>& x,
                    const std::vector<double>& y) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = net(x[i]) - y[i];
        loss += r * r;
    }
    return loss / static_cast<double>(x.size());
}

std::array<double, 13> tinynet_loss_gradient(const TinyNet& net,
                                             const std::vector<double>& x,
                                             const std::vector<double>& y) {
    std::array<double, 13> g{};
    const double inv = 2.0 / static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double h[4];
        double pred = net.b2;
        for (int j = 0; j < 4; ++j) {
            const double a = net.w1[j] * x[i] + net.b1[j];
            h[j] = a > 0.0 ? a : 0.0;
            pred += net.w2[j] * h[j];
        }
        const double e = inv * (pred - y[i]);
        g[12] += e;
        for (int j = 0; j < 4; ++j) {
            g[8 + j] += e * h[j];
            if (h[j] > 0.0) {
                g[j] += e * net.w2[j] * x[i];
                g[4 + j] += e * net.w2[j];
            }
        }
    }
    return g;
}

TinyNet fit_tinynet(const Keys& d, const TrainConfig& cfg) {
    if (d.empty()) throw std::invalid_argument("fit_tinynet: empty key set");
    g_tinynet_runs.fetch_add(1, std::memory_order_relaxed);

    std::vector<double> x = normalize_keys(d);
    std::vector<double> y = rank_targets(d.size());
    subsample(x, y, cfg.sample_cap);

    // Seeded init: positive hidden slopes with kinks spread over [0, 1],
    // so the units start out carving the key domain.
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> slope(0.5, 2.0);
    std::uniform_real_distribution<double> knot(0.0, 1.0);
    std::uniform_real_distribution<double> outw(0.1, 0.6);
    TinyNet net;
    for (int j = 0; j < 4; ++j) {
        net.w1[j] = slope(rng);
        net.b1[j] = -net.w1[j] * knot(rng);
        net.w2[j] = outw(rng);
    }
    net.b2 = 0.0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto g = tinynet_loss_gradient(net, x, y);
        auto p = tinynet_params(net);
        bool finite = true;
        for (int k = 0; k < 13; ++k) {
            p[k] -= cfg.learning_rate * g[k];
            finite = finite && std::isfinite(p[k]);
        }
        if (!finite)
            throw TrainingError("fit_tinynet: non-finite parameters at epoch " +
                                    std::to_string(epoch),
                                epoch);
        net = tinynet_from_params(p);
    }
    return net;
}

ErrorBounds compute_error_bounds(const AdaptedModel& m, const Keys& d) {
    if (d.empty())
        throw std::invalid_argument("compute_error_bounds: empty key set");
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double r = static_cast<double>(i) -
                         m.predict_position(static_cast<double>(d[i]));
        if (i == 0) {
            lo = hi = r;
        } else {
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
    }
    return {static_cast<std::int64_t>(std::floor(lo)),
            static_cast<std::int64_t>(std::ceil(hi))};
}

AdaptedModel train_model(const Keys& d, ModelKind kind, const TrainConfig& cfg) {
    if (d.empty()) throw std::invalid_argument("train_model: empty key set");
    AdaptedModel out;
    out.core = kind == ModelKind::linear ? CoreModel{fit_linear(d)}
                                         : CoreModel{fit_tinynet(d, cfg)};
    const DomainSpan s = key_span(d);
    out.input = s.hi > s.lo ? AffineMap{1.0 / (s.hi - s.lo), -s.lo / (s.hi - s.lo)}
                            : AffineMap{0.0, 0.0};
    out.output = {d.size() > 1 ? static_cast<double>(d.size() - 1) : 0.0, 0.0};
    out.bounds = compute_error_bounds(out, d);
    out.provenance = {Provenance::Source::trained, 1.0, 0};
    out.target_size = d.size();
    return out;
}

void fold_linear_maps(AdaptedModel& m) {
    if (const auto* lin = std::get_if<LinearModel>(&m.core)) {
        m.core = fold_affine(*lin, m.input, m.output);
        m.input = AffineMap::identity();
        m.output = AffineMap::identity();
    }
}

std::pair<AffineMap, AffineMap> make_maps(DomainSpan src_key, DomainSpan src_pos,
                                          DomainSpan tgt_key, DomainSpan tgt_pos) {
    AffineMap in, out;
    if (tgt_key.hi <= tgt_key.lo) {
        // all-equal-keys rule: constant map to the source span start
        in = {0.0, src_key.lo};
    } else {
        const double sdx = (src_key.hi - src_key.lo) / (tgt_key.hi - tgt_key.lo);
        in = {sdx, src_key.lo - tgt_key.lo * sdx};
    }
    if (src_pos.hi <= src_pos.lo)
        throw std::invalid_argument("make_maps: degenerate source position span");
    const double sdy = (tgt_pos.hi - tgt_pos.lo) / (src_pos.hi - src_pos.lo);
    out = {sdy, tgt_pos.lo - src_pos.lo * sdy};
    return {in, out};
}

LinearModel fold_affine(const LinearModel& m, const AffineMap& in,
                        const AffineMap& out) {
    // out(m(in(x))) = a*s_in*s_out*x + (a*t_in + b)*s_out + t_out
    return {m.a * in.scale * out.scale,
            (m.a * in.shift + m.b) * out.scale + out.shift};
}

ErrorBounds adapt_error_bounds(const ErrorBounds& e, double dist,
                               std::uint64_t n_t, double s_dy) {
    const double nt = static_cast<double>(n_t);
    const double lo = -dist * nt + static_cast<double>(e.lower) * s_dy;
    const double hi = dist * nt + static_cast<double>(e.upper) * s_dy;
    return {static_cast<std::int64_t>(std::floor(lo)),
            static_cast<std::int64_t>(std::ceil(hi))};
}

}  // namespace reidx
