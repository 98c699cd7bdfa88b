#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "reidx/distribution.hpp"

namespace reidx {

enum class ModelKind : std::uint8_t { linear = 0, tinynet = 1 };

/// y = a*x + b, normalized key -> normalized rank (or folded raw form).
struct LinearModel {
    double a = 0.0;
    double b = 0.0;
    double operator()(double x) const { return a * x + b; }
};

/// One hidden layer of four rectified units, linear output.
/// Maps normalized key to normalized rank. 13 parameters total.
struct TinyNet {
    std::array<double, 4> w1{};  // hidden weights
    std::array<double, 4> b1{};  // hidden biases
    std::array<double, 4> w2{};  // output weights
    double b2 = 0.0;             // output bias

    double operator()(double x) const {
        double y = b2;
        for (int j = 0; j < 4; ++j) {
            const double h = w1[j] * x + b1[j];
            if (h > 0.0) y += w2[j] * h;
        }
        return y;
    }
};

using CoreModel = std::variant<LinearModel, TinyNet>;

inline double predict_rank(const CoreModel& m, double x) {
    return std::visit([x](const auto& mm) { return mm(x); }, m);
}

inline ModelKind core_kind(const CoreModel& m) {
    return std::holds_alternative<LinearModel>(m) ? ModelKind::linear
                                                  : ModelKind::tinynet;
}

/// Signed position offsets such that a key's true position lies in
/// [prediction + lower, prediction + upper]. Only lower <= upper is required.
struct ErrorBounds {
    std::int64_t lower = 0;
    std::int64_t upper = 0;
};

inline double max_abs_error(const ErrorBounds& e) {
    const double l = static_cast<double>(e.lower < 0 ? -e.lower : e.lower);
    const double u = static_cast<double>(e.upper < 0 ? -e.upper : e.upper);
    return l > u ? l : u;
}

/// f(x) = scale*x + shift.
struct AffineMap {
    double scale = 1.0;
    double shift = 0.0;
    double operator()(double x) const { return scale * x + shift; }
    static AffineMap identity() { return {1.0, 0.0}; }
};

struct TrainConfig {
    std::size_t epochs = 500;
    double learning_rate = 0.1;
    std::uint64_t seed = 42;
    // Full-batch training is strided down to at most this many pairs on
    // large inputs (0 disables the cap). Error bounds are always computed
    // over the full key set, so lookup correctness is unaffected.
    std::size_t sample_cap = 4096;
};

/// Closed-form least squares on (normalized key_i, i/(n-1)).
/// A single key (or an all-equal set) yields a constant model.
LinearModel fit_linear(const Keys& d);

/// Full-batch gradient descent on squared error. Deterministic given the
/// seed. Throws TrainingError if the loss turns non-finite.
TinyNet fit_tinynet(const Keys& d, const TrainConfig& cfg = {});

struct TrainingError : std::runtime_error {
    std::size_t epoch;
    TrainingError(const std::string& what, std::size_t ep)
        : std::runtime_error(what), epoch(ep) {}
};

/// Flat parameter order: w1[0..3], b1[0..3], w2[0..3], b2.
std::array<double, 13> tinynet_params(const TinyNet& net);
TinyNet tinynet_from_params(const std::array<double, 13>& p);

/// Mean squared error over (x, y) pairs.
double tinynet_loss(const TinyNet& net, const std::vector<double>& x,
                    const std::vector<double>& y);

/// Analytic gradient of tinynet_loss w.r.t. the 13 parameters.
std::array<double, 13> tinynet_loss_gradient(const TinyNet& net,
                                             const std::vector<double>& x,
                                             const std::vector<double>& y);

/// Number of fit_tinynet invocations since the last reset. Used to verify
/// that the reuse path performs no iterative training.
std::uint64_t tinynet_training_runs();
std::uint64_t linear_fit_runs();
void reset_training_counters();

struct Provenance {
    enum class Source : std::uint8_t { trained, reused };
    Source source = Source::trained;
    double similarity = 1.0;
    std::uint32_t pool_entry = 0;  // valid when reused
};

/// A core rank model wrapped with the affine input/output maps that turn
/// a raw key into a position for a specific target key set, plus the
/// transferred (or computed) error bounds.
///
/// For linear cores the maps are folded into the model and stored as
/// identities; prediction costs nothing extra. TinyNet cores keep the
/// maps explicit.
struct AdaptedModel {
    CoreModel core;
    AffineMap input;   // raw key -> core input
    AffineMap output;  // core output -> position in [0, n_T - 1]
    ErrorBounds bounds;
    Provenance provenance;
    std::uint64_t target_size = 0;

    double predict_position(double raw_key) const {
        return output(predict_rank(core, input(raw_key)));
    }
};

/// err_l = min_i (i - pred_pos(key_i)), err_u = max_i (i - pred_pos(key_i)),
/// rounded outward to integers.
ErrorBounds compute_error_bounds(const AdaptedModel& m, const Keys& d);

/// Trains a core model of the given kind on d and wraps it with d's own
/// normalization and position maps; bounds are computed over all of d.
AdaptedModel train_model(const Keys& d, ModelKind kind,
                         const TrainConfig& cfg = {});

/// Folds the wrapper maps into a linear core and resets them to identity.
/// No-op for tinynet cores.
void fold_linear_maps(AdaptedModel& m);

/// T_in maps the target key span onto the source key span; T_out maps the
/// source position span onto the target position span. Endpoint-exact.
/// A degenerate target key span yields a constant map to src_key.lo.
std::pair<AffineMap, AffineMap> make_maps(DomainSpan src_key,
                                          DomainSpan src_pos,
                                          DomainSpan tgt_key,
                                          DomainSpan tgt_pos);

/// Collapses T_out(m(T_in(x))) into a single linear model.
LinearModel fold_affine(const LinearModel& m, const AffineMap& in,
                        const AffineMap& out);

/// Transfers error bounds across a reuse: err_l' = -dist*n_T + err_l*s_dy,
/// err_u' = dist*n_T + err_u*s_dy, rounded outward.
ErrorBounds adapt_error_bounds(const ErrorBounds& e, double dist,
                               std::uint64_t n_t, double s_dy);

}  // namespace reidx
