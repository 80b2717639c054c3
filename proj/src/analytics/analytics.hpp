#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tlog/trajlog.hpp"
#include "world/world.hpp"

namespace forager::analytics {

// --- Training-history summaries ---

struct Smoothed {
    std::vector<double> values;
    bool warned_short = false; // series shorter than the window: returned as-is
};

// Sliding Gaussian window (sigma = window/6) truncated to `window` samples,
// renormalized over the available support at the edges.
Smoothed smooth_history(const std::vector<double>& series, int window = 51);

struct LifespanSummary {
    double mean = 0;
    bool warned_short = false; // fewer than `tail` samples: mean over all
};

// Mean of the final `tail` smoothed samples.
LifespanSummary lifespan_summary(const std::vector<double>& smoothed, int tail = 500);

// --- Pickup discrimination ---

struct PickupFrequencies {
    bool defined = false; // false when the log contains no pickups
    uint64_t total = 0;
    std::array<double, world::kNumClasses> raw{};        // shares of all pickups
    std::array<double, world::kNumClasses> availability{}; // mean share of live objects
    // raw shares divided by availability shares, renormalized to sum 1
    std::array<double, world::kNumClasses> normalized{};
};

PickupFrequencies pickup_frequencies(const tlog::TrajectoryLog& log);

// --- Integrated gradients ---

// Callback contract: evaluate the scalar output and its input gradient at x.
using ValueGradFn =
    std::function<std::pair<double, std::vector<double>>(const std::vector<double>& x)>;

struct Attribution {
    std::vector<double> map;   // per-input attribution
    double value_x = 0;        // f(input)
    double value_baseline = 0; // f(baseline)
    double residual = 0;       // |sum(map) - (f(x) - f(baseline))|
};

// Right-endpoint Riemann approximation of the path integral from baseline to
// image; exact for affine f at any step count.
Attribution integrated_gradients(const ValueGradFn& f, const std::vector<double>& image,
                                 const std::vector<double>& baseline, int steps = 64);

// --- Value-function regression ---

struct NoiseBound {
    bool defined = false; // false when Var(v) is zero
    double r2_max = 0;
    double residual_var = 0;
    double total_var = 0;
};

// Boxcar moving-average smooth of width `window`; the residual variance
// (corrected for the mean-removal shrinkage) bounds attainable r^2 from above.
NoiseBound noise_bound(const std::vector<double>& v_series, int window = 20);

struct Countdown {
    std::vector<double> frames;     // frames until the next nourishment pickup
    std::vector<uint8_t> valid;     // steps after an episode's last pickup are excluded
};

// Per-step frames until the next positive-delta pickup within the episode,
// in steps-times-action-repeat granularity; a pickup during the step itself
// counts as zero.
Countdown food_countdown(const tlog::TrajectoryLog& log);

struct RegressionReport {
    std::string name;
    std::vector<double> fold_r2; // out-of-fold, one per fold
    double median_r2 = 0, min_r2 = 0, max_r2 = 0;
    NoiseBound noise;
    std::vector<std::string> dropped_columns; // collinear regressors removed
    std::vector<double> coefficients;         // full-data fit, standardized inputs
    double intercept = 0;
};

// OLS with intercept on standardized regressors, contiguous-block k-fold
// cross-validation. `mask` (optional) excludes rows from both fit and score.
RegressionReport regress_value(const std::vector<double>& v_series,
                               const std::vector<std::pair<std::string, std::vector<double>>>& regressors,
                               int folds = 10, const std::vector<uint8_t>* mask = nullptr);

// --- Behavioural statistics ---

struct BehaviorStats {
    std::array<double, 3> velocity_probs{};  // mean of the velocity head
    std::array<double, 3> velocity_actions{}; // empirical action shares
    bool waste_defined = false;
    double waste_percent = 0; // 100 * wasted / accumulated positive deltas
    double total_wasted = 0, total_positive = 0;
    uint64_t steps = 0;
};

BehaviorStats behavior_stats(const tlog::TrajectoryLog& log);

} // namespace forager::analytics
