#include "analytics/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "util/errors.hpp"

namespace forager::analytics {

namespace {

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double var_of(const std::vector<double>& xs, double mean) {
    if (xs.empty()) return 0;
    double s = 0;
    for (double x : xs) s += (x - mean) * (x - mean);
    return s / static_cast<double>(xs.size());
}

double median_of(std::vector<double> xs) {
    if (xs.empty()) return 0;
    std::sort(xs.begin(), xs.end());
    const size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

} // namespace

Smoothed smooth_history(const std::vector<double>& series, int window) {
    if (window < 1 || window % 2 == 0)
        throw usage_error("smooth_history: window must be odd and positive");
    Smoothed out;
    if (series.size() < static_cast<size_t>(window)) {
        out.values = series;
        out.warned_short = true;
        return out;
    }
    const int half = window / 2;
    const double sigma = window / 6.0;
    std::vector<double> kernel(static_cast<size_t>(window));
    for (int j = -half; j <= half; ++j)
        kernel[static_cast<size_t>(j + half)] = std::exp(-0.5 * (j / sigma) * (j / sigma));

    out.values.resize(series.size());
    const auto n = static_cast<long>(series.size());
    for (long i = 0; i < n; ++i) {
        double num = 0, den = 0;
        const long j0 = std::max(-static_cast<long>(half), -i);
        const long j1 = std::min(static_cast<long>(half), n - 1 - i);
        for (long j = j0; j <= j1; ++j) {
            const double w = kernel[static_cast<size_t>(j + half)];
            num += w * series[static_cast<size_t>(i + j)];
            den += w;
        }
        out.values[static_cast<size_t>(i)] = num / den;
    }
    return out;
}

LifespanSummary lifespan_summary(const std::vector<double>& smoothed, int tail) {
    LifespanSummary s;
    if (smoothed.empty()) {
        s.warned_short = true;
        return s;
    }
    size_t take = static_cast<size_t>(tail);
    if (smoothed.size() < take) {
        take = smoothed.size();
        s.warned_short = true;
    }
    double sum = 0;
    for (size_t i = smoothed.size() - take; i < smoothed.size(); ++i) sum += smoothed[i];
    s.mean = sum / static_cast<double>(take);
    return s;
}

PickupFrequencies pickup_frequencies(const tlog::TrajectoryLog& log) {
    PickupFrequencies f;
    std::array<uint64_t, world::kNumClasses> picked{};
    std::array<double, world::kNumClasses> avail{};
    double avail_total = 0;
    for (const auto& r : log.records) {
        for (int c = 0; c < world::kNumClasses; ++c) {
            picked[static_cast<size_t>(c)] += r.pickup_counts[static_cast<size_t>(c)];
            avail[static_cast<size_t>(c)] += r.object_counts[static_cast<size_t>(c)];
            avail_total += r.object_counts[static_cast<size_t>(c)];
        }
    }
    f.total = std::accumulate(picked.begin(), picked.end(), static_cast<uint64_t>(0));
    if (f.total == 0) return f; // undefined, reported as such
    f.defined = true;
    for (int c = 0; c < world::kNumClasses; ++c)
        f.raw[static_cast<size_t>(c)] =
            static_cast<double>(picked[static_cast<size_t>(c)]) / static_cast<double>(f.total);
    if (avail_total > 0) {
        double norm_sum = 0;
        for (int c = 0; c < world::kNumClasses; ++c) {
            f.availability[static_cast<size_t>(c)] = avail[static_cast<size_t>(c)] / avail_total;
            const double a = f.availability[static_cast<size_t>(c)];
            f.normalized[static_cast<size_t>(c)] = a > 0 ? f.raw[static_cast<size_t>(c)] / a : 0;
            norm_sum += f.normalized[static_cast<size_t>(c)];
        }
        if (norm_sum > 0)
            for (auto& v : f.normalized) v /= norm_sum;
    }
    return f;
}

Attribution integrated_gradients(const ValueGradFn& f, const std::vector<double>& image,
                                 const std::vector<double>& baseline, int steps) {
    if (steps < 1) throw usage_error("integrated_gradients: steps must be >= 1");
    if (image.size() != baseline.size())
        throw usage_error("integrated_gradients: image/baseline shape mismatch");

    Attribution a;
    a.map.assign(image.size(), 0.0);
    a.value_baseline = f(baseline).first;

    std::vector<double> point(image.size());
    for (int k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) / steps;
        for (size_t i = 0; i < image.size(); ++i)
            point[i] = baseline[i] + t * (image[i] - baseline[i]);
        const auto [value, grad] = f(point);
        if (k == steps) a.value_x = value;
        for (size_t i = 0; i < image.size(); ++i) a.map[i] += grad[i];
    }
    double total = 0;
    for (size_t i = 0; i < image.size(); ++i) {
        a.map[i] *= (image[i] - baseline[i]) / steps;
        total += a.map[i];
    }
    a.residual = std::abs(total - (a.value_x - a.value_baseline));
    return a;
}

NoiseBound noise_bound(const std::vector<double>& v, int window) {
    if (window < 2) throw usage_error("noise_bound: window must be >= 2");
    if (v.size() <= static_cast<size_t>(window))
        throw usage_error("noise_bound: series must be longer than the window");
    NoiseBound b;
    const auto n = static_cast<long>(v.size());
    std::vector<double> resid(v.size());
    const long lead = window / 2;
    for (long i = 0; i < n; ++i) {
        // centered boxcar, truncated at the edges
        const long j0 = std::max(0L, i - lead);
        const long j1 = std::min(n, i + (window - lead));
        double s = 0;
        for (long j = j0; j < j1; ++j) s += v[static_cast<size_t>(j)];
        resid[static_cast<size_t>(i)] = v[static_cast<size_t>(i)] - s / static_cast<double>(j1 - j0);
    }
    const double vm = mean_of(v);
    b.total_var = var_of(v, vm);
    if (b.total_var <= 0) return b; // undefined
    b.defined = true;
    const double rm = mean_of(resid);
    // w/(w-1) undoes the variance shrinkage from subtracting the window mean
    b.residual_var = var_of(resid, rm) * window / (window - 1.0);
    b.r2_max = 1.0 - b.residual_var / b.total_var;
    return b;
}

Countdown food_countdown(const tlog::TrajectoryLog& log) {
    Countdown c;
    const size_t n = log.records.size();
    c.frames.assign(n, 0.0);
    c.valid.assign(n, 0);
    const double repeat = log.action_repeat();

    // scan backwards within each episode, counting steps to the next
    // nourishment pickup
    long next_pickup = -1; // step index, or -1 past the episode's last pickup
    for (size_t i = n; i-- > 0;) {
        const auto& r = log.records[i];
        if (i + 1 < n && log.records[i + 1].episode != r.episode) next_pickup = -1;
        bool has_positive = false;
        for (int cls = 5; cls < world::kNumClasses; ++cls)
            if (r.pickup_counts[static_cast<size_t>(cls)] > 0) has_positive = true;
        if (has_positive) next_pickup = static_cast<long>(i);
        if (next_pickup >= 0) {
            c.valid[i] = 1;
            c.frames[i] = (static_cast<double>(next_pickup) - static_cast<double>(i)) * repeat;
        }
    }
    return c;
}

namespace {

// Gaussian elimination with partial pivoting; near-zero pivots mark dropped
// columns instead of failing.
std::vector<double> solve_normal_equations(std::vector<std::vector<double>> a,
                                           std::vector<double> b,
                                           std::vector<int>& dropped) {
    const size_t k = b.size();
    std::vector<int> col_ok(k, 1);
    for (size_t i = 0; i < k; ++i) {
        size_t piv = i;
        for (size_t r = i + 1; r < k; ++r)
            if (std::abs(a[r][i]) > std::abs(a[piv][i])) piv = r;
        std::swap(a[i], a[piv]);
        std::swap(b[i], b[piv]);
        if (std::abs(a[i][i]) < 1e-10) {
            col_ok[i] = 0;
            dropped.push_back(static_cast<int>(i));
            a[i][i] = 1.0; // neutralize the row; coefficient pinned to zero
            for (size_t c = 0; c < k; ++c)
                if (c != i) a[i][c] = 0.0;
            b[i] = 0.0;
            continue;
        }
        for (size_t r = i + 1; r < k; ++r) {
            const double f = a[r][i] / a[i][i];
            for (size_t c = i; c < k; ++c) a[r][c] -= f * a[i][c];
            b[r] -= f * b[i];
        }
    }
    std::vector<double> x(k, 0.0);
    for (size_t i = k; i-- > 0;) {
        double s = b[i];
        for (size_t c = i + 1; c < k; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

struct Standardizer {
    std::vector<double> mean, sd;
};

} // namespace

RegressionReport regress_value(
    const std::vector<double>& v_series,
    const std::vector<std::pair<std::string, std::vector<double>>>& regressors, int folds,
    const std::vector<uint8_t>* mask) {
    const size_t n = v_series.size();
    const size_t k = regressors.size();
    if (folds < 2) throw usage_error("regress_value: folds must be >= 2");
    for (const auto& [name, col] : regressors)
        if (col.size() != n) throw usage_error("regress_value: column '" + name + "' length mismatch");
    if (mask && mask->size() != n) throw usage_error("regress_value: mask length mismatch");

    // usable row indices, in time order
    std::vector<size_t> rows;
    rows.reserve(n);
    for (size_t i = 0; i < n; ++i)
        if (!mask || (*mask)[i]) rows.push_back(i);
    if (rows.size() < static_cast<size_t>(folds) * 10)
        throw usage_error("regress_value: need at least folds*10 usable samples, have " +
                          std::to_string(rows.size()));

    RegressionReport rep;
    for (const auto& [name, col] : regressors) rep.name += (rep.name.empty() ? "" : "+") + name;

    auto fit = [&](const std::vector<size_t>& train) {
        Standardizer st;
        st.mean.assign(k, 0.0);
        st.sd.assign(k, 1.0);
        for (size_t j = 0; j < k; ++j) {
            double m = 0;
            for (size_t i : train) m += regressors[j].second[i];
            m /= static_cast<double>(train.size());
            double var = 0;
            for (size_t i : train) {
                const double d = regressors[j].second[i] - m;
                var += d * d;
            }
            var /= static_cast<double>(train.size());
            st.mean[j] = m;
            st.sd[j] = var > 0 ? std::sqrt(var) : 1.0;
        }
        // normal equations over [1, z_1..z_k]
        const size_t d = k + 1;
        std::vector<std::vector<double>> xtx(d, std::vector<double>(d, 0.0));
        std::vector<double> xty(d, 0.0);
        std::vector<double> z(d, 1.0);
        for (size_t i : train) {
            for (size_t j = 0; j < k; ++j)
                z[j + 1] = (regressors[j].second[i] - st.mean[j]) / st.sd[j];
            for (size_t a = 0; a < d; ++a) {
                xty[a] += z[a] * v_series[i];
                for (size_t b = a; b < d; ++b) xtx[a][b] += z[a] * z[b];
            }
        }
        for (size_t a = 0; a < d; ++a)
            for (size_t b = 0; b < a; ++b) xtx[a][b] = xtx[b][a];
        std::vector<int> dropped;
        auto beta = solve_normal_equations(std::move(xtx), std::move(xty), dropped);
        return std::tuple{st, beta, dropped};
    };

    auto predict = [&](const Standardizer& st, const std::vector<double>& beta, size_t i) {
        double y = beta[0];
        for (size_t j = 0; j < k; ++j)
            y += beta[j + 1] * (regressors[j].second[i] - st.mean[j]) / st.sd[j];
        return y;
    };

    // contiguous-block folds over the usable rows
    const size_t m = rows.size();
    for (int f = 0; f < folds; ++f) {
        const size_t lo = m * static_cast<size_t>(f) / static_cast<size_t>(folds);
        const size_t hi = m * static_cast<size_t>(f + 1) / static_cast<size_t>(folds);
        std::vector<size_t> train, test;
        train.reserve(m - (hi - lo));
        test.reserve(hi - lo);
        for (size_t i = 0; i < m; ++i)
            (i >= lo && i < hi ? test : train).push_back(rows[i]);

        const auto [st, beta, dropped] = fit(train);
        double test_mean = 0;
        for (size_t i : test) test_mean += v_series[i];
        test_mean /= static_cast<double>(test.size());
        double ss_res = 0, ss_tot = 0;
        for (size_t i : test) {
            const double e = v_series[i] - predict(st, beta, i);
            ss_res += e * e;
            const double d0 = v_series[i] - test_mean;
            ss_tot += d0 * d0;
        }
        rep.fold_r2.push_back(ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0);
    }

    rep.median_r2 = median_of(rep.fold_r2);
    rep.min_r2 = *std::min_element(rep.fold_r2.begin(), rep.fold_r2.end());
    rep.max_r2 = *std::max_element(rep.fold_r2.begin(), rep.fold_r2.end());

    // full-data fit for reporting, plus the noise ceiling of the target
    {
        const auto [st, beta, dropped] = fit(rows);
        rep.intercept = beta[0];
        rep.coefficients.assign(beta.begin() + 1, beta.end());
        for (int idx : dropped)
            if (idx > 0) rep.dropped_columns.push_back(regressors[static_cast<size_t>(idx - 1)].first);
        std::vector<double> used;
        used.reserve(rows.size());
        for (size_t i : rows) used.push_back(v_series[i]);
        if (used.size() > 20) rep.noise = noise_bound(used, 20);
    }
    return rep;
}

BehaviorStats behavior_stats(const tlog::TrajectoryLog& log) {
    BehaviorStats s;
    for (const auto& r : log.records) {
        for (int a = 0; a < 3; ++a)
            s.velocity_probs[static_cast<size_t>(a)] += r.probs_v[static_cast<size_t>(a)];
        s.velocity_actions[r.act_v] += 1.0;
        s.total_wasted += r.wasted;
        s.total_positive += r.positive_delta;
        s.steps += 1;
    }
    if (s.steps > 0) {
        for (auto& p : s.velocity_probs) p /= static_cast<double>(s.steps);
        for (auto& p : s.velocity_actions) p /= static_cast<double>(s.steps);
    }
    if (s.total_positive > 0) {
        s.waste_defined = true;
        s.waste_percent = 100.0 * s.total_wasted / s.total_positive;
    }
    return s;
}

} // namespace forager::analytics
