#pragma once

// Sample construction: windows, splits, missing-data handling, normalization.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgmn/model.hpp"
#include "pgmn/scenario.hpp"
#include "pgmn/series.hpp"

namespace pgmn {

inline constexpr std::size_t lag_hours = 24;

struct FeatureRow {
    Hour timestamp{};
    double temp_c = 0.0;
    int day_of_month = 1;
    int day_of_year = 1;
    int day_of_week = 0;
    int hour = 0;
    std::array<double, lag_hours> lags{}; // lags[0] is t-24, lags[23] is t-1
};

/// Feature rows for every hour that has a full lag window, i.e. indices
/// [24, N). Missing energy values must be imputed beforehand.
inline std::vector<FeatureRow> build_feature_rows(const EnergySeries& energy, std::span<const double> temp_c)
{
    if (temp_c.size() != energy.size()) {
        throw std::invalid_argument("build_feature_rows: temperature and energy lengths differ");
    }
    std::vector<FeatureRow> rows;
    if (energy.size() <= lag_hours) {
        return rows;
    }
    rows.reserve(energy.size() - lag_hours);
    for (std::size_t t = lag_hours; t < energy.size(); ++t) {
        FeatureRow r;
        r.timestamp = energy.timestamps[t];
        const auto cal = calendar_of(r.timestamp);
        r.temp_c = temp_c[t];
        r.day_of_month = cal.day_of_month;
        r.day_of_year = cal.day_of_year;
        r.day_of_week = cal.day_of_week;
        r.hour = cal.hour;
        for (std::size_t k = 0; k < lag_hours; ++k) {
            const std::size_t src = t - lag_hours + k;
            if (energy.present[src] == 0) {
                throw std::invalid_argument("build_feature_rows: lag at index " + std::to_string(src)
                                            + " is missing");
            }
            r.lags[k] = energy.values[src];
        }
        rows.push_back(r);
    }
    return rows;
}

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    [[nodiscard]] std::size_t size() const noexcept { return end - begin; }
    [[nodiscard]] bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
};

struct SplitRanges {
    IndexRange train;
    IndexRange validation;
    IndexRange test;
};

/// Chronological split of n consecutive steps; no shuffling across boundaries.
inline SplitRanges chronological_split(std::size_t n, const SplitSpec& spec)
{
    spec.validate();
    const auto n_train = static_cast<std::size_t>(std::floor(spec.train_frac * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::floor(spec.val_frac * static_cast<double>(n)));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
        throw std::invalid_argument("chronological_split: " + std::to_string(n) + " steps too few to split");
    }
    return {{0, n_train}, {n_train, n_train + n_val}, {n_train + n_val, n}};
}

struct WindowPair {
    std::size_t offset = 0;
    std::span<const double> input;
    std::span<const double> target;
    std::span<const FeatureRow> input_features; // empty unless features were supplied
};

/// Stride-1 windows lying entirely inside `range`: each pairs `lookback`
/// hours with the next `horizon` hours. `features`, when non-empty, must be
/// aligned index-for-index with the series.
inline std::vector<WindowPair> make_windows(const EnergySeries& series, std::span<const FeatureRow> features,
                                            std::size_t lookback, std::size_t horizon, IndexRange range)
{
    if (lookback == 0 || horizon == 0) {
        throw std::invalid_argument("make_windows: lookback and horizon must be positive");
    }
    if (range.end > series.size() || range.begin > range.end) {
        throw std::invalid_argument("make_windows: range outside series");
    }
    if (!features.empty() && features.size() != series.size()) {
        throw std::invalid_argument("make_windows: features not aligned with series");
    }
    const std::size_t span_len = lookback + horizon;
    if (range.size() < span_len) {
        throw std::invalid_argument("make_windows: " + std::to_string(range.size()) + " hours is shorter than lookback+horizon ("
                                    + std::to_string(span_len) + ")");
    }
    std::vector<WindowPair> out;
    out.reserve(range.size() - span_len + 1);
    const std::span<const double> values(series.values);
    for (std::size_t off = range.begin; off + span_len <= range.end; ++off) {
        WindowPair w;
        w.offset = off;
        w.input = values.subspan(off, lookback);
        w.target = values.subspan(off + lookback, horizon);
        if (!features.empty()) {
            w.input_features = features.subspan(off, lookback);
        }
        out.push_back(w);
    }
    return out;
}

inline std::vector<WindowPair> make_windows(const EnergySeries& series, std::size_t lookback = 24,
                                            std::size_t horizon = 24)
{
    return make_windows(series, {}, lookback, horizon, {0, series.size()});
}

namespace detail {

inline double nearest_fill(const EnergySeries& s, std::size_t i, std::ptrdiff_t left, std::ptrdiff_t right)
{
    const auto idx = static_cast<std::ptrdiff_t>(i);
    if (left < 0) {
        return s.values[static_cast<std::size_t>(right)];
    }
    if (right < 0) {
        return s.values[static_cast<std::size_t>(left)];
    }
    // Equidistant: the earlier value wins.
    return (idx - left) <= (right - idx) ? s.values[static_cast<std::size_t>(left)]
                                          : s.values[static_cast<std::size_t>(right)];
}

} // namespace detail

/// Fills every missing step. Present values are copied bit-exactly; presence
/// is decided from the input only, so filled values never feed other fills.
inline EnergySeries impute(const EnergySeries& series, ImputationStrategy strategy)
{
    series.validate();
    const std::size_t n = series.size();
    EnergySeries out = series;
    if (series.missing_count() == 0) {
        return out;
    }
    if (series.missing_count() == n && strategy != ImputationStrategy::neighbor_mean_or_zero) {
        throw std::invalid_argument("impute: series has no present values");
    }

    // Nearest present index on each side, -1 when none.
    std::vector<std::ptrdiff_t> left(n, -1);
    std::vector<std::ptrdiff_t> right(n, -1);
    std::ptrdiff_t last = -1;
    for (std::size_t i = 0; i < n; ++i) {
        left[i] = last;
        if (series.present[i] != 0) {
            last = static_cast<std::ptrdiff_t>(i);
        }
    }
    last = -1;
    for (std::size_t i = n; i-- > 0;) {
        right[i] = last;
        if (series.present[i] != 0) {
            last = static_cast<std::ptrdiff_t>(i);
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (series.present[i] != 0) {
            continue;
        }
        double v = 0.0;
        switch (strategy) {
        case ImputationStrategy::nearest_neighbor: v = detail::nearest_fill(series, i, left[i], right[i]); break;
        case ImputationStrategy::linear_interpolation:
            if (left[i] >= 0 && right[i] >= 0) {
                const auto l = static_cast<std::size_t>(left[i]);
                const auto r = static_cast<std::size_t>(right[i]);
                const double frac = static_cast<double>(i - l) / static_cast<double>(r - l);
                v = series.values[l] + frac * (series.values[r] - series.values[l]);
            } else {
                v = detail::nearest_fill(series, i, left[i], right[i]);
            }
            break;
        case ImputationStrategy::historical_averaging: {
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t back = i; back >= lag_hours;) {
                back -= lag_hours;
                if (series.present[back] != 0) {
                    sum += series.values[back];
                    ++count;
                }
            }
            v = count > 0 ? sum / static_cast<double>(count) : detail::nearest_fill(series, i, left[i], right[i]);
            break;
        }
        case ImputationStrategy::neighbor_mean_or_zero: {
            double sum = 0.0;
            int count = 0;
            if (i > 0 && series.present[i - 1] != 0) {
                sum += series.values[i - 1];
                ++count;
            }
            if (i + 1 < n && series.present[i + 1] != 0) {
                sum += series.values[i + 1];
                ++count;
            }
            v = count > 0 ? sum / count : 0.0;
            break;
        }
        }
        out.values[i] = v;
        out.present[i] = 1;
    }
    return out;
}

/// Imputes each range independently so no fill reads across a split boundary.
inline EnergySeries impute_within(const EnergySeries& series, ImputationStrategy strategy,
                                  std::span<const IndexRange> ranges)
{
    EnergySeries out = series;
    for (const auto& r : ranges) {
        EnergySeries part;
        part.timestamps.assign(series.timestamps.begin() + static_cast<std::ptrdiff_t>(r.begin),
                               series.timestamps.begin() + static_cast<std::ptrdiff_t>(r.end));
        part.values.assign(series.values.begin() + static_cast<std::ptrdiff_t>(r.begin),
                           series.values.begin() + static_cast<std::ptrdiff_t>(r.end));
        part.present.assign(series.present.begin() + static_cast<std::ptrdiff_t>(r.begin),
                            series.present.begin() + static_cast<std::ptrdiff_t>(r.end));
        const auto filled = impute(part, strategy);
        std::copy(filled.values.begin(), filled.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(r.begin));
        std::copy(filled.present.begin(), filled.present.end(),
                  out.present.begin() + static_cast<std::ptrdiff_t>(r.begin));
    }
    return out;
}

/// Marks exactly round(frac * N) distinct steps missing.
inline EnergySeries apply_sparsity(const EnergySeries& series, double frac, std::uint64_t seed)
{
    if (!(frac >= 0.0 && frac < 1.0)) {
        throw std::invalid_argument("apply_sparsity: fraction must be in [0, 1)");
    }
    EnergySeries out = series;
    const auto k = static_cast<std::size_t>(std::llround(frac * static_cast<double>(series.size())));
    if (k == 0) {
        return out;
    }
    std::vector<std::size_t> idx(series.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first k slots become a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    for (std::size_t i = 0; i < k; ++i) {
        out.mark_missing(idx[i]);
    }
    return out;
}

/// One sample per step, masks per source availability. A source marked
/// unavailable is zeroed with mask 0; isolated gaps in an available
/// forecast get the mean of their neighbours (or 0) with mask 0. Sparse
/// actuals are filled with the scenario's imputation strategy; absent actuals
/// make every sample proxy-supervised by the physics forecast.
inline std::vector<MaskedSample> assemble_samples(const EnergySeries& dl_forecast, const EnergySeries& ep_forecast,
                                                  const EnergySeries& truth, const ScenarioConfig& scenario)
{
    const std::size_t n = ep_forecast.size();
    if (dl_forecast.size() != n || truth.size() != n) {
        throw std::invalid_argument("assemble_samples: series lengths differ");
    }
    if (dl_forecast.timestamps != ep_forecast.timestamps || truth.timestamps != ep_forecast.timestamps) {
        throw std::invalid_argument("assemble_samples: series timestamps are not aligned");
    }
    if (scenario.truth_mode == TruthMode::absent && !scenario.ep_available) {
        throw std::invalid_argument("assemble_samples: proxy supervision needs the physics forecast");
    }

    const auto source = [](const EnergySeries& s, bool available) {
        std::vector<std::pair<double, int>> out(s.size(), {0.0, 0});
        if (!available) {
            return out;
        }
        const EnergySeries filled = impute(s, ImputationStrategy::neighbor_mean_or_zero);
        for (std::size_t i = 0; i < s.size(); ++i) {
            out[i] = {filled.values[i], s.present[i] != 0 ? 1 : 0};
        }
        return out;
    };
    const auto dl = source(dl_forecast, scenario.dl_available);
    const auto ep = source(ep_forecast, scenario.ep_available);

    EnergySeries actual = truth;
    if (scenario.truth_mode == TruthMode::sparse && truth.missing_count() > 0) {
        actual = impute(truth, scenario.imputation);
    } else if (scenario.truth_mode == TruthMode::full && truth.missing_count() > 0) {
        throw std::invalid_argument("assemble_samples: full-truth scenario has missing actuals");
    }

    std::vector<MaskedSample> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& s = samples[i];
        s.x_d = dl[i].first;
        s.m_d = dl[i].second;
        s.x_e = ep[i].first;
        s.m_e = ep[i].second;
        if (scenario.truth_mode == TruthMode::absent) {
            s.y = s.x_e;
            s.y_is_proxy = true;
        } else {
            s.y = actual.values[i];
        }
    }
    return samples;
}

struct ChannelStats {
    double mean = 0.0;
    double std = 1.0;
    [[nodiscard]] double apply(double v) const noexcept { return (v - mean) / std; }
    [[nodiscard]] double invert(double v) const noexcept { return v * std + mean; }
};

struct NormStats {
    ChannelStats x_d;
    ChannelStats x_e;
    ChannelStats y;
};

inline constexpr double std_floor = 1e-8;

namespace detail {

inline ChannelStats channel_stats(const std::vector<double>& xs)
{
    ChannelStats c;
    if (xs.empty()) {
        return c; // identity transform for a channel with no observations
    }
    double sum = 0.0;
    for (double v : xs) {
        sum += v;
    }
    c.mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double v : xs) {
        ss += (v - c.mean) * (v - c.mean);
    }
    c.std = std::max(std::sqrt(ss / static_cast<double>(xs.size())), std_floor);
    return c;
}

} // namespace detail

/// Population mean/std per channel from the training split only. Forecast
/// channels use entries whose mask is 1; the target channel uses every
/// resolvable target.
inline NormStats fit_norm_stats(std::span<const MaskedSample> train)
{
    if (train.empty()) {
        throw std::invalid_argument("fit_norm_stats: empty training split");
    }
    std::vector<double> xd;
    std::vector<double> xe;
    std::vector<double> y;
    for (const auto& s : train) {
        if (s.m_d == 1) {
            xd.push_back(s.x_d);
        }
        if (s.m_e == 1) {
            xe.push_back(s.x_e);
        }
        y.push_back(resolve_target(s));
    }
    return {detail::channel_stats(xd), detail::channel_stats(xe), detail::channel_stats(y)};
}

/// Affine z-score of x_d, x_e and the target; masks pass through untouched.
inline std::vector<MaskedSample> normalize(std::span<const MaskedSample> samples, const NormStats& st)
{
    std::vector<MaskedSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        MaskedSample n = s;
        n.x_d = st.x_d.apply(s.x_d);
        n.x_e = st.x_e.apply(s.x_e);
        n.y = st.y.apply(resolve_target(s));
        out.push_back(n);
    }
    return out;
}

} // namespace pgmn
