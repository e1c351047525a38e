#pragma once

// Forecast sources for the fusion model: a lumped RC building simulator
// (physics stream), a feed-forward next-hour forecaster (data-driven
// stream), and generators for synthetic weather and ground truth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgmn/numkit.hpp"
#include "pgmn/pipeline.hpp"
#include "pgmn/scenario.hpp"
#include "pgmn/series.hpp"

namespace pgmn {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Building simulator

inline constexpr double air_heat_capacity = 1.2 * 1005.0; // J/(m^3 K)
inline constexpr double storey_height_m = 3.0;
inline constexpr double occupant_gain_w = 100.0;
inline constexpr double solar_aperture = 0.02; // effective glazing m^2 per m^2 floor
inline constexpr double occupied_threshold = 0.05;

struct BuildingParams {
    double envelope_ua_w_per_k = 0.351 * 8000.0;
    double capacitance_j_per_k = 7.5e8;
    double equipment_w_per_m2 = 20.5;
    double floor_area_m2 = 5000.0;
    double occupants = 495.0;
    double heating_setpoint_c = 21.0;
    double cooling_setpoint_c = 23.0;
    double heating_setback_c = 15.0;
    double cooling_setback_c = 28.0;
    double infiltration_ach = 0.7;
    double hvac_efficiency = 2.5;

    /// Infiltration conductance in W/K.
    [[nodiscard]] double infiltration_w_per_k() const noexcept
    {
        return infiltration_ach * floor_area_m2 * storey_height_m * air_heat_capacity / 3600.0;
    }

    [[nodiscard]] double total_ua() const noexcept { return envelope_ua_w_per_k + infiltration_w_per_k(); }

    void validate() const
    {
        const auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw ConfigError(std::string("BuildingParams: ") + name + " must be positive");
            }
        };
        const auto non_negative = [](double v, const char* name) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ConfigError(std::string("BuildingParams: ") + name + " must be non-negative");
            }
        };
        positive(envelope_ua_w_per_k, "envelope_ua_w_per_k");
        positive(capacitance_j_per_k, "capacitance_j_per_k");
        positive(floor_area_m2, "floor_area_m2");
        positive(hvac_efficiency, "hvac_efficiency");
        non_negative(equipment_w_per_m2, "equipment_w_per_m2");
        non_negative(occupants, "occupants");
        non_negative(infiltration_ach, "infiltration_ach");
        if (!(heating_setpoint_c < cooling_setpoint_c)) {
            throw ConfigError("BuildingParams: heating setpoint must be below cooling setpoint");
        }
        if (!(heating_setback_c <= heating_setpoint_c) || !(cooling_setback_c >= cooling_setpoint_c)) {
            throw ConfigError("BuildingParams: setbacks must widen the comfort band");
        }
    }

    static const std::map<std::string, double BuildingParams::*>& fields()
    {
        static const std::map<std::string, double BuildingParams::*> f = {
            {"envelope_ua_w_per_k", &BuildingParams::envelope_ua_w_per_k},
            {"capacitance_j_per_k", &BuildingParams::capacitance_j_per_k},
            {"equipment_w_per_m2", &BuildingParams::equipment_w_per_m2},
            {"floor_area_m2", &BuildingParams::floor_area_m2},
            {"occupants", &BuildingParams::occupants},
            {"heating_setpoint_c", &BuildingParams::heating_setpoint_c},
            {"cooling_setpoint_c", &BuildingParams::cooling_setpoint_c},
            {"heating_setback_c", &BuildingParams::heating_setback_c},
            {"cooling_setback_c", &BuildingParams::cooling_setback_c},
            {"infiltration_ach", &BuildingParams::infiltration_ach},
            {"hvac_efficiency", &BuildingParams::hvac_efficiency},
        };
        return f;
    }
};

/// Parses `key = value` lines ('#' starts a comment). Keys left out keep
/// their defaults; unknown keys are an error.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in)
{
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        }
        out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return out;
}

inline BuildingParams read_building_params(std::istream& in)
{
    BuildingParams p;
    for (const auto& [key, value] : parse_key_values(in)) {
        const auto& f = BuildingParams::fields();
        const auto it = f.find(key);
        if (it == f.end()) {
            throw ConfigError("unknown building parameter '" + key + "'");
        }
        try {
            p.*(it->second) = detail::parse_double(value, key);
        } catch (const FormatError& e) {
            throw ConfigError(e.what());
        }
    }
    p.validate();
    return p;
}

struct WeatherSeries {
    Hour start{};
    std::vector<double> temp_c;
    std::vector<double> solar_w_per_m2;

    [[nodiscard]] std::size_t size() const noexcept { return temp_c.size(); }
    [[nodiscard]] Hour at(std::size_t i) const { return start + std::chrono::hours{static_cast<long>(i)}; }
};

struct OccupancySchedule {
    std::array<double, 168> fraction{}; // Monday 00:00 first

    static OccupancySchedule constant(double v)
    {
        OccupancySchedule s;
        s.fraction.fill(v);
        return s;
    }

    /// Student residence: full overnight, thinner during weekday class hours.
    static OccupancySchedule residence()
    {
        OccupancySchedule s;
        for (int day = 0; day < 7; ++day) {
            const bool weekend = day >= 5;
            for (int h = 0; h < 24; ++h) {
                double v = 0.0;
                if (h < 7) {
                    v = 0.95;
                } else if (h < 9) {
                    v = 0.75;
                } else if (h < 17) {
                    v = weekend ? 0.6 : 0.35;
                } else if (h < 22) {
                    v = weekend ? 0.7 : 0.85;
                } else {
                    v = 0.95;
                }
                s.fraction[static_cast<std::size_t>(day * 24 + h)] = v;
            }
        }
        return s;
    }

    void validate() const
    {
        for (double v : fraction) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ConfigError("OccupancySchedule: fractions must lie in [0,1]");
            }
        }
    }
};

struct SimulationOptions {
    double timestep_s = 3600.0;
    // Defaults to the middle of the occupied comfort band.
    std::optional<double> initial_indoor_c;
};

/// Single-zone explicit RC update with an ideal thermostat: when the
/// free-floating temperature would leave the active band, HVAC supplies
/// exactly the power that lands the zone on the violated setpoint.
inline EnergySeries simulate_physics(const BuildingParams& params, const WeatherSeries& weather,
                                     const OccupancySchedule& schedule, const SimulationOptions& opts = {})
{
    params.validate();
    schedule.validate();
    if (weather.solar_w_per_m2.size() != weather.temp_c.size()) {
        throw std::invalid_argument("simulate_physics: weather columns differ in length");
    }
    const double dt = opts.timestep_s;
    const double c = params.capacitance_j_per_k;
    const double ua = params.total_ua();
    if (dt * ua / c >= 1.0) {
        throw ConfigError("simulate_physics: time step too long for the thermal time constant");
    }
    double t_in = opts.initial_indoor_c.value_or(0.5 * (params.heating_setpoint_c + params.cooling_setpoint_c));
    std::vector<double> kwh(weather.size());
    for (std::size_t i = 0; i < weather.size(); ++i) {
        const double occ = schedule.fraction[static_cast<std::size_t>(hour_of_week(weather.at(i)))];
        const bool occupied = occ >= occupied_threshold;
        const double heat_sp = occupied ? params.heating_setpoint_c : params.heating_setback_c;
        const double cool_sp = occupied ? params.cooling_setpoint_c : params.cooling_setback_c;
        const double equipment = params.equipment_w_per_m2 * params.floor_area_m2 * occ;
        const double q_int = equipment + params.occupants * occupant_gain_w * occ
                             + weather.solar_w_per_m2[i] * params.floor_area_m2 * solar_aperture;
        const double passive = ua * (weather.temp_c[i] - t_in) + q_int;
        const double t_free = t_in + dt / c * passive;
        double q_hvac = 0.0;
        if (t_free < heat_sp) {
            q_hvac = (heat_sp - t_in) * c / dt - passive;
            t_in = heat_sp;
        } else if (t_free > cool_sp) {
            q_hvac = (cool_sp - t_in) * c / dt - passive;
            t_in = cool_sp;
        } else {
            t_in = t_free;
        }
        kwh[i] = (std::abs(q_hvac) / params.hvac_efficiency + equipment) * dt / 3.6e6;
    }
    return {weather.start, std::move(kwh)};
}

struct WeatherOptions {
    Hour start = std::chrono::sys_days{std::chrono::year{2023} / 1 / 1};
    double mean_c = 8.0;
    double seasonal_amp_c = 13.0;
    double diurnal_amp_c = 5.0;
    double noise_std_c = 2.0;
    double noise_persistence = 0.97; // AR(1) coefficient, hourly
    double solar_peak_w_per_m2 = 700.0;
};

inline constexpr double coldest_day_of_year = 15.0; // mid-January
inline constexpr double coldest_hour_of_day = 3.0;

/// Seasonal + diurnal cosines (minimum mid-January at 03:00) plus smooth
/// AR(1) noise. Zero noise gives the exact analytic profile.
inline WeatherSeries make_weather(std::size_t hours, std::uint64_t seed, const WeatherOptions& opts = {})
{
    using std::numbers::pi;
    WeatherSeries w;
    w.start = opts.start;
    w.temp_c.resize(hours);
    w.solar_w_per_m2.resize(hours);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double phi = opts.noise_persistence;
    const double innov = opts.noise_std_c * std::sqrt(1.0 - phi * phi);
    double noise = opts.noise_std_c > 0.0 ? opts.noise_std_c * normal(rng) : 0.0;
    for (std::size_t i = 0; i < hours; ++i) {
        const auto cal = calendar_of(w.at(i));
        const double hour_of_year = (cal.day_of_year - 1) * 24.0 + cal.hour;
        const double season = std::cos(2.0 * pi * (hour_of_year - coldest_day_of_year * 24.0) / 8760.0);
        const double day = std::cos(2.0 * pi * (cal.hour - coldest_hour_of_day) / 24.0);
        if (i > 0 && opts.noise_std_c > 0.0) {
            noise = phi * noise + innov * normal(rng);
        }
        w.temp_c[i] = opts.mean_c - opts.seasonal_amp_c * season - opts.diurnal_amp_c * day + noise;
        const double daylight = std::max(0.0, std::sin(pi * (cal.hour - 6.0) / 12.0));
        w.solar_w_per_m2[i] = opts.solar_peak_w_per_m2 * daylight * (0.65 - 0.35 * season);
    }
    return w;
}

/// Occupant-behaviour load shape in [0, 1.3]: an evening peak, heavier on weekends.
inline double weekly_behavior(Hour t)
{
    const auto cal = calendar_of(t);
    const double evening = std::max(0.0, std::cos(2.0 * std::numbers::pi * (cal.hour - 20.0) / 24.0));
    return evening + (cal.day_of_week >= 5 ? 0.3 : 0.0);
}

/// truth = physics + bias + behavior_amp * weekly pattern + N(0, noise_std),
/// clamped at 0. Missing physics steps stay missing.
inline EnergySeries make_truth(const EnergySeries& physics, double bias, double noise_std, double behavior_amp,
                               std::uint64_t seed)
{
    if (!(noise_std >= 0.0)) {
        throw std::invalid_argument("make_truth: noise_std must be non-negative");
    }
    EnergySeries out = physics;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double eps = noise_std > 0.0 ? noise_std * normal(rng) : 0.0;
        if (out.present[i] == 0) {
            continue;
        }
        double v = physics.values[i] + bias;
        if (behavior_amp != 0.0) {
            v += behavior_amp * weekly_behavior(physics.timestamps[i]);
        }
        v += eps;
        out.values[i] = std::max(0.0, v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Data-driven baseline

inline constexpr std::size_t forecaster_inputs = 5 + lag_hours;

inline std::array<double, forecaster_inputs> feature_vector(const FeatureRow& r)
{
    std::array<double, forecaster_inputs> x{};
    x[0] = r.temp_c;
    x[1] = r.day_of_month;
    x[2] = r.day_of_year;
    x[3] = r.day_of_week;
    x[4] = r.hour;
    std::copy(r.lags.begin(), r.lags.end(), x.begin() + 5);
    return x;
}

/// Two ReLU hidden layers and a linear head.
struct MlpParams {
    Mat64 w1;
    Vec64 b1;
    Mat64 w2;
    Vec64 b2;
    Vec64 w3;
    double b3 = 0.0;

    MlpParams() = default;
    MlpParams(std::size_t inputs, std::size_t hidden)
        : w1(hidden, inputs), b1(hidden), w2(hidden, hidden), b2(hidden), w3(hidden)
    {
    }
    MlpParams(zeros_like_t, const MlpParams& shape) : MlpParams(shape.w1.cols, shape.w1.rows) {}

    std::vector<std::span<double>> tensors()
    {
        return {w1.values, b1.values, w2.values, b2.values, w3.values, std::span<double>(&b3, 1)};
    }
    std::vector<std::span<const double>> tensors() const
    {
        return {std::span<const double>(w1.values), std::span<const double>(b1.values),
                std::span<const double>(w2.values), std::span<const double>(b2.values),
                std::span<const double>(w3.values), std::span<const double>(&b3, 1)};
    }
    bool operator==(const MlpParams&) const = default;
};

struct MlpTrace {
    Vec64 pre1, h1, pre2, h2;
    double out = 0.0;
};

inline MlpTrace mlp_forward(const MlpParams& p, std::span<const double> x)
{
    MlpTrace t;
    t.pre1 = affine(p.w1, x, p.b1.values);
    t.h1 = relu(t.pre1);
    t.pre2 = affine(p.w2, t.h1, p.b2);
    t.h2 = relu(t.pre2);
    t.out = dot(p.w3.values, t.h2.values) + p.b3;
    return t;
}

/// Accumulates scale * d(out - y)^2 / dθ.
inline double mlp_backward(const MlpParams& p, std::span<const double> x, const MlpTrace& t, double y,
                           MlpParams& g, double scale)
{
    const double r = t.out - y;
    const double go = scale * 2.0 * r;
    const std::size_t h = p.w1.rows;
    g.b3 += go;
    std::vector<double> d2(h);
    for (std::size_t i = 0; i < h; ++i) {
        g.w3[i] += go * t.h2[i];
        d2[i] = go * p.w3[i] * relu_grad(t.pre2[i]);
    }
    std::vector<double> d1(h, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        if (d2[i] == 0.0) {
            continue;
        }
        g.b2[i] += d2[i];
        for (std::size_t j = 0; j < h; ++j) {
            g.w2(i, j) += d2[i] * t.h1[j];
            d1[j] += d2[i] * p.w2(i, j);
        }
    }
    for (std::size_t j = 0; j < h; ++j) {
        const double a = d1[j] * relu_grad(t.pre1[j]);
        if (a == 0.0) {
            continue;
        }
        g.b1[j] += a;
        double* row = g.w1.values.data() + j * p.w1.cols;
        for (std::size_t k = 0; k < x.size(); ++k) {
            row[k] += a * x[k];
        }
    }
    return r * r;
}

struct ForecasterConfig {
    std::size_t hidden = 32;
    double eta = 1e-3;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    // Tail of the training split held out for early stopping.
    double holdout_frac = 0.15;
};

struct BaselineForecaster {
    MlpParams params;
    std::array<ChannelStats, forecaster_inputs> input_stats{};
    ChannelStats target_stats;
    std::size_t epochs_run = 0;

    [[nodiscard]] double predict_one(const FeatureRow& r) const
    {
        auto x = feature_vector(r);
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] = input_stats[k].apply(x[k]);
        }
        return target_stats.invert(mlp_forward(params, x).out);
    }
};

namespace detail {

inline std::size_t series_index(const EnergySeries& s, Hour t)
{
    const auto off = (t - s.timestamps.front()).count();
    if (off < 0 || static_cast<std::size_t>(off) >= s.size()) {
        throw std::invalid_argument("timestamp " + format_timestamp(t) + " outside series");
    }
    return static_cast<std::size_t>(off);
}

} // namespace detail

/// Fits the next-hour forecaster on rows whose target hour lies in the
/// training split. Early stopping uses the tail of the training split, so
/// validation and test rows are never read.
inline BaselineForecaster train_baseline_forecaster(std::span<const FeatureRow> features, const EnergySeries& truth,
                                                    const SplitSpec& split, std::uint64_t seed,
                                                    const ForecasterConfig& cfg = {})
{
    if (truth.size() == 0) {
        throw std::invalid_argument("train_baseline_forecaster: empty truth series");
    }
    const auto ranges = chronological_split(truth.size(), split);
    std::vector<std::size_t> rows;
    std::vector<std::size_t> target_idx;
    for (std::size_t r = 0; r < features.size(); ++r) {
        const auto ti = detail::series_index(truth, features[r].timestamp);
        if (ranges.train.contains(ti) && truth.present[ti] != 0) {
            rows.push_back(r);
            target_idx.push_back(ti);
        }
    }
    const auto n_hold = static_cast<std::size_t>(std::floor(cfg.holdout_frac * static_cast<double>(rows.size())));
    if (rows.size() < 50 || n_hold == 0) {
        throw std::invalid_argument("train_baseline_forecaster: insufficient training rows ("
                                    + std::to_string(rows.size()) + ")");
    }
    const std::size_t n_fit = rows.size() - n_hold;

    BaselineForecaster f;
    {
        std::array<std::vector<double>, forecaster_inputs> cols;
        std::vector<double> ys;
        for (std::size_t i = 0; i < n_fit; ++i) {
            const auto x = feature_vector(features[rows[i]]);
            for (std::size_t k = 0; k < x.size(); ++k) {
                cols[k].push_back(x[k]);
            }
            ys.push_back(truth.values[target_idx[i]]);
        }
        for (std::size_t k = 0; k < forecaster_inputs; ++k) {
            f.input_stats[k] = detail::channel_stats(cols[k]);
        }
        f.target_stats = detail::channel_stats(ys);
    }

    std::vector<std::array<double, forecaster_inputs>> xs(rows.size());
    std::vector<double> ys(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        xs[i] = feature_vector(features[rows[i]]);
        for (std::size_t k = 0; k < forecaster_inputs; ++k) {
            xs[i][k] = f.input_stats[k].apply(xs[i][k]);
        }
        ys[i] = f.target_stats.apply(truth.values[target_idx[i]]);
    }

    std::mt19937_64 rng(seed);
    MlpParams p(forecaster_inputs, cfg.hidden);
    const auto init = [&rng](std::span<double> t, std::size_t fan_in) {
        const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : t) {
            v = dist(rng);
        }
    };
    init(p.w1.values, forecaster_inputs);
    init(p.w2.values, cfg.hidden);
    init(p.w3.values, cfg.hidden);

    const auto holdout_mse = [&](const MlpParams& q) {
        double s = 0.0;
        for (std::size_t i = n_fit; i < rows.size(); ++i) {
            s += mse(ys[i], mlp_forward(q, xs[i]).out);
        }
        return s / static_cast<double>(n_hold);
    };

    AdamState adam(cfg.eta);
    std::vector<std::size_t> order(n_fit);
    std::iota(order.begin(), order.end(), std::size_t{0});
    MlpParams best = p;
    double best_loss = holdout_mse(p);
    std::size_t since_best = 0;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n_fit; start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, n_fit);
            MlpParams g(zeros_like, p);
            const double scale = 1.0 / static_cast<double>(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                const auto& x = xs[order[i]];
                mlp_backward(p, x, mlp_forward(p, x), ys[order[i]], g, scale);
            }
            adam_step(p, g, adam);
        }
        f.epochs_run = epoch + 1;
        const double loss = holdout_mse(p);
        if (!std::isfinite(loss)) {
            throw NumericError("train_baseline_forecaster: non-finite loss at epoch " + std::to_string(epoch));
        }
        if (loss < best_loss) {
            best_loss = loss;
            best = p;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    f.params = best;
    return f;
}

/// Next-hour predictions, one per feature row, in kWh.
inline EnergySeries forecast_dl(const BaselineForecaster& f, std::span<const FeatureRow> features)
{
    EnergySeries out;
    out.timestamps.reserve(features.size());
    out.values.reserve(features.size());
    for (const auto& r : features) {
        out.timestamps.push_back(r.timestamp);
        out.values.push_back(f.predict_one(r));
    }
    out.present.assign(out.values.size(), 1);
    return out;
}

/// Day-ahead forecasts: each day is issued at midnight from observations up
/// to the previous hour and rolled forward recursively, feeding predictions
/// back as lags. Hours without a full lag history are marked missing.
inline EnergySeries forecast_day_ahead(const BaselineForecaster& f, const EnergySeries& observed,
                                       std::span<const double> temp_c)
{
    if (temp_c.size() != observed.size()) {
        throw std::invalid_argument("forecast_day_ahead: temperature and energy lengths differ");
    }
    EnergySeries out = observed;
    std::fill(out.values.begin(), out.values.end(), missing_sentinel);
    std::fill(out.present.begin(), out.present.end(), std::uint8_t{0});
    for (std::size_t t = lag_hours; t < observed.size(); ++t) {
        const auto cal = calendar_of(observed.timestamps[t]);
        const std::size_t origin = t >= static_cast<std::size_t>(cal.hour) ? t - static_cast<std::size_t>(cal.hour) : 0;
        FeatureRow r;
        r.timestamp = observed.timestamps[t];
        r.temp_c = temp_c[t];
        r.day_of_month = cal.day_of_month;
        r.day_of_year = cal.day_of_year;
        r.day_of_week = cal.day_of_week;
        r.hour = cal.hour;
        for (std::size_t k = 0; k < lag_hours; ++k) {
            const std::size_t src = t - lag_hours + k;
            const bool predicted = src >= origin && out.present[src] != 0;
            if (!predicted && observed.present[src] == 0) {
                throw std::invalid_argument("forecast_day_ahead: observed lag missing at index " + std::to_string(src));
            }
            r.lags[k] = predicted ? out.values[src] : observed.values[src];
        }
        out.values[t] = f.predict_one(r);
        out.present[t] = 1;
    }
    return out;
}

} // namespace pgmn
