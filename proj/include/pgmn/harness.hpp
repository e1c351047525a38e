#pragma once

// End-to-end experiment driver: synthetic fixtures, the five availability
// scenarios, the memory and imputation ablations, and report emission.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pgmn/checkpoint.hpp"
#include "pgmn/metrics.hpp"
#include "pgmn/model.hpp"
#include "pgmn/pipeline.hpp"
#include "pgmn/scenario.hpp"
#include "pgmn/series.hpp"
#include "pgmn/surrogates.hpp"
#include "pgmn/train.hpp"

namespace pgmn {

inline constexpr const char* version_stamp = "pgmn 0.1.0";

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent streams derived from one master seed.
struct SeedPlan {
    std::uint64_t weather, truth, sparsity, init, train, forecaster;

    static SeedPlan from(std::uint64_t master)
    {
        return {splitmix64(master ^ 0x1ULL), splitmix64(master ^ 0x2ULL), splitmix64(master ^ 0x3ULL),
                splitmix64(master ^ 0x4ULL), splitmix64(master ^ 0x5ULL), splitmix64(master ^ 0x6ULL)};
    }
};

struct FixtureConfig {
    std::size_t hours = 8760;
    double truth_bias_kwh = 20.0;
    double truth_noise_kwh = 8.0;
    double behavior_amp_kwh = 30.0;
    BuildingParams building;
    WeatherOptions weather;
    ForecasterConfig forecaster;
    PgmnDims dims;

    static FixtureConfig fast()
    {
        FixtureConfig f;
        f.hours = 2160;
        return f;
    }
};

/// The physics stream runs on noise-free typical-year weather, the ground
/// truth on the seeded actual weather, so the two differ by more than a
/// constant offset.
struct Fixture {
    WeatherSeries actual_weather;
    WeatherSeries typical_weather;
    EnergySeries physics;
    EnergySeries truth;
};

inline Fixture build_fixture(const FixtureConfig& cfg, std::uint64_t master_seed)
{
    const auto seeds = SeedPlan::from(master_seed);
    Fixture f;
    f.actual_weather = make_weather(cfg.hours, seeds.weather, cfg.weather);
    WeatherOptions typical = cfg.weather;
    typical.noise_std_c = 0.0;
    f.typical_weather = make_weather(cfg.hours, seeds.weather, typical);
    const auto schedule = OccupancySchedule::residence();
    f.physics = simulate_physics(cfg.building, f.typical_weather, schedule);
    const auto actual_physics = simulate_physics(cfg.building, f.actual_weather, schedule);
    f.truth = make_truth(actual_physics, cfg.truth_bias_kwh, cfg.truth_noise_kwh, cfg.behavior_amp_kwh, seeds.truth);
    return f;
}

struct MethodResult {
    std::string method;
    metrics::MetricReport report;
};

struct PredictionTable {
    std::vector<Hour> timestamps;
    std::vector<double> actual;
    std::optional<std::vector<double>> dl;
    std::optional<std::vector<double>> ep;
    std::vector<double> pgmn;
};

struct TrainedModel {
    std::string label;
    Checkpoint checkpoint;
    TrainHistory history;
};

struct RunReport {
    int scenario = 0;
    std::string config_echo;
    std::vector<MethodResult> methods;
    PredictionTable predictions;
    std::vector<TrainedModel> models;
    double wall_seconds = 0.0;
    std::string version = version_stamp;

    [[nodiscard]] const metrics::MetricReport& metric(const std::string& method) const
    {
        for (const auto& m : methods) {
            if (m.method == method) {
                return m.report;
            }
        }
        throw std::out_of_range("no method '" + method + "' in report");
    }
};

inline std::string describe(const ScenarioConfig& c)
{
    std::ostringstream os;
    const char* truth = c.truth_mode == TruthMode::full ? "full" : c.truth_mode == TruthMode::sparse ? "sparse" : "absent";
    os << "id=" << c.id << " dl_available=" << c.dl_available << " ep_available=" << c.ep_available
       << " truth_mode=" << truth << " sparse_frac=" << c.sparse_frac << " imputation=" << to_string(c.imputation)
       << " split=" << c.split.train_frac << "/" << c.split.val_frac << "/" << c.split.test_frac
       << " eta=" << c.train.eta << " optimizer=" << (c.train.optimizer == OptimizerKind::adam ? "adam" : "sgd")
       << " max_epochs=" << c.train.max_epochs << " batch_size=" << c.train.batch_size
       << " patience=" << c.train.early_stop_patience << " memory_unit=" << c.memory_unit_enabled
       << " seed=" << c.seed;
    return os.str();
}

/// Everything a scenario needs before PgMN training: aligned input streams
/// (first lag day dropped), training targets, split ranges and the actuals
/// used for evaluation.
struct PreparedScenario {
    EnergySeries dl;         // day-ahead data-driven forecast; all-missing when unavailable
    EnergySeries ep;         // physics forecast
    EnergySeries targets;    // what training sees: full, imputed-sparse, or placeholder
    EnergySeries actual;     // complete ground truth, read only at evaluation
    EnergySeries missing_actuals; // sparse scenario: actuals with the removed steps marked
    SplitRanges ranges;
};

namespace detail {

inline EnergySeries slice(const EnergySeries& s, std::size_t begin)
{
    EnergySeries out;
    out.timestamps.assign(s.timestamps.begin() + static_cast<std::ptrdiff_t>(begin), s.timestamps.end());
    out.values.assign(s.values.begin() + static_cast<std::ptrdiff_t>(begin), s.values.end());
    out.present.assign(s.present.begin() + static_cast<std::ptrdiff_t>(begin), s.present.end());
    return out;
}

inline std::vector<double> take(std::span<const double> v, IndexRange r)
{
    return {v.begin() + static_cast<std::ptrdiff_t>(r.begin), v.begin() + static_cast<std::ptrdiff_t>(r.end)};
}

} // namespace detail

inline PreparedScenario prepare_scenario(const ScenarioConfig& cfg, const FixtureConfig& fx, const Fixture& fixture,
                                         std::optional<BaselineForecaster>* forecaster_cache = nullptr)
{
    const auto seeds = SeedPlan::from(cfg.seed);
    const std::size_t n = fixture.truth.size();
    const auto full_ranges = chronological_split(n, cfg.split);
    const std::array<IndexRange, 3> split_list{full_ranges.train, full_ranges.validation, full_ranges.test};

    EnergySeries observed = fixture.truth; // what sensors report
    if (cfg.truth_mode == TruthMode::sparse) {
        observed = apply_sparsity(fixture.truth, cfg.sparse_frac, seeds.sparsity);
    }

    PreparedScenario p;
    EnergySeries dl_full = fixture.truth;
    std::fill(dl_full.values.begin(), dl_full.values.end(), missing_sentinel);
    std::fill(dl_full.present.begin(), dl_full.present.end(), std::uint8_t{0});
    if (cfg.dl_available) {
        const auto lags = impute_within(observed, ImputationStrategy::linear_interpolation, split_list);
        std::optional<BaselineForecaster> local;
        auto& slot = forecaster_cache != nullptr ? *forecaster_cache : local;
        if (!slot) {
            const auto features = build_feature_rows(lags, fixture.actual_weather.temp_c);
            // Only hours inside the PgMN training range may supervise the forecaster.
            EnergySeries fit_targets = observed;
            const auto trimmed = chronological_split(n - lag_hours, cfg.split);
            for (std::size_t i = lag_hours + trimmed.train.end; i < n; ++i) {
                fit_targets.present[i] = 0;
            }
            slot = train_baseline_forecaster(features, fit_targets, cfg.split, seeds.forecaster, fx.forecaster);
        }
        dl_full = forecast_day_ahead(*slot, lags, fixture.actual_weather.temp_c);
    }

    EnergySeries ep_full = fixture.physics;
    if (!cfg.ep_available) {
        std::fill(ep_full.values.begin(), ep_full.values.end(), missing_sentinel);
        std::fill(ep_full.present.begin(), ep_full.present.end(), std::uint8_t{0});
    }

    EnergySeries targets = fixture.truth;
    if (cfg.truth_mode == TruthMode::sparse) {
        targets = impute_within(observed, cfg.imputation, split_list);
    }

    p.dl = detail::slice(dl_full, lag_hours);
    p.ep = detail::slice(ep_full, lag_hours);
    p.targets = detail::slice(targets, lag_hours);
    p.actual = detail::slice(fixture.truth, lag_hours);
    p.missing_actuals = detail::slice(observed, lag_hours);
    p.ranges = chronological_split(p.actual.size(), cfg.split);
    return p;
}

struct TrainOutcome {
    std::vector<double> test_predictions; // kWh
    TrainedModel model;
};

inline TrainOutcome train_pgmn(const std::vector<MaskedSample>& samples, const SplitRanges& ranges,
                               const ScenarioConfig& cfg, const PgmnDims& dims, bool memory_unit,
                               const std::string& label)
{
    const auto seeds = SeedPlan::from(cfg.seed);
    const std::span<const MaskedSample> all(samples);
    const auto train_raw = all.subspan(ranges.train.begin, ranges.train.size());
    const auto stats = fit_norm_stats(train_raw);
    const auto train_n = normalize(train_raw, stats);
    const auto val_n = normalize(all.subspan(ranges.validation.begin, ranges.validation.size()), stats);
    const auto test_n = normalize(all.subspan(ranges.test.begin, ranges.test.size()), stats);

    TrainConfig tc = cfg.train;
    tc.seed = seeds.train;
    auto init = init_params(dims, seeds.init, InitOptions{.random_memory = false, .memory_unit = memory_unit});
    auto result = train(train_n, std::move(init), tc, val_n);

    TrainOutcome out;
    out.test_predictions = predict(test_n, result.params);
    for (double& v : out.test_predictions) {
        v = stats.y.invert(v);
    }
    out.model = {label, {std::move(result.params), stats}, std::move(result.history)};
    return out;
}

inline RunReport run_scenario(const ScenarioConfig& cfg, const FixtureConfig& fx, const Fixture& fixture,
                              std::optional<BaselineForecaster>* forecaster_cache = nullptr)
{
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto prep = prepare_scenario(cfg, fx, fixture, forecaster_cache);
    const auto samples = assemble_samples(prep.dl, prep.ep, prep.targets, cfg);
    auto outcome = train_pgmn(samples, prep.ranges, cfg, fx.dims, cfg.memory_unit_enabled,
                              "scenario" + std::to_string(cfg.id));

    RunReport rep;
    rep.scenario = cfg.id;
    rep.config_echo = describe(cfg);
    const auto test = prep.ranges.test;
    auto& pt = rep.predictions;
    pt.timestamps.assign(prep.actual.timestamps.begin() + static_cast<std::ptrdiff_t>(test.begin),
                         prep.actual.timestamps.begin() + static_cast<std::ptrdiff_t>(test.end));
    pt.actual = detail::take(prep.actual.values, test);
    if (cfg.dl_available) {
        pt.dl = detail::take(prep.dl.values, test);
        rep.methods.push_back({"DL", metrics::evaluate(pt.actual, *pt.dl)});
    }
    if (cfg.ep_available) {
        pt.ep = detail::take(prep.ep.values, test);
        rep.methods.push_back({"EP", metrics::evaluate(pt.actual, *pt.ep)});
    }
    pt.pgmn = outcome.test_predictions;
    rep.methods.push_back({"PgMN", metrics::evaluate(pt.actual, pt.pgmn)});
    rep.models.push_back(std::move(outcome.model));
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

struct MemoryAblation {
    RunReport report; // methods: DL, EP, PgMN, PgMN-noMU
    std::vector<double> without_mu;
};

inline MemoryAblation run_ablation_mu(const ScenarioConfig& cfg, const FixtureConfig& fx, const Fixture& fixture,
                                      std::optional<BaselineForecaster>* forecaster_cache = nullptr)
{
    if (cfg.id != 1) {
        throw std::invalid_argument("memory ablation runs on scenario 1");
    }
    MemoryAblation out;
    ScenarioConfig with = cfg;
    with.memory_unit_enabled = true;
    out.report = run_scenario(with, fx, fixture, forecaster_cache);
    const auto t0 = std::chrono::steady_clock::now();
    const auto prep = prepare_scenario(with, fx, fixture, forecaster_cache);
    const auto samples = assemble_samples(prep.dl, prep.ep, prep.targets, with);
    auto ablated = train_pgmn(samples, prep.ranges, with, fx.dims, false, "ablation_mu_without");
    out.without_mu = ablated.test_predictions;
    out.report.methods.push_back({"PgMN-noMU", metrics::evaluate(out.report.predictions.actual, out.without_mu)});
    out.report.models.push_back(std::move(ablated.model));
    out.report.wall_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

struct ImputationAblation {
    std::vector<std::pair<ImputationStrategy, metrics::MetricReport>> rows;
    std::vector<std::vector<std::uint8_t>> missing_masks; // per run, over the trimmed series
    std::vector<TrainedModel> models;
};

inline ImputationAblation run_ablation_imputation(const ScenarioConfig& cfg, const FixtureConfig& fx,
                                                  const Fixture& fixture,
                                                  std::optional<BaselineForecaster>* forecaster_cache = nullptr)
{
    if (cfg.id != 2) {
        throw std::invalid_argument("imputation ablation runs on scenario 2");
    }
    ImputationAblation out;
    for (auto strategy : {ImputationStrategy::nearest_neighbor, ImputationStrategy::historical_averaging,
                          ImputationStrategy::linear_interpolation}) {
        ScenarioConfig c = cfg;
        c.imputation = strategy;
        c.validate();
        const auto prep = prepare_scenario(c, fx, fixture, forecaster_cache);
        const auto samples = assemble_samples(prep.dl, prep.ep, prep.targets, c);
        auto o = train_pgmn(samples, prep.ranges, c, fx.dims, c.memory_unit_enabled,
                            "ablation_imputation_" + to_string(strategy));
        const auto actual = detail::take(prep.actual.values, prep.ranges.test);
        out.rows.emplace_back(strategy, metrics::evaluate(actual, o.test_predictions));
        out.missing_masks.push_back(prep.missing_actuals.present);
        out.models.push_back(std::move(o.model));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report emission

inline void write_text(const std::filesystem::path& path, const std::string& body)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << body;
}

inline std::string predictions_csv(const PredictionTable& t)
{
    std::ostringstream os;
    os << "timestamp,actual,dl,ep,pgmn\n";
    for (std::size_t i = 0; i < t.timestamps.size(); ++i) {
        os << format_timestamp(t.timestamps[i]) << ',' << format_value(t.actual[i]) << ',';
        if (t.dl) {
            os << format_value((*t.dl)[i]);
        }
        os << ',';
        if (t.ep) {
            os << format_value((*t.ep)[i]);
        }
        os << ',' << format_value(t.pgmn[i]) << '\n';
    }
    return os.str();
}

inline std::string fixed2(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string signed2(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.2f", v);
    return buf;
}

/// Samplewise comparison with the memory unit on and off. Cells for the two
/// model columns read "prediction (prediction - actual)"; the last row holds
/// each variant's mean absolute signed error.
inline std::string memory_ablation_csv(const MemoryAblation& a)
{
    const auto& t = a.report.predictions;
    std::ostringstream os;
    os << "DL,EP,Actual Energy,PgMN (With MU),PgMN (Without MU)\n";
    double abs_with = 0.0;
    double abs_without = 0.0;
    for (std::size_t i = 0; i < t.actual.size(); ++i) {
        const double ew = t.pgmn[i] - t.actual[i];
        const double eo = a.without_mu[i] - t.actual[i];
        abs_with += std::abs(ew);
        abs_without += std::abs(eo);
        os << fixed2((*t.dl)[i]) << ',' << fixed2((*t.ep)[i]) << ',' << fixed2(t.actual[i]) << ','
           << fixed2(t.pgmn[i]) << " (" << signed2(ew) << ")," << fixed2(a.without_mu[i]) << " (" << signed2(eo)
           << ")\n";
    }
    const auto n = static_cast<double>(t.actual.size());
    os << "Mean Error,,," << fixed2(abs_with / n) << ',' << fixed2(abs_without / n) << '\n';
    return os.str();
}

inline std::string history_rows(const TrainedModel& m)
{
    std::ostringstream os;
    for (std::size_t e = 0; e < m.history.train_mse.size(); ++e) {
        os << m.label << ',' << e << ',' << metrics::format_sig6(m.history.train_mse[e]) << ',';
        if (e < m.history.val_mse.size()) {
            os << metrics::format_sig6(m.history.val_mse[e]);
        }
        os << '\n';
    }
    return os.str();
}

/// Physics stream against ground truth at hourly and monthly granularity.
inline std::string calibration_csv(const Fixture& f)
{
    std::ostringstream os;
    os << "interval,measured_kwh,simulated_kwh,nmbe,cv_rmse\n";
    const auto row = [&os](const char* name, const std::vector<double>& y, const std::vector<double>& s) {
        double ty = 0.0;
        double ts = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            ty += y[i];
            ts += s[i];
        }
        os << name << ',' << metrics::format_sig6(ty) << ',' << metrics::format_sig6(ts) << ','
           << metrics::format_sig6(metrics::nmbe(y, s)) << ',' << metrics::format_sig6(metrics::cv_rmse(y, s)) << '\n';
    };
    row("hourly", f.truth.values, f.physics.values);
    std::map<int, std::pair<double, double>> months;
    for (std::size_t i = 0; i < f.truth.size(); ++i) {
        const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(f.truth.timestamps[i])};
        const int key = static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month()));
        months[key].first += f.truth.values[i];
        months[key].second += f.physics.values[i];
    }
    std::vector<double> my;
    std::vector<double> ms;
    for (const auto& [k, v] : months) {
        my.push_back(v.first);
        ms.push_back(v.second);
    }
    row("monthly", my, ms);
    return os.str();
}

struct RunAllOptions {
    std::uint64_t seed = 42;
    FixtureConfig fixture;
    // Applied to every scenario preset (everything except the id-bound flags).
    std::optional<ScenarioConfig> overrides;
};

class StageError : public std::runtime_error {
public:
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(stage)
    {
    }
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Harness runs use minibatches of 32; the library default stays full-epoch.
inline constexpr std::size_t harness_batch_size = 32;

inline ScenarioConfig scenario_for(int id, const RunAllOptions& opts)
{
    ScenarioConfig c = ScenarioConfig::preset(id);
    c.train.batch_size = harness_batch_size;
    if (opts.overrides) {
        const auto& o = *opts.overrides;
        c.imputation = o.imputation;
        c.split = o.split;
        c.train = o.train;
        if (id == 2) {
            c.sparse_frac = o.sparse_frac > 0.0 ? o.sparse_frac : c.sparse_frac;
        }
    }
    c.seed = opts.seed;
    return c;
}

struct RunAllSummary {
    std::vector<RunReport> scenarios;
    MemoryAblation memory;
    ImputationAblation imputation;
};

/// Runs scenarios 1-5 and both ablations, writing every report into out_dir.
inline RunAllSummary run_all(const std::filesystem::path& out_dir, const RunAllOptions& opts)
{
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(out_dir);
    std::ostringstream timing;
    const auto stage = [&](const std::string& name, auto&& fn) {
        const auto s0 = std::chrono::steady_clock::now();
        try {
            fn();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
        timing << name << " " << std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count()
               << " s\n";
    };

    Fixture fixture;
    stage("fixture", [&] { fixture = build_fixture(opts.fixture, opts.seed); });

    RunAllSummary summary;
    std::optional<BaselineForecaster> full_forecaster;
    std::optional<BaselineForecaster> sparse_forecaster;
    for (int id = 1; id <= 5; ++id) {
        stage("scenario" + std::to_string(id), [&] {
            auto* cache = id == 2 ? &sparse_forecaster : &full_forecaster;
            summary.scenarios.push_back(run_scenario(scenario_for(id, opts), opts.fixture, fixture, cache));
        });
    }
    stage("ablation_mu", [&] {
        summary.memory = run_ablation_mu(scenario_for(1, opts), opts.fixture, fixture, &full_forecaster);
    });
    stage("ablation_imputation", [&] {
        summary.imputation =
            run_ablation_imputation(scenario_for(2, opts), opts.fixture, fixture, &sparse_forecaster);
    });

    stage("write_reports", [&] {
        std::ostringstream table;
        table << metrics::csv_header << '\n';
        std::ostringstream hist;
        hist << "model,epoch,train_mse,val_mse\n";
        for (const auto& r : summary.scenarios) {
            for (const auto& m : r.methods) {
                table << metrics::to_csv_row(std::to_string(r.scenario), m.method, m.report) << '\n';
            }
            write_text(out_dir / ("predictions_scenario" + std::to_string(r.scenario) + ".csv"),
                       predictions_csv(r.predictions));
            for (const auto& m : r.models) {
                save_checkpoint((out_dir / (m.label + ".ckpt")).string(), m.checkpoint);
                hist << history_rows(m);
            }
        }
        write_text(out_dir / "scenario_table.csv", table.str());

        write_text(out_dir / "ablation_mu.csv", memory_ablation_csv(summary.memory));
        std::ostringstream mu;
        mu << metrics::csv_header << '\n';
        for (const auto& m : summary.memory.report.methods) {
            mu << metrics::to_csv_row("1", m.method, m.report) << '\n';
        }
        write_text(out_dir / "ablation_mu_metrics.csv", mu.str());
        for (const auto& m : summary.memory.report.models) {
            if (m.label == "ablation_mu_without") {
                save_checkpoint((out_dir / (m.label + ".ckpt")).string(), m.checkpoint);
                hist << history_rows(m);
            }
        }

        std::ostringstream imp;
        imp << metrics::csv_header << '\n';
        for (const auto& [strategy, rep] : summary.imputation.rows) {
            imp << metrics::to_csv_row("2", "PgMN+" + to_string(strategy), rep) << '\n';
        }
        write_text(out_dir / "ablation_imputation.csv", imp.str());
        for (const auto& m : summary.imputation.models) {
            save_checkpoint((out_dir / (m.label + ".ckpt")).string(), m.checkpoint);
            hist << history_rows(m);
        }
        write_text(out_dir / "training_history.csv", hist.str());
        write_text(out_dir / "calibration.csv", calibration_csv(fixture));
    });

    std::ostringstream run;
    run << version_stamp << '\n' << "master_seed " << opts.seed << '\n' << "hours " << opts.fixture.hours << '\n';
    for (const auto& r : summary.scenarios) {
        run << "scenario " << r.scenario << ": " << r.config_echo << '\n';
    }
    run << timing.str();
    run << "total " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
    write_text(out_dir / "run_report.txt", run.str());
    return summary;
}

// ---------------------------------------------------------------------------
// Config files

inline bool parse_bool(const std::string& v, const std::string& key)
{
    if (v == "1" || v == "true") {
        return true;
    }
    if (v == "0" || v == "false") {
        return false;
    }
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

struct HarnessConfig {
    ScenarioConfig scenario;
    FixtureConfig fixture;
    std::map<std::string, std::string> seen; // keys present in the file
};

/// Flat key=value file mirroring ScenarioConfig plus fixture settings.
/// Building parameters use their own key names; unknown keys are rejected.
inline HarnessConfig read_harness_config(std::istream& in, HarnessConfig base = {})
{
    HarnessConfig h = std::move(base);
    auto& s = h.scenario;
    auto& f = h.fixture;
    for (const auto& [key, value] : parse_key_values(in)) {
        h.seen[key] = value;
        const auto num = [&] {
            try {
                return detail::parse_double(value, key);
            } catch (const FormatError& e) {
                throw ConfigError(e.what());
            }
        };
        const auto count = [&] {
            const double v = num();
            if (v < 0.0 || v != std::floor(v)) {
                throw ConfigError("key '" + key + "': expected a non-negative integer");
            }
            return static_cast<std::size_t>(v);
        };
        if (key == "id") {
            s.id = static_cast<int>(count());
        } else if (key == "dl_available") {
            s.dl_available = parse_bool(value, key);
        } else if (key == "ep_available") {
            s.ep_available = parse_bool(value, key);
        } else if (key == "truth_mode") {
            if (value == "full") {
                s.truth_mode = TruthMode::full;
            } else if (value == "sparse") {
                s.truth_mode = TruthMode::sparse;
            } else if (value == "absent") {
                s.truth_mode = TruthMode::absent;
            } else {
                throw ConfigError("truth_mode must be full, sparse or absent");
            }
        } else if (key == "sparse_frac") {
            s.sparse_frac = num();
        } else if (key == "imputation") {
            try {
                s.imputation = imputation_from_string(value);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        } else if (key == "train_frac") {
            s.split.train_frac = num();
        } else if (key == "val_frac") {
            s.split.val_frac = num();
        } else if (key == "test_frac") {
            s.split.test_frac = num();
        } else if (key == "eta") {
            s.train.eta = num();
        } else if (key == "optimizer") {
            if (value == "adam") {
                s.train.optimizer = OptimizerKind::adam;
            } else if (value == "sgd") {
                s.train.optimizer = OptimizerKind::sgd;
            } else {
                throw ConfigError("optimizer must be adam or sgd");
            }
        } else if (key == "max_epochs") {
            s.train.max_epochs = count();
        } else if (key == "batch_size") {
            s.train.batch_size = count();
        } else if (key == "early_stop_patience") {
            s.train.early_stop_patience = count();
        } else if (key == "memory_unit_enabled") {
            s.memory_unit_enabled = parse_bool(value, key);
        } else if (key == "seed") {
            s.seed = static_cast<std::uint64_t>(count());
        } else if (key == "hours") {
            f.hours = count();
        } else if (key == "truth_bias_kwh") {
            f.truth_bias_kwh = num();
        } else if (key == "truth_noise_kwh") {
            f.truth_noise_kwh = num();
        } else if (key == "behavior_amp_kwh") {
            f.behavior_amp_kwh = num();
        } else if (key == "d") {
            f.dims.d = count();
        } else if (key == "d_m") {
            f.dims.d_m = count();
        } else if (key == "d_z") {
            f.dims.d_z = count();
        } else if (const auto& bf = BuildingParams::fields(); bf.contains(key)) {
            f.building.*(bf.at(key)) = num();
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    try {
        f.dims.validate();
        f.building.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return h;
}

} // namespace pgmn
