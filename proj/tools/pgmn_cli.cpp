// pgmn command-line driver. Exit codes: 0 ok, 1 config error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pgmn/pgmn.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int exit_config = 1;
constexpr int exit_runtime = 2;

struct Common {
    std::uint64_t seed = 42;
    std::string out = "pgmn_out";
    std::string config;
    bool fast = false;
};

pgmn::HarnessConfig load_config(const Common& c, pgmn::ScenarioConfig base)
{
    pgmn::HarnessConfig h;
    h.scenario = std::move(base);
    h.fixture = c.fast ? pgmn::FixtureConfig::fast() : pgmn::FixtureConfig{};
    if (!c.config.empty()) {
        std::ifstream in(c.config);
        if (!in) {
            throw pgmn::ConfigError("cannot open config file " + c.config);
        }
        h = pgmn::read_harness_config(in, std::move(h));
    }
    if (!h.seen.contains("seed")) {
        h.scenario.seed = c.seed;
    }
    if (c.fast) {
        h.fixture.hours = std::min<std::size_t>(h.fixture.hours, pgmn::FixtureConfig::fast().hours);
    }
    return h;
}

pgmn::ScenarioConfig harness_preset(int id)
{
    auto c = pgmn::ScenarioConfig::preset(id);
    c.train.batch_size = pgmn::harness_batch_size;
    return c;
}

void print_methods(int scenario, const std::vector<pgmn::MethodResult>& methods)
{
    std::cout << pgmn::metrics::csv_header << '\n';
    for (const auto& m : methods) {
        std::cout << pgmn::metrics::to_csv_row(std::to_string(scenario), m.method, m.report) << '\n';
    }
}

void write_scenario(const fs::path& out, const pgmn::RunReport& r)
{
    fs::create_directories(out);
    std::ostringstream table;
    table << pgmn::metrics::csv_header << '\n';
    for (const auto& m : r.methods) {
        table << pgmn::metrics::to_csv_row(std::to_string(r.scenario), m.method, m.report) << '\n';
    }
    pgmn::write_text(out / ("scenario" + std::to_string(r.scenario) + "_table.csv"), table.str());
    pgmn::write_text(out / ("predictions_scenario" + std::to_string(r.scenario) + ".csv"),
                     pgmn::predictions_csv(r.predictions));
    for (const auto& m : r.models) {
        pgmn::save_checkpoint((out / (m.label + ".ckpt")).string(), m.checkpoint);
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Physics-guided memory network experiments"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--seed", common.seed, "Master seed")->capture_default_str();
    app.add_option("--out", common.out, "Output directory")->capture_default_str();
    app.add_option("--config", common.config, "key=value config file");
    app.add_flag("--fast", common.fast, "Use the 2160-hour fixture");

    int scenario_id = 1;
    auto* scenario = app.add_subcommand("scenario", "Run one scenario (1-5)");
    scenario->add_option("--id", scenario_id, "Scenario id")->required()->check(CLI::Range(1, 5));

    std::string kind;
    auto* ablation = app.add_subcommand("ablation", "Memory-unit or imputation ablation");
    ablation->add_option("--kind", kind, "mu | imputation")->required()->check(CLI::IsMember({"mu", "imputation"}));

    auto* all = app.add_subcommand("all", "Scenarios 1-5 and both ablations");

    std::size_t sim_hours = 0;
    auto* simulate = app.add_subcommand("simulate", "Write weather, physics and truth series");
    simulate->add_option("--hours", sim_hours, "Series length (default: fixture length)");

    auto* baseline = app.add_subcommand("train-baseline", "Fit the data-driven forecaster and report test metrics");

    for (auto* sub : {scenario, ablation, all, simulate, baseline}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    std::optional<pgmn::HarnessConfig> cfg;
    try {
        int id = 1;
        if (*scenario) {
            id = scenario_id;
        } else if (*ablation && kind == "imputation") {
            id = 2;
        }
        cfg = load_config(common, harness_preset(id));
        if (*scenario && cfg->scenario.id != scenario_id) {
            throw pgmn::ConfigError("config id " + std::to_string(cfg->scenario.id) + " conflicts with --id "
                                    + std::to_string(scenario_id));
        }
        cfg->scenario.validate();
        if (*simulate && sim_hours > 0) {
            cfg->fixture.hours = sim_hours;
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }

    const fs::path out = common.out;
    const auto& sc = cfg->scenario;
    const auto& fx = cfg->fixture;
    try {
        if (*all) {
            pgmn::RunAllOptions opts;
            opts.seed = sc.seed;
            opts.fixture = fx;
            opts.overrides = sc;
            const auto summary = pgmn::run_all(out, opts);
            for (const auto& r : summary.scenarios) {
                print_methods(r.scenario, r.methods);
            }
            std::cout << "reports written to " << out.string() << '\n';
            return 0;
        }

        const auto fixture = pgmn::build_fixture(fx, sc.seed);
        if (*scenario) {
            const auto rep = pgmn::run_scenario(sc, fx, fixture);
            print_methods(rep.scenario, rep.methods);
            write_scenario(out, rep);
        } else if (*ablation && kind == "mu") {
            const auto a = pgmn::run_ablation_mu(sc, fx, fixture);
            print_methods(1, a.report.methods);
            fs::create_directories(out);
            pgmn::write_text(out / "ablation_mu.csv", pgmn::memory_ablation_csv(a));
        } else if (*ablation) {
            const auto a = pgmn::run_ablation_imputation(sc, fx, fixture);
            std::ostringstream imp;
            imp << pgmn::metrics::csv_header << '\n';
            for (const auto& [strategy, rep] : a.rows) {
                imp << pgmn::metrics::to_csv_row("2", "PgMN+" + pgmn::to_string(strategy), rep) << '\n';
            }
            std::cout << imp.str();
            fs::create_directories(out);
            pgmn::write_text(out / "ablation_imputation.csv", imp.str());
        } else if (*simulate) {
            fs::create_directories(out);
            pgmn::TemperatureSeries temps;
            for (std::size_t i = 0; i < fixture.actual_weather.size(); ++i) {
                temps.timestamps.push_back(fixture.actual_weather.at(i));
            }
            temps.temp_c = fixture.actual_weather.temp_c;
            pgmn::write_temperature_csv((out / "temperature.csv").string(), temps);
            pgmn::write_series_csv((out / "physics.csv").string(), fixture.physics);
            pgmn::write_series_csv((out / "truth.csv").string(), fixture.truth);
            std::cout << pgmn::calibration_csv(fixture);
        } else if (*baseline) {
            const auto seeds = pgmn::SeedPlan::from(sc.seed);
            const auto features = pgmn::build_feature_rows(fixture.truth, fixture.actual_weather.temp_c);
            const auto f = pgmn::train_baseline_forecaster(features, fixture.truth, sc.split, seeds.forecaster,
                                                           fx.forecaster);
            const auto dl = pgmn::forecast_day_ahead(f, fixture.truth, fixture.actual_weather.temp_c);
            const auto ranges = pgmn::chronological_split(fixture.truth.size(), sc.split);
            const auto actual = pgmn::detail::take(fixture.truth.values, ranges.test);
            const auto pred = pgmn::detail::take(dl.values, ranges.test);
            print_methods(0, {{"DL", pgmn::metrics::evaluate(actual, pred)}});
            std::cout << "epochs " << f.epochs_run << '\n';
            fs::create_directories(out);
            pgmn::write_series_csv((out / "dl_forecast.csv").string(), dl);
        }
    } catch (const pgmn::StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return exit_runtime;
    }
    return 0;
}
