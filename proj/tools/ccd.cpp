// ccd: simulate scenarios, replay run logs through the detectors, calibrate.
//
//   ccd simulate <scenario-file|bundled-name> [--out log|-] [--seed N] [--jitter LAT SPEED] [--closed-loop]
//   ccd replay <log|-> [--config file] [--events out] [--metrics out.csv] [--<field> value ...]
//   ccd calibrate <log|-> [--config file]
//   ccd scenarios list | show <name>
//
// replay exits 0 when no event fired, 2 when at least one did, 1 on error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ccd/ccd.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitEvents = 2;

ccd::RunLog load_log(const std::string& path)
{
    if (path == "-") {
        return ccd::read_log(std::cin);
    }
    return ccd::read_log_file(path);
}

ccd::sim::Scenario load_scenario(const std::string& arg)
{
    if (std::filesystem::exists(arg)) {
        return ccd::sim::read_scenario_file(arg);
    }
    if (ccd::sim::is_bundled_scenario(arg)) {
        return ccd::sim::bundled_scenario(arg);
    }
    throw ccd::Error("'" + arg + "' is neither a scenario file nor a bundled scenario (see `ccd scenarios list`)");
}

// Writes to a file, or stdout for "-".
template <class Fn>
void with_output(const std::string& path, Fn&& fn)
{
    if (path == "-") {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw ccd::Error("cannot open " + path + " for writing");
    }
    fn(f);
    if (!f) {
        throw ccd::Error("error writing " + path);
    }
}

// Per-field overrides collected from --<field> options.
struct ConfigFlags {
    std::map<std::string, std::string> values;

    void attach(CLI::App* cmd)
    {
        for (const char* key : {"n_points", "w_m", "w_avg", "lat_threshold", "long_persistence", "v_deadband",
                                "align_tolerance", "smoothing_window", "horizon"}) {
            std::string flag = std::string("--") + key;
            for (auto& c : flag) {
                if (c == '_') {
                    c = '-';
                }
            }
            cmd->add_option_function<std::string>(
                flag, [this, key](const std::string& v) { values[key] = v; }, std::string("override ") + key);
        }
    }

    // Precedence: log header < config file < flags.
    [[nodiscard]] ccd::DetectorConfig resolve(ccd::DetectorConfig base, const std::string& config_path) const
    {
        if (!config_path.empty()) {
            base = ccd::read_config_file(config_path, base);
        }
        for (const auto& [k, v] : values) {
            ccd::set_config_value(base, k, v);
        }
        return ccd::validate_config(base);
    }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Corner-case detection by comparing a modular and an end-to-end driving stack"};
    app.require_subcommand(1);

    auto* simulate = app.add_subcommand("simulate", "run a scenario and write its run log");
    std::string scenario_arg;
    std::string out_path = "-";
    std::optional<std::uint64_t> seed;
    std::vector<double> jitter;
    bool closed_loop = false;
    simulate->add_option("scenario", scenario_arg, "scenario file or bundled scenario name")->required();
    simulate->add_option("--out,-o", out_path, "log destination, '-' for stdout");
    simulate->add_option("--seed", seed, "override the scenario seed");
    simulate->add_option("--jitter", jitter, "uniform jitter amplitudes: lateral [m] speed [m/s]")->expected(2);
    simulate->add_flag("--closed-loop", closed_loop, "apply monitor responses to the ego vehicle");

    auto* replay = app.add_subcommand("replay", "replay a run log through the detection pipeline");
    std::string log_path;
    std::string config_path;
    std::string events_path;
    std::string metrics_path;
    bool quiet = false;
    ConfigFlags replay_flags;
    replay->add_option("log", log_path, "run log, '-' for stdin")->required();
    replay->add_option("--config,-c", config_path, "key=value detector config file");
    replay->add_option("--events,-e", events_path, "write events as JSON lines");
    replay->add_option("--metrics,-m", metrics_path, "write the per-frame metrics table (CSV)");
    replay->add_flag("--quiet,-q", quiet, "suppress the summary on stderr");
    replay_flags.attach(replay);

    auto* calibrate = app.add_subcommand("calibrate", "suggest a lateral threshold from a nominal run log");
    ConfigFlags calibrate_flags;
    calibrate->add_option("log", log_path, "run log, '-' for stdin")->required();
    calibrate->add_option("--config,-c", config_path, "key=value detector config file");
    calibrate_flags.attach(calibrate);

    auto* scenarios = app.add_subcommand("scenarios", "bundled scenarios");
    scenarios->require_subcommand(1);
    auto* list = scenarios->add_subcommand("list", "list bundled scenarios");
    auto* show = scenarios->add_subcommand("show", "print a bundled scenario in file form");
    std::string show_name;
    show->add_option("name", show_name)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitError;
    }

    try {
        if (simulate->parsed()) {
            auto sc = load_scenario(scenario_arg);
            if (seed) {
                sc.seed = *seed;
            }
            if (jitter.size() == 2) {
                sc.jitter_lateral = jitter[0];
                sc.jitter_speed = jitter[1];
            }
            ccd::sim::SimConfig sim_cfg;
            sim_cfg.closed_loop = closed_loop;
            const auto log = ccd::sim::run_scenario(sc, sim_cfg);
            with_output(out_path, [&](std::ostream& os) { ccd::write_log(log, os); });
            return kExitOk;
        }

        if (replay->parsed()) {
            const auto log = load_log(log_path);
            const auto cfg = replay_flags.resolve(log.header.config, config_path);
            const auto result = ccd::replay(log, cfg);
            if (!events_path.empty()) {
                with_output(events_path, [&](std::ostream& os) { ccd::write_events(result.events(), os); });
            }
            if (!metrics_path.empty()) {
                with_output(metrics_path, [&](std::ostream& os) { ccd::write_metrics_csv(result, os); });
            }
            if (!quiet) {
                std::cerr << ccd::replay_summary(log, result);
            }
            return result.events().empty() ? kExitOk : kExitEvents;
        }

        if (calibrate->parsed()) {
            const auto log = load_log(log_path);
            const auto cfg = calibrate_flags.resolve(log.header.config, config_path);
            std::cout << ccd::format_calibration(ccd::calibrate(log, cfg));
            return kExitOk;
        }

        if (list->parsed()) {
            for (const auto& b : ccd::sim::bundled_scenarios()) {
                std::cout << b.name << "  " << b.summary << '\n';
            }
            return kExitOk;
        }

        if (show->parsed()) {
            std::cout << ccd::sim::format_scenario(ccd::sim::bundled_scenario(show_name));
            return kExitOk;
        }
    } catch (const ccd::ParseError& e) {
        std::cerr << "ccd: parse error: " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "ccd: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
