// platoon: run mixed-traffic platoon formation scenarios.
//
//   platoon run <config>        simulate one scenario, write trace + summary
//   platoon sweep <spec>        sensitivity sweep, write sweep.csv
//   platoon check-cfm <config>  eligibility report for the configured HDV model
//   platoon validate <config>   parse and validate only
//
// Exit codes: 0 success, 1 validation error, 2 collision/abort, 3 internal error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"

#include "platoon/config_io.hpp"
#include "platoon/sim_engine.hpp"
#include "platoon/sweep.hpp"
#include "platoon/trace_io.hpp"

namespace fs = std::filesystem;
using namespace platoon;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitAbort = 2;
constexpr int kExitInternal = 3;

constexpr const char* kOutDirEnv = "PLATOON_OUT_DIR";

struct CommonFlags {
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string format;
    int downsample = 0;
    bool quiet = false;
};

fs::path resolve_out_dir(const CommonFlags& flags, const std::string& config_dir) {
    if (!flags.out_dir.empty()) return flags.out_dir;
    if (!config_dir.empty()) return config_dir;
    if (const char* env = std::getenv(kOutDirEnv)) return env;
    return "out";
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

ScenarioConfig load_with_overrides(const std::string& path, const CommonFlags& flags) {
    ScenarioConfig c = io::load_config(path);
    if (flags.seed) c.init.seed = *flags.seed;
    if (!flags.format.empty()) c.outputs.format = flags.format;
    if (flags.downsample > 0) c.outputs.downsample = flags.downsample;
    c.validate();
    return c;
}

int cmd_run(const std::string& path, const CommonFlags& flags) {
    const ScenarioConfig config = load_with_overrides(path, flags);
    const auto trace = sim::run(config);
    const fs::path dir = resolve_out_dir(flags, config.outputs.dir);
    fs::create_directories(dir);
    if (config.outputs.format == "json") {
        write_json(dir / "trace.json", io::trace_json(trace, config.outputs.downsample));
    } else {
        std::ofstream out(dir / "trace.csv");
        io::write_trace_csv(out, trace, config.outputs.downsample);
    }
    write_json(dir / "summary.json", io::summary_json(trace));
    write_json(dir / "metrics.json", io::metrics_json(trace));

    const auto& s = trace.summary;
    if (!flags.quiet) {
        std::cout << "formation_time: ";
        if (s.formation_time)
            std::cout << *s.formation_time << " s\n";
        else
            std::cout << "not formed\n";
        std::cout << "hard violations: " << s.violations.hard()
                  << ", rear-end violations: " << s.violations.rear_end
                  << ", speed violations: " << s.violations.cav_speed + s.violations.hdv_speed << '\n'
                  << "outputs: " << dir.string() << '\n';
    }
    if (s.collision) {
        std::cerr << "aborted: " << s.abort_reason << '\n';
        return kExitAbort;
    }
    return kExitOk;
}

int cmd_sweep(const std::string& path, const CommonFlags& flags) {
    auto spec = sweep::load_sweep(path);
    if (flags.seed) spec.base.init.seed = *flags.seed;
    const auto rows = sweep::run_sweep(spec);
    const fs::path dir =
        flags.out_dir.empty() ? resolve_out_dir(flags, spec.base.outputs.dir) / ("sweep_" + spec.parameter)
                              : fs::path(flags.out_dir);
    fs::create_directories(dir);
    std::ofstream out(dir / "sweep.csv");
    sweep::write_sweep_csv(out, spec.parameter, rows);
    if (!flags.quiet) {
        const auto means = sweep::mean_formation_times(spec, rows);
        std::cout << spec.parameter << " -> mean formation time [s]\n";
        for (std::size_t i = 0; i < means.size(); ++i)
            std::cout << "  " << std::setw(8) << spec.values[i] << "  " << means[i] << '\n';
        std::cout << "spearman: " << sweep::spearman(spec.values, means) << '\n';
        std::cout << "outputs: " << (dir / "sweep.csv").string() << '\n';
    }
    return kExitOk;
}

int cmd_check_cfm(const std::string& path, const CommonFlags& flags) {
    const ScenarioConfig config = load_with_overrides(path, flags);
    const auto model = config.model();
    const auto probes = cfm::equilibrium_probes(model, config.bounds.v_min, config.bounds.v_max - 1.0, 10);
    const auto report = cfm::check_eligibility(model, probes);
    if (!flags.quiet) {
        std::cout << "model: " << report.model << '\n';
        std::cout << std::setw(8) << "v" << std::setw(12) << "gap" << std::setw(12) << "f_dp"
                  << std::setw(12) << "f_dv" << std::setw(12) << "f_v" << std::setw(12) << "rational"
                  << std::setw(10) << "platoon" << std::setw(10) << "string" << '\n';
        for (const auto& p : report.probes) {
            std::cout << std::setw(8) << p.probe.v << std::setw(12) << p.probe.delta_p << std::setw(12)
                      << p.d.d_gap << std::setw(12) << p.d.d_rel << std::setw(12) << p.d.d_speed
                      << std::setw(12) << cfm::to_string(p.rational) << std::setw(10)
                      << cfm::to_string(p.platoon) << std::setw(10) << cfm::to_string(p.string) << '\n';
        }
        std::cout << (report.all_passed() ? "eligible\n" : "NOT eligible\n");
    }
    return report.all_passed() ? kExitOk : kExitValidation;
}

int cmd_validate(const std::string& path, const CommonFlags& flags) {
    load_with_overrides(path, flags);
    if (!flags.quiet) std::cout << path << ": ok\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed-traffic platoon formation by a leading automated vehicle"};
    app.require_subcommand(1);
    CommonFlags flags;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Override the initial-condition seed");
        sub->add_option("--out-dir", flags.out_dir, "Output directory (default $PLATOON_OUT_DIR or ./out)");
        sub->add_option("--format", flags.format, "Trace format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--downsample", flags.downsample, "Keep every n-th trace row")->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", flags.quiet, "Suppress console output");
    };

    std::string path;
    auto* run = app.add_subcommand("run", "Simulate one scenario");
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep");
    auto* check = app.add_subcommand("check-cfm", "Eligibility report for the HDV car-following model");
    auto* validate = app.add_subcommand("validate", "Validate a scenario file");
    for (auto* sub : {run, sweep_cmd, check, validate}) {
        sub->add_option("file", path, "Scenario or sweep file")->required();
        add_common(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }
    for (auto* sub : {run, sweep_cmd, check, validate})
        if (sub->parsed() && sub->count("--seed")) flags.seed = seed;

    try {
        if (run->parsed()) return cmd_run(path, flags);
        if (sweep_cmd->parsed()) return cmd_sweep(path, flags);
        if (check->parsed()) return cmd_check_cfm(path, flags);
        if (validate->parsed()) return cmd_validate(path, flags);
    } catch (const io::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const cfm::EligibilityError& e) {
        std::cerr << "eligibility error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitInternal;
}
