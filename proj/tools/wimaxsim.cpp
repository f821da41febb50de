#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "wimaxsim/report.hpp"
#include "wimaxsim/scenario.hpp"
#include "wimaxsim/simulation.hpp"

namespace {

enum ExitCode : int { kOk = 0, kConfigError = 1, kInvariantViolation = 2, kIoError = 3 };

struct Source
{
    std::string config_path;
    std::string preset;
};

void add_source_flags(CLI::App* cmd, Source& src)
{
    auto* cfg = cmd->add_option("--config", src.config_path, "Scenario config file (YAML)");
    auto* pre = cmd->add_option("--preset", src.preset, "Shipped scenario preset")
                    ->check(CLI::IsMember(wimaxsim::preset_names()));
    cfg->excludes(pre);
}

// Returns the config, or prints every error and returns nullopt.
std::optional<wimaxsim::ScenarioConfig> resolve(const Source& src)
{
    wimaxsim::ConfigResult r;
    if (!src.config_path.empty())
        r = wimaxsim::load_config(src.config_path);
    else if (!src.preset.empty())
        r = wimaxsim::load_preset(src.preset);
    else
        r.errors.push_back("one of --config or --preset is required");
    for (const auto& e : r.errors)
        std::cerr << "config error: " << e << '\n';
    return r.config;
}

int cmd_validate(const Source& src, bool print)
{
    auto cfg = resolve(src);
    if (!cfg)
        return kConfigError;
    if (print)
        std::cout << wimaxsim::dump_config(*cfg);
    else
        std::cout << fmt::format("ok: scenario '{}' ({} service classes, {} cell(s) x {} stations)\n", cfg->name,
                                 cfg->service_classes.size(), cfg->topology.cells, cfg->topology.nodes_per_cell);
    return kOk;
}

struct RunFlags
{
    Source src;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> duration_s;
    std::string out;
    bool dump_frames = false;
    std::optional<std::int64_t> inject_oversubscribe;
    std::optional<double> inject_double_count_s;
};

int cmd_run(const RunFlags& f)
{
    auto cfg = resolve(f.src);
    if (!cfg)
        return kConfigError;
    if (f.duration_s) {
        cfg->run.duration_s = *f.duration_s;
        if (auto errors = cfg->validate(); !errors.empty()) {
            for (const auto& e : errors)
                std::cerr << "config error: " << e << '\n';
            return kConfigError;
        }
    }

    std::string out = f.out;
    if (out.empty())
        out = cfg->run.output_dir.empty() ? "out/" + cfg->name : cfg->run.output_dir;
    const auto paths = wimaxsim::OutputPaths::in(out);
    try {
        wimaxsim::prepare_output_dir(out);
    } catch (const std::exception& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIoError;
    }

    wimaxsim::SimulationOptions opts;
    opts.keep_frames = f.dump_frames;
    opts.seed_override = f.seed;
    opts.oversubscribe_frame = f.inject_oversubscribe;
    if (f.inject_double_count_s)
        opts.double_count_at = wimaxsim::SimTime::from_us(static_cast<std::int64_t>(*f.inject_double_count_s * 1e6));

    wimaxsim::RunReport run;
    try {
        run = wimaxsim::run_scenario(*cfg, opts);
    } catch (const wimaxsim::InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return kInvariantViolation;
    } catch (const wimaxsim::SimulationError& e) {
        std::cerr << "simulation error: " << e.what() << '\n';
        return kInvariantViolation;
    }

    try {
        wimaxsim::write_run(run, paths, f.dump_frames);
    } catch (const std::exception& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIoError;
    }

    const auto d = wimaxsim::digest(run);
    std::cout << fmt::format("scenario {} seed {} duration {} s\n", run.config.name, run.config.run.seed,
                             run.config.run.duration_s);
    std::cout << fmt::format("  voice mean delay   {:.3f} ms\n", d.voice_mean_delay_ms);
    std::cout << fmt::format("  voice mean MOS     {:.3f}\n", d.voice_mos_mean);
    std::cout << fmt::format("  BE uplink bytes    {}\n", d.be_uplink_delivered_bytes);
    if (d.ugs_under_provisioned)
        std::cout << "  flag: UGS under-provisioned (offered voice load exceeds reserved rate)\n";
    for (const auto& cell : run.cells)
        for (const auto& w : cell.warnings)
            std::cerr << "warning: " << w << '\n';
    std::cout << "  outputs in " << out << '\n';
    return kOk;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out)
{
    wimaxsim::Comparison cmp;
    try {
        cmp = wimaxsim::compare_runs(a, b);
    } catch (const std::exception& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIoError;
    }
    for (const auto& w : cmp.warnings)
        std::cerr << "warning: " << w << '\n';

    if (!out.empty()) {
        try {
            wimaxsim::prepare_output_dir(out);
            std::ofstream series(std::filesystem::path(out) / "comparison.csv", std::ios::binary);
            std::ofstream summary(std::filesystem::path(out) / "comparison_summary.csv", std::ios::binary);
            wimaxsim::write_comparison_csv(cmp, series);
            wimaxsim::write_comparison_summary(cmp, summary);
            if (!series || !summary)
                throw std::runtime_error("cannot write comparison files in " + out);
        } catch (const std::exception& e) {
            std::cerr << "i/o error: " << e.what() << '\n';
            return kIoError;
        }
    }

    std::cout << fmt::format("{:<24} {:<22} {:>14} {:>14} {:>14}\n", "entity", "metric", "a", "b", "b - a");
    for (const auto& r : cmp.summary) {
        const bool headline = r.entity == "voice" || r.entity == "be_uplink";
        if (!headline)
            continue;
        std::cout << fmt::format("{:<24} {:<22} {:>14} {:>14} {:>14}\n", r.entity, r.metric, r.a, r.b,
                                 r.delta ? fmt::format("{:.6g}", *r.delta) : std::string("-"));
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Discrete-event WiMAX MAC QoS simulator"};
    app.require_subcommand(1);

    RunFlags run;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario and write metrics");
    add_source_flags(run_cmd, run.src);
    run_cmd->add_option("--seed", run.seed, "Override the scenario seed");
    run_cmd->add_option("--duration", run.duration_s, "Override the run length in seconds")->check(CLI::PositiveNumber);
    run_cmd->add_option("--out", run.out, "Output directory");
    run_cmd->add_flag("--dump-frames", run.dump_frames, "Also write the per-frame grant map");
    run_cmd->add_option("--inject-oversubscribe", run.inject_oversubscribe)->group("");
    run_cmd->add_option("--inject-double-count", run.inject_double_count_s)->group("");

    Source val_src;
    bool print = false;
    auto* val_cmd = app.add_subcommand("validate", "Check a config and report every error");
    add_source_flags(val_cmd, val_src);
    val_cmd->add_flag("--print", print, "Print the normalised config");

    std::string dir_a, dir_b, cmp_out;
    auto* cmp_cmd = app.add_subcommand("compare", "Align two run directories and report deltas");
    cmp_cmd->add_option("run_a", dir_a, "First run directory")->required();
    cmp_cmd->add_option("run_b", dir_b, "Second run directory")->required();
    cmp_cmd->add_option("--out", cmp_out, "Directory for comparison CSV files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*run_cmd)
            return cmd_run(run);
        if (*val_cmd)
            return cmd_validate(val_src, print);
        if (*cmp_cmd)
            return cmd_compare(dir_a, dir_b, cmp_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoError;
    }
    return kOk;
}
