#include "tcopt/commands.hpp"
#include "tcopt/errors.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct GlobalOptions {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "csv";
    bool error_json = false;
};

void add_common(CLI::App& cmd, GlobalOptions& g) {
    cmd.add_option("--config", g.config, "JSON config file (defaults apply to missing keys)")->check(CLI::ExistingFile);
    cmd.add_option("--set", g.overrides, "Override a config key, e.g. --set drive.max_tilt_deg=2.5");
    cmd.add_option("--seed", g.seed, "Noise seed (overrides config.seed)");
    cmd.add_option("--out", g.out, "Output directory (overrides config.output_dir)");
    cmd.add_option("--format", g.format, "Summary/table format")->check(CLI::IsMember({"csv", "json"}));
    cmd.add_flag("--error-json", g.error_json, "Print errors as JSON on stdout");
}

tcopt::cli::Context context_for(const GlobalOptions& g) {
    tcopt::cli::ContextRequest req;
    if (!g.config.empty()) req.config_path = g.config;
    req.overrides = g.overrides;
    req.seed = g.seed;
    if (!g.out.empty()) req.out_dir = g.out;
    req.format = tcopt::cli::parse_format(g.format);
    return tcopt::cli::make_context(req);
}

std::optional<std::filesystem::path> optional_path(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::filesystem::path(s);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-crystal optomechanics toolkit: surface-wave modes, synthetic lock-in records, "
                 "spectral fits, resonance sweeps, calibration and texture-energy audits."};
    app.require_subcommand(1);
    GlobalOptions g;

    auto* mode = app.add_subcommand("mode", "Report the surface-wave mode of the configured cell");
    auto* synth = app.add_subcommand("synth", "Synthesize a lock-in record and geophone trace");
    auto* analyze = app.add_subcommand("analyze", "Spectrogram, central-band trace and per-window fits of a record");
    auto* sweep = app.add_subcommand("sweep", "Drive-frequency sweep and resonance fit");
    auto* calibrate = app.add_subcommand("calibrate", "Build a calibration bundle");
    auto* audit = app.add_subcommand("energy-audit", "Texture free-energy dominance table");
    auto* pipeline = app.add_subcommand("pipeline", "Run every stage on synthetic data");
    for (auto* cmd : {mode, synth, analyze, sweep, calibrate, audit, pipeline}) add_common(*cmd, g);

    std::string record, geophone_trace, sweep_input, geophone_points, heating_points;
    analyze->add_option("record", record, "Record CSV written by synth")->required()->check(CLI::ExistingFile);
    analyze->add_option("--geophone", geophone_trace, "Geophone CSV; the drive frequency is estimated from it")
        ->check(CLI::ExistingFile);
    sweep->add_option("--input", sweep_input, "Existing sweep CSV (f_exc,G,sigma) to fit instead of synthesizing")
        ->check(CLI::ExistingFile);
    calibrate->add_option("--geophone-points", geophone_points, "CSV of nominal,voltage pairs")->check(CLI::ExistingFile);
    calibrate->add_option("--heating-points", heating_points, "CSV of A_exc,dT_uK pairs")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const auto ctx = context_for(g);
        std::string name = app.get_subcommands().front()->get_name();
        tcopt::cli::prepare_output(ctx, name);
        nlohmann::json summary;
        if (mode->parsed()) summary = tcopt::cli::cmd_mode(ctx);
        else if (synth->parsed()) summary = tcopt::cli::cmd_synth(ctx);
        else if (analyze->parsed()) summary = tcopt::cli::cmd_analyze(ctx, record, optional_path(geophone_trace));
        else if (sweep->parsed()) summary = tcopt::cli::cmd_sweep(ctx, optional_path(sweep_input));
        else if (calibrate->parsed())
            summary = tcopt::cli::cmd_calibrate(ctx, optional_path(geophone_points), optional_path(heating_points));
        else if (audit->parsed()) summary = tcopt::cli::cmd_energy_audit(ctx);
        else if (pipeline->parsed()) summary = tcopt::cli::cmd_pipeline(ctx);
        summary["config_hash"] = ctx.hash;
        std::cout << summary.dump(2) << '\n';
        return 0;
    } catch (const std::exception& e) {
        if (g.error_json) {
            std::cout << tcopt::cli::error_json(e).dump() << '\n';
        } else {
            std::cerr << "error: " << e.what() << '\n';
        }
        return tcopt::cli::exit_code_for(e);
    }
}
