#pragma once

#include "tcopt/config.hpp"

#include <json.hpp>

#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tcopt::cli {

enum class Format { csv, json };

[[nodiscard]] Format parse_format(const std::string& name);

/// Resolved configuration shared by every command.
struct Context {
    nlohmann::json resolved;
    config::RunConfig config;
    std::string hash;
    std::filesystem::path out_dir;
    Format format = Format::csv;
};

struct ContextRequest {
    std::optional<std::filesystem::path> config_path;
    std::vector<std::string> overrides; ///< key.path=value
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    Format format = Format::csv;
};

/// Defaults <- config file <- overrides <- --seed/--out. Throws ConfigError / IoError.
[[nodiscard]] Context make_context(const ContextRequest& request);

/// Creates the output directory and writes the resolved config plus a run_info.json
/// (the only file that carries a timestamp).
void prepare_output(const Context& ctx, const std::string& command);

// Each command writes its files into ctx.out_dir and returns a JSON summary.
[[nodiscard]] nlohmann::json cmd_mode(const Context& ctx);
[[nodiscard]] nlohmann::json cmd_synth(const Context& ctx);
[[nodiscard]] nlohmann::json cmd_analyze(const Context& ctx, const std::filesystem::path& record,
                                         const std::optional<std::filesystem::path>& geophone = std::nullopt);
[[nodiscard]] nlohmann::json cmd_sweep(const Context& ctx, const std::optional<std::filesystem::path>& input = std::nullopt);
[[nodiscard]] nlohmann::json cmd_calibrate(const Context& ctx,
                                           const std::optional<std::filesystem::path>& geophone_points,
                                           const std::optional<std::filesystem::path>& heating_points);
[[nodiscard]] nlohmann::json cmd_energy_audit(const Context& ctx);
[[nodiscard]] nlohmann::json cmd_pipeline(const Context& ctx);

/// 2 config/domain error, 3 numerical failure, 4 I/O, 1 anything else.
[[nodiscard]] int exit_code_for(const std::exception& e);
[[nodiscard]] nlohmann::json error_json(const std::exception& e);

} // namespace tcopt::cli
