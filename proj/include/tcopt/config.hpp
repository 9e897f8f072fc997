#pragma once

#include "tcopt/calibration.hpp"
#include "tcopt/resonance_sweep.hpp"
#include "tcopt/signal_engine.hpp"
#include "tcopt/spectral_fit.hpp"
#include "tcopt/surface_hydro.hpp"
#include "tcopt/texture_energy.hpp"
#include "tcopt/timecrystal_model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tcopt::config {

struct ModeSection {
    int index = 1;
    double quality_factor = 65.0;
    bool meniscus = true;
};

struct CrystalSection {
    double base_frequency_hz = 833e3;
    double coupling_hz_per_deg2 = 3.74;
    double static_tilt_deg = 0.0;
    double drift_hz = 150.0;   ///< omega_0 rise towards its asymptote
    double drift_time_s = 10.0;
};

struct DriveSection {
    std::optional<double> excitation_hz; ///< empty: drive on the mode resonance
    double max_tilt_deg = 3.0;
    double start_s = 0.0;
    std::optional<double> stop_s;
    /// Amplitude ramp for the mean-shift study.
    std::vector<double> ramp_tilts_deg{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5};
};

struct SynthesisSection {
    double duration_s = 4.0;
    double sample_rate_hz = 48000.0;
    double lockin_offset_hz = 3000.0;
    double amplitude = 1.0;
    std::optional<double> decay_time_s;
};

struct NoiseSection {
    std::optional<double> snr_db; ///< takes precedence over rms when set
    double rms = 0.0;
};

struct AnalysisSection {
    std::size_t window_size = 30000;
    double hop_fraction = 0.1;
    std::string window = "hann";
    std::optional<double> band_low_hz;
    std::optional<double> band_high_hz;
    double continuity_limit_hz = 5.0;
    int n_max = 5;
    std::size_t frame_stride = 1;
    std::optional<std::size_t> max_fits;
    unsigned threads = 0;
};

struct SweepSection {
    double first_hz = 11.9;
    double last_hz = 12.95;
    std::size_t count = 15;
    double resonant_tilt_deg = 4.0;
    double duration_s = 1.5;
    std::size_t fits_per_point = 3;
    double max_valid_fork_width_hz = 0.0;
};

struct CalibrationSection {
    double thermal_resistance_uk_per_pw = 0.75;
    double q_total = 65.0;
    double q_thermal = 375.0;
    double tilt_slope = 2.62;
    double reference_nominal = 0.098;
    std::optional<double> heating_uk;   ///< bulk temperature rise for the coupling band
    std::optional<double> modulation_hz; ///< G observed together with heating_uk
};

struct TextureSection {
    double field_gauss = 200.0;
    double healing_length_cm = 1e-2;
    double trap_volume_cm3 = 1.0;
    double leggett_hz = 250e3;
    double larmor_hz = 833e3;
    double beta_l_deg = 60.0;
    double bulk_velocity_cm_s = 0.1;
    double surface_velocity_cm_s = 1.0;
    texture::TextureCoefficients coefficients = texture::default_audit_conditions().inputs.coefficients;
};

/// Fully resolved run configuration.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    hydro::FluidCell cell;
    ModeSection mode;
    CrystalSection crystal;
    DriveSection drive;
    SynthesisSection synthesis;
    NoiseSection noise;
    AnalysisSection analysis;
    SweepSection sweep;
    CalibrationSection calibration;
    TextureSection texture;
};

/// Every accepted key with its default value. Keys absent here are rejected.
[[nodiscard]] nlohmann::json default_json();

/// Overlays `user` on the defaults. Throws ConfigError on unknown keys or type mismatches.
[[nodiscard]] nlohmann::json merge(const nlohmann::json& base, const nlohmann::json& user);

/// Applies `a.b.c=value`; the value is parsed as JSON and otherwise taken as a string.
void apply_override(nlohmann::json& config, const std::string& assignment);

[[nodiscard]] RunConfig from_json(const nlohmann::json& resolved);
[[nodiscard]] nlohmann::json to_json(const RunConfig& config);

/// Reads a config file (IoError when unreadable, ConfigError when invalid) merged onto the defaults.
[[nodiscard]] nlohmann::json load(const std::filesystem::path& path);

/// 64-bit FNV-1a of the canonical (sorted-key, compact) serialization, as 16 hex digits.
[[nodiscard]] std::string config_hash(const nlohmann::json& resolved);

/// Typed views used by the commands.
[[nodiscard]] hydro::SurfaceMode solve_configured_mode(const RunConfig& config);
[[nodiscard]] crystal::TimeCrystalParams crystal_params(const RunConfig& config);
[[nodiscard]] signal::DriveProgram drive_program(const RunConfig& config, const hydro::SurfaceMode& mode);
[[nodiscard]] signal::SynthesisOptions synthesis_options(const RunConfig& config);
[[nodiscard]] signal::NoiseSpec noise_spec(const RunConfig& config);
[[nodiscard]] spectral::RecordFitOptions analysis_options(const RunConfig& config);
[[nodiscard]] calib::ThermalModel thermal_model(const RunConfig& config, const hydro::SurfaceMode& mode);
[[nodiscard]] texture::AuditConditions audit_conditions(const RunConfig& config);

} // namespace tcopt::config
