#include "tcopt/config.hpp"

#include "tcopt/errors.hpp"
#include "tcopt/units.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tcopt::config {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<double> read_optional(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

std::size_t read_count(const json& j, const std::string& path, std::size_t minimum) {
    const double v = j.get<double>();
    if (!(v >= static_cast<double>(minimum)) || std::floor(v) != v || v > 1e15) {
        throw ConfigError(path + " must be an integer >= " + std::to_string(minimum));
    }
    return static_cast<std::size_t>(v);
}

const char* type_name(const json& j) {
    return j.type_name();
}

json merge_at(const json& base, const json& user, const std::string& path) {
    if (base.is_object()) {
        if (!user.is_object()) throw ConfigError(path + " must be an object");
        json out = base;
        for (const auto& [key, value] : user.items()) {
            const std::string child = path.empty() ? key : path + "." + key;
            if (!base.contains(key)) throw ConfigError("unknown config key '" + child + "'");
            out[key] = merge_at(base[key], value, child);
        }
        return out;
    }
    const bool ok = base.is_null()      ? (user.is_null() || user.is_number())
                    : base.is_number()  ? user.is_number()
                    : base.is_boolean() ? user.is_boolean()
                    : base.is_string()  ? user.is_string()
                    : base.is_array()   ? user.is_array()
                                        : false;
    if (!ok) {
        throw ConfigError("config key '" + path + "' expects " + (base.is_null() ? "number or null" : type_name(base)) +
                          ", got " + type_name(user));
    }
    if (user.is_array()) {
        for (const auto& e : user) {
            if (!e.is_number()) throw ConfigError("config key '" + path + "' expects an array of numbers");
        }
    }
    return user;
}

} // namespace

json default_json() {
    const RunConfig defaults;
    json j = to_json(defaults);
    return j;
}

json merge(const json& base, const json& user) {
    return merge_at(base, user, "");
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key.path=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json patch = value;
    std::vector<std::string> keys;
    std::stringstream ss(path);
    for (std::string k; std::getline(ss, k, '.');) {
        if (k.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
        keys.push_back(k);
    }
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) patch = json{{*it, patch}};
    config = merge(config, patch);
}

RunConfig from_json(const json& j) {
    try {
        RunConfig c;
        const double seed = j.at("seed").get<double>();
        if (!(seed >= 0.0) || std::floor(seed) != seed || seed > 9.007199254740992e15) {
            throw ConfigError("seed must be a non-negative integer");
        }
        c.seed = static_cast<std::uint64_t>(seed);
        c.output_dir = j.at("output_dir").get<std::string>();

        const auto& cell = j.at("cell");
        c.cell.density = cell.at("density").get<double>();
        c.cell.surface_tension = cell.at("surface_tension").get<double>();
        c.cell.gravity = cell.at("gravity").get<double>();
        c.cell.radius = cell.at("radius").get<double>();
        c.cell.depth = cell.at("depth").get<double>();

        const auto& mode = j.at("mode");
        c.mode.index = static_cast<int>(read_count(mode.at("index"), "mode.index", 1));
        c.mode.quality_factor = mode.at("quality_factor").get<double>();
        c.mode.meniscus = mode.at("meniscus").get<bool>();

        const auto& cr = j.at("crystal");
        c.crystal.base_frequency_hz = cr.at("base_frequency_hz").get<double>();
        c.crystal.coupling_hz_per_deg2 = cr.at("coupling_hz_per_deg2").get<double>();
        c.crystal.static_tilt_deg = cr.at("static_tilt_deg").get<double>();
        c.crystal.drift_hz = cr.at("drift_hz").get<double>();
        c.crystal.drift_time_s = cr.at("drift_time_s").get<double>();

        const auto& dr = j.at("drive");
        c.drive.excitation_hz = read_optional(dr.at("excitation_hz"));
        c.drive.max_tilt_deg = dr.at("max_tilt_deg").get<double>();
        c.drive.start_s = dr.at("start_s").get<double>();
        c.drive.stop_s = read_optional(dr.at("stop_s"));
        c.drive.ramp_tilts_deg = dr.at("ramp_tilts_deg").get<std::vector<double>>();

        const auto& sy = j.at("synthesis");
        c.synthesis.duration_s = sy.at("duration_s").get<double>();
        c.synthesis.sample_rate_hz = sy.at("sample_rate_hz").get<double>();
        c.synthesis.lockin_offset_hz = sy.at("lockin_offset_hz").get<double>();
        c.synthesis.amplitude = sy.at("amplitude").get<double>();
        c.synthesis.decay_time_s = read_optional(sy.at("decay_time_s"));

        const auto& no = j.at("noise");
        c.noise.snr_db = read_optional(no.at("snr_db"));
        c.noise.rms = no.at("rms").get<double>();

        const auto& an = j.at("analysis");
        c.analysis.window_size = read_count(an.at("window_size"), "analysis.window_size", 4);
        c.analysis.hop_fraction = an.at("hop_fraction").get<double>();
        c.analysis.window = an.at("window").get<std::string>();
        (void)parse_window(c.analysis.window);
        c.analysis.band_low_hz = read_optional(an.at("band_low_hz"));
        c.analysis.band_high_hz = read_optional(an.at("band_high_hz"));
        c.analysis.continuity_limit_hz = an.at("continuity_limit_hz").get<double>();
        c.analysis.n_max = static_cast<int>(read_count(an.at("n_max"), "analysis.n_max", 1));
        c.analysis.frame_stride = read_count(an.at("frame_stride"), "analysis.frame_stride", 1);
        if (!an.at("max_fits").is_null()) c.analysis.max_fits = read_count(an.at("max_fits"), "analysis.max_fits", 1);
        c.analysis.threads = static_cast<unsigned>(read_count(an.at("threads"), "analysis.threads", 0));

        const auto& sw = j.at("sweep");
        c.sweep.first_hz = sw.at("first_hz").get<double>();
        c.sweep.last_hz = sw.at("last_hz").get<double>();
        c.sweep.count = read_count(sw.at("count"), "sweep.count", 5);
        c.sweep.resonant_tilt_deg = sw.at("resonant_tilt_deg").get<double>();
        c.sweep.duration_s = sw.at("duration_s").get<double>();
        c.sweep.fits_per_point = read_count(sw.at("fits_per_point"), "sweep.fits_per_point", 1);
        c.sweep.max_valid_fork_width_hz = sw.at("max_valid_fork_width_hz").get<double>();

        const auto& ca = j.at("calibration");
        c.calibration.thermal_resistance_uk_per_pw = ca.at("thermal_resistance_uk_per_pw").get<double>();
        c.calibration.q_total = ca.at("q_total").get<double>();
        c.calibration.q_thermal = ca.at("q_thermal").get<double>();
        c.calibration.tilt_slope = ca.at("tilt_slope").get<double>();
        c.calibration.reference_nominal = ca.at("reference_nominal").get<double>();
        c.calibration.heating_uk = read_optional(ca.at("heating_uk"));
        c.calibration.modulation_hz = read_optional(ca.at("modulation_hz"));

        const auto& tx = j.at("texture");
        c.texture.field_gauss = tx.at("field_gauss").get<double>();
        c.texture.healing_length_cm = tx.at("healing_length_cm").get<double>();
        c.texture.trap_volume_cm3 = tx.at("trap_volume_cm3").get<double>();
        c.texture.leggett_hz = tx.at("leggett_hz").get<double>();
        c.texture.larmor_hz = tx.at("larmor_hz").get<double>();
        c.texture.beta_l_deg = tx.at("beta_l_deg").get<double>();
        c.texture.bulk_velocity_cm_s = tx.at("bulk_velocity_cm_s").get<double>();
        c.texture.surface_velocity_cm_s = tx.at("surface_velocity_cm_s").get<double>();
        const auto& co = tx.at("coefficients");
        auto& k = c.texture.coefficients;
        k.a = read_optional(co.at("a"));
        k.lambda_dv = read_optional(co.at("lambda_dv"));
        k.lambda_hv = read_optional(co.at("lambda_hv"));
        k.lambda_hv1 = read_optional(co.at("lambda_hv1"));
        k.lambda_g1 = read_optional(co.at("lambda_g1"));
        k.lambda_g2 = read_optional(co.at("lambda_g2"));
        k.d_sh = read_optional(co.at("d_sh"));
        k.lambda_shv1 = read_optional(co.at("lambda_shv1"));
        k.lambda_sg = read_optional(co.at("lambda_sg"));
        k.b2 = read_optional(co.at("b2"));
        k.b4 = read_optional(co.at("b4"));
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

json to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["cell"] = {{"density", c.cell.density},
                 {"surface_tension", c.cell.surface_tension},
                 {"gravity", c.cell.gravity},
                 {"radius", c.cell.radius},
                 {"depth", c.cell.depth}};
    j["mode"] = {{"index", c.mode.index}, {"quality_factor", c.mode.quality_factor}, {"meniscus", c.mode.meniscus}};
    j["crystal"] = {{"base_frequency_hz", c.crystal.base_frequency_hz},
                    {"coupling_hz_per_deg2", c.crystal.coupling_hz_per_deg2},
                    {"static_tilt_deg", c.crystal.static_tilt_deg},
                    {"drift_hz", c.crystal.drift_hz},
                    {"drift_time_s", c.crystal.drift_time_s}};
    j["drive"] = {{"excitation_hz", optional_number(c.drive.excitation_hz)},
                  {"max_tilt_deg", c.drive.max_tilt_deg},
                  {"start_s", c.drive.start_s},
                  {"stop_s", optional_number(c.drive.stop_s)},
                  {"ramp_tilts_deg", c.drive.ramp_tilts_deg}};
    j["synthesis"] = {{"duration_s", c.synthesis.duration_s},
                      {"sample_rate_hz", c.synthesis.sample_rate_hz},
                      {"lockin_offset_hz", c.synthesis.lockin_offset_hz},
                      {"amplitude", c.synthesis.amplitude},
                      {"decay_time_s", optional_number(c.synthesis.decay_time_s)}};
    j["noise"] = {{"snr_db", optional_number(c.noise.snr_db)}, {"rms", c.noise.rms}};
    j["analysis"] = {{"window_size", c.analysis.window_size},
                     {"hop_fraction", c.analysis.hop_fraction},
                     {"window", c.analysis.window},
                     {"band_low_hz", optional_number(c.analysis.band_low_hz)},
                     {"band_high_hz", optional_number(c.analysis.band_high_hz)},
                     {"continuity_limit_hz", c.analysis.continuity_limit_hz},
                     {"n_max", c.analysis.n_max},
                     {"frame_stride", c.analysis.frame_stride},
                     {"max_fits", c.analysis.max_fits ? json(*c.analysis.max_fits) : json(nullptr)},
                     {"threads", c.analysis.threads}};
    j["sweep"] = {{"first_hz", c.sweep.first_hz},
                  {"last_hz", c.sweep.last_hz},
                  {"count", c.sweep.count},
                  {"resonant_tilt_deg", c.sweep.resonant_tilt_deg},
                  {"duration_s", c.sweep.duration_s},
                  {"fits_per_point", c.sweep.fits_per_point},
                  {"max_valid_fork_width_hz", c.sweep.max_valid_fork_width_hz}};
    j["calibration"] = {{"thermal_resistance_uk_per_pw", c.calibration.thermal_resistance_uk_per_pw},
                        {"q_total", c.calibration.q_total},
                        {"q_thermal", c.calibration.q_thermal},
                        {"tilt_slope", c.calibration.tilt_slope},
                        {"reference_nominal", c.calibration.reference_nominal},
                        {"heating_uk", optional_number(c.calibration.heating_uk)},
                        {"modulation_hz", optional_number(c.calibration.modulation_hz)}};
    const auto& k = c.texture.coefficients;
    j["texture"] = {{"field_gauss", c.texture.field_gauss},
                    {"healing_length_cm", c.texture.healing_length_cm},
                    {"trap_volume_cm3", c.texture.trap_volume_cm3},
                    {"leggett_hz", c.texture.leggett_hz},
                    {"larmor_hz", c.texture.larmor_hz},
                    {"beta_l_deg", c.texture.beta_l_deg},
                    {"bulk_velocity_cm_s", c.texture.bulk_velocity_cm_s},
                    {"surface_velocity_cm_s", c.texture.surface_velocity_cm_s},
                    {"coefficients",
                     {{"a", optional_number(k.a)},
                      {"lambda_dv", optional_number(k.lambda_dv)},
                      {"lambda_hv", optional_number(k.lambda_hv)},
                      {"lambda_hv1", optional_number(k.lambda_hv1)},
                      {"lambda_g1", optional_number(k.lambda_g1)},
                      {"lambda_g2", optional_number(k.lambda_g2)},
                      {"d_sh", optional_number(k.d_sh)},
                      {"lambda_shv1", optional_number(k.lambda_shv1)},
                      {"lambda_sg", optional_number(k.lambda_sg)},
                      {"b2", optional_number(k.b2)},
                      {"b4", optional_number(k.b4)}}}};
    return j;
}

json load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    json user = json::parse(in, nullptr, false, true);
    if (user.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
    return merge(default_json(), user);
}

std::string config_hash(const json& resolved) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char ch : resolved.dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

hydro::SurfaceMode solve_configured_mode(const RunConfig& c) {
    return hydro::solve_mode(c.cell, c.mode.index, c.mode.quality_factor, c.mode.meniscus);
}

crystal::TimeCrystalParams crystal_params(const RunConfig& c) {
    crystal::TimeCrystalParams p;
    p.base_frequency = units::hz_to_rad_s(c.crystal.base_frequency_hz);
    p.coupling = crystal::Coupling::from_hz_per_deg2(c.crystal.coupling_hz_per_deg2);
    p.static_tilt = units::deg_to_rad(c.crystal.static_tilt_deg);
    p.drift.amplitude = units::hz_to_rad_s(c.crystal.drift_hz);
    p.drift.relaxation_time = c.crystal.drift_time_s;
    return p;
}

signal::DriveProgram drive_program(const RunConfig& c, const hydro::SurfaceMode& mode) {
    signal::DriveProgram d;
    d.excitation_frequency =
        c.drive.excitation_hz ? units::hz_to_rad_s(*c.drive.excitation_hz) : mode.angular_frequency;
    d.max_tilt = units::deg_to_rad(c.drive.max_tilt_deg);
    d.start = c.drive.start_s;
    if (c.drive.stop_s) d.stop = *c.drive.stop_s;
    return d;
}

signal::SynthesisOptions synthesis_options(const RunConfig& c) {
    signal::SynthesisOptions o;
    o.duration = c.synthesis.duration_s;
    o.sample_rate = c.synthesis.sample_rate_hz;
    o.lockin_offset = units::hz_to_rad_s(c.synthesis.lockin_offset_hz);
    o.amplitude = c.synthesis.amplitude;
    if (c.synthesis.decay_time_s) o.amplitude_decay_time = *c.synthesis.decay_time_s;
    return o;
}

signal::NoiseSpec noise_spec(const RunConfig& c) {
    signal::NoiseSpec n;
    n.seed = c.seed;
    n.additive_noise_rms = c.noise.snr_db ? signal::noise_rms_for_snr(c.synthesis.amplitude, *c.noise.snr_db) : c.noise.rms;
    return n;
}

spectral::RecordFitOptions analysis_options(const RunConfig& c) {
    spectral::RecordFitOptions o;
    o.spectrogram.window_size = c.analysis.window_size;
    o.spectrogram.hop_fraction = c.analysis.hop_fraction;
    o.spectrogram.window = parse_window(c.analysis.window);
    if (c.analysis.band_low_hz) o.spectrogram.band_low = *c.analysis.band_low_hz;
    if (c.analysis.band_high_hz) o.spectrogram.band_high = *c.analysis.band_high_hz;
    o.trace.continuity_limit = c.analysis.continuity_limit_hz;
    o.fit.n_max = c.analysis.n_max;
    o.frame_stride = c.analysis.frame_stride;
    if (c.analysis.max_fits) o.max_fits = *c.analysis.max_fits;
    o.threads = c.analysis.threads;
    return o;
}

calib::ThermalModel thermal_model(const RunConfig& c, const hydro::SurfaceMode& mode) {
    calib::ThermalModel m;
    m.thermal_resistance = c.calibration.thermal_resistance_uk_per_pw * units::micro / units::pico;
    m.q_total = c.calibration.q_total;
    m.q_thermal = c.calibration.q_thermal;
    m.cell = c.cell;
    m.mode = mode;
    m.mode.quality_factor = c.calibration.q_total;
    m.validate();
    return m;
}

texture::AuditConditions audit_conditions(const RunConfig& c) {
    texture::AuditConditions ac;
    auto& in = ac.inputs;
    in.field = c.texture.field_gauss;
    in.healing_length = c.texture.healing_length_cm;
    in.trap_volume = c.texture.trap_volume_cm3;
    in.leggett_frequency = units::hz_to_rad_s(c.texture.leggett_hz);
    in.larmor_frequency = units::hz_to_rad_s(c.texture.larmor_hz);
    in.coefficients = c.texture.coefficients;
    ac.beta_l = units::deg_to_rad(c.texture.beta_l_deg);
    ac.bulk_velocity = c.texture.bulk_velocity_cm_s;
    ac.surface_velocity = c.texture.surface_velocity_cm_s;
    return ac;
}

} // namespace tcopt::config
