#include "tcopt/commands.hpp"

#include "tcopt/calibration.hpp"
#include "tcopt/errors.hpp"
#include "tcopt/record_io.hpp"
#include "tcopt/resonance_sweep.hpp"
#include "tcopt/special.hpp"
#include "tcopt/texture_energy.hpp"
#include "tcopt/units.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>

namespace tcopt::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    return os;
}

void write_json(const Context& ctx, const fs::path& path, json j) {
    j["config_hash"] = ctx.hash;
    auto os = open_output(path);
    os << j.dump(2) << '\n';
    if (!os) throw IoError("write failed for " + path.string());
}

// CSV with the config hash as a leading comment line.
class CsvWriter {
  public:
    CsvWriter(const Context& ctx, const fs::path& path, const std::string& header)
        : path_(path), os_(open_output(path)) {
        os_ << "# config_hash=" << ctx.hash << '\n' << header << '\n';
    }

    template <typename... T>
    void row(const T&... cells) {
        bool first = true;
        ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
        os_ << '\n';
    }

    void close() {
        os_.close();
        if (!os_) throw IoError("write failed for " + path_.string());
    }

  private:
    static std::string cell(double v) { return num(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }

    fs::path path_;
    std::ofstream os_;
};

// Numeric rows of a comma-separated file; '#' lines and one header line are skipped.
std::vector<std::vector<double>> read_numeric_csv(const fs::path& path, std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
            }
        }
        if (row.size() < columns) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                          " columns");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

double excitation_hz_of(const Context& ctx, const hydro::SurfaceMode& mode) {
    return ctx.config.drive.excitation_hz ? *ctx.config.drive.excitation_hz : mode.frequency_hz();
}

json fit_json(const spectral::WindowFit& f) {
    return {{"t", f.t_center},
            {"A", f.amplitude},
            {"G", f.modulation},
            {"Theta", f.asymmetry},
            {"mean_f", f.mean_frequency},
            {"residual", f.residual_norm},
            {"converged", f.converged},
            {"theta_identifiable", f.asymmetry_identifiable}};
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Writes the spectrogram, trace and fits of an analysis and returns its summary.
json write_analysis(const Context& ctx, const fs::path& dir, const spectral::RecordAnalysis& a, double fexc) {
    const auto& spec = a.spectrogram;
    {
        CsvWriter w(ctx, dir / "spectrogram.csv", "t,f,mag");
        for (const auto& frame : spec.frames) {
            for (std::size_t j = 0; j < frame.magnitude.size(); ++j) w.row(frame.t_center, spec.frequency(j), frame.magnitude[j]);
        }
        w.close();
    }
    {
        CsvWriter w(ctx, dir / "trace.csv", "t,f,f_smoothed,amplitude,gap,fallback");
        for (std::size_t i = 0; i < a.trace.points.size(); ++i) {
            const auto& p = a.trace.points[i];
            w.row(p.t_center, p.frequency, a.trace.smoothed[i], p.amplitude, p.gap, p.fallback);
        }
        w.close();
    }
    if (ctx.format == Format::json) {
        json fits = json::array();
        for (const auto& f : a.fits) fits.push_back(fit_json(f));
        write_json(ctx, dir / "fits.json", {{"fits", fits}});
    } else {
        CsvWriter w(ctx, dir / "fits.csv", "t,A,G,Theta,mean_f,residual,converged");
        for (const auto& f : a.fits) {
            w.row(f.t_center, f.amplitude, f.modulation, f.asymmetry, f.mean_frequency, f.residual_norm, f.converged);
        }
        w.close();
    }

    std::vector<double> g, theta;
    std::size_t converged = 0;
    for (const auto& f : a.fits) {
        g.push_back(f.modulation);
        theta.push_back(f.asymmetry);
        converged += f.converged ? 1 : 0;
    }
    // Line structure of the middle frame around the traced central band.
    json lines;
    if (!spec.frames.empty()) {
        const std::size_t mid = spec.frames.size() / 2;
        const auto levels = spectral::line_levels(spec, mid, a.trace.points[mid].frequency, fexc, ctx.config.analysis.n_max);
        lines = {{"frame_t", spec.frames[mid].t_center},
                 {"carrier", levels.carrier},
                 {"strongest_sideband", levels.strongest_sideband},
                 {"even_sideband_energy", levels.even_energy},
                 {"odd_sideband_energy", levels.odd_energy},
                 {"sidebands_at_twice_drive_spacing", levels.odd_energy < 0.01 * levels.even_energy}};
    }
    return {{"excitation_hz", fexc},
            {"frames", spec.frames.size()},
            {"bin_width_hz", spec.bin_width},
            {"frame_spacing_s", spec.frame_spacing()},
            {"trace_gaps", a.trace.gaps()},
            {"fits", a.fits.size()},
            {"fits_converged", converged},
            {"median_G_hz", median_of(g)},
            {"median_Theta", median_of(theta)},
            {"line_levels", lines}};
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json mode_report(const config::RunConfig& c) {
    c.cell.validate();
    const double k = hydro::solve_mode_wavenumber(c.cell, c.mode.index);
    json report = {{"mode_index", c.mode.index},
                   {"wavenumber_per_m", k},
                   {"k_times_radius", k * c.cell.radius},
                   {"frequency_no_meniscus_hz", units::rad_s_to_hz(hydro::dispersion(c.cell, k, false))},
                   {"quality_factor", c.mode.quality_factor},
                   {"depth_to_diameter", c.cell.depth_to_diameter()},
                   {"deep_container", c.cell.deep_container()}};
    try {
        report["frequency_hz"] = units::rad_s_to_hz(hydro::dispersion(c.cell, k, true));
        report["meniscus_valid"] = true;
    } catch (const DomainError& e) {
        report["frequency_hz"] = nullptr;
        report["meniscus_valid"] = false;
        report["meniscus_error"] = e.what();
    }
    report["selected_frequency_hz"] = c.mode.meniscus ? report["frequency_hz"] : report["frequency_no_meniscus_hz"];
    return report;
}

// Nominal drive amplitude that the default geophone calibration maps onto a tilt amplitude.
double nominal_for_tilt(const config::RunConfig& c, double tilt_deg) {
    calib::TiltCalibration tilt{c.calibration.tilt_slope};
    tilt.validate();
    const double a_exc = tilt_deg * tilt_deg / tilt.slope;
    return a_exc * c.calibration.reference_nominal;
}

json synth_into(const Context& ctx, const fs::path& dir, const config::RunConfig& c) {
    const auto mode = config::solve_configured_mode(c);
    const auto params = config::crystal_params(c);
    const auto drive = config::drive_program(c, mode);
    const auto rec = signal::synthesize(params, drive, config::noise_spec(c), config::synthesis_options(c));
    const std::map<std::string, std::string> meta{{"config_hash", ctx.hash},
                                                  {"excitation_hz", num(drive.excitation_hz())}};
    signal::write_record_csv(dir / "record.csv", rec, meta);

    const calib::GeophoneCal cal{};
    const double geo_rate = 4800.0;
    auto geo_noise = config::noise_spec(c);
    geo_noise.additive_noise_rms = 0.0;
    const auto geo = signal::geophone_trace(nominal_for_tilt(c, c.drive.max_tilt_deg), cal, drive.excitation_frequency,
                                            c.synthesis.duration_s, geo_rate, geo_noise);
    signal::write_series_csv(dir / "geophone.csv", geo, geo_rate, meta);

    const double g = params.coupling.hz_per_rad2() * drive.max_tilt * drive.max_tilt;
    return {{"samples", rec.size()},
            {"duration_s", rec.duration()},
            {"excitation_hz", drive.excitation_hz()},
            {"injected_G_hz", g},
            {"injected_Theta", drive.max_tilt > 0.0 ? params.static_tilt / drive.max_tilt : 0.0},
            {"noise_rms", config::noise_spec(c).additive_noise_rms},
            {"record", (dir / "record.csv").string()},
            {"geophone", (dir / "geophone.csv").string()}};
}

json sweep_into(const Context& ctx, const fs::path& dir, const config::RunConfig& c,
                const std::optional<fs::path>& input) {
    std::vector<sweep::SweepPoint> points;
    json summary;
    std::optional<sweep::PipelineSweep> synthetic;
    if (input) {
        for (const auto& row : read_numeric_csv(*input, 2)) {
            points.push_back({row[0], row[1], row.size() > 2 ? row[2] : 0.0});
        }
        summary["input"] = input->string();
    } else {
        sweep::PipelineSweep s;
        s.mode = config::solve_configured_mode(c);
        s.crystal = config::crystal_params(c);
        s.resonant_tilt = units::deg_to_rad(c.sweep.resonant_tilt_deg);
        s.excitation_hz = sweep::linear_frequencies(c.sweep.first_hz, c.sweep.last_hz, c.sweep.count);
        s.synthesis = config::synthesis_options(c);
        s.synthesis.duration = c.sweep.duration_s;
        s.noise = config::noise_spec(c);
        s.analysis = config::analysis_options(c);
        s.analysis.max_fits = c.sweep.fits_per_point;
        s.threads = c.analysis.threads;
        points = sweep::run_pipeline_sweep(s);
        synthetic = s;
    }
    {
        CsvWriter w(ctx, dir / "sweep.csv", "f_exc,G,sigma");
        for (const auto& p : points) w.row(p.excitation_hz, p.response, p.sigma);
        w.close();
    }
    const auto fit = sweep::fit_resonance(points);
    json res = {{"center_hz", fit.center},
                {"width_hz", fit.width},
                {"peak_G_hz", fit.peak},
                {"quality_factor", fit.quality_factor},
                {"residual_norm", fit.residual_norm},
                {"converged", fit.converged},
                {"extrapolated", fit.extrapolated}};
    if (synthetic) {
        res["injected_center_hz"] = synthetic->mode.frequency_hz();
        res["injected_quality_factor"] = synthetic->mode.quality_factor;
    }
    write_json(ctx, dir / "resonance.json", res);
    summary["points"] = points.size();
    summary["resonance"] = res;
    return summary;
}

json audit_into(const Context& ctx, const fs::path& dir, const config::RunConfig& c) {
    const auto report = texture::energy_audit(config::audit_conditions(c));
    const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json("unavailable"); };
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"term", r.term},
                        {"group", r.group},
                        {"unit", r.unit},
                        {"magnitude", opt(r.magnitude)},
                        {"ratio_to_max", r.ratio_to_max ? json(*r.ratio_to_max) : json(nullptr)},
                        {"quoted", r.quoted ? json(*r.quoted) : json(nullptr)}});
    }
    if (ctx.format == Format::json) {
        write_json(ctx, dir / "energy_audit.json", {{"rows", rows}});
    } else {
        CsvWriter w(ctx, dir / "energy_audit.csv", "term,group,unit,magnitude,ratio_to_max,quoted");
        const auto text = [](const std::optional<double>& v, const char* missing) { return v ? num(*v) : std::string(missing); };
        for (const auto& r : report.rows) {
            w.row(r.term, r.group, r.unit, text(r.magnitude, "unavailable"), text(r.ratio_to_max, ""), text(r.quoted, ""));
        }
        w.close();
    }
    return {{"surface_dominance", report.surface_dominance},
            {"per_magnon_density_erg_cm3", report.per_magnon_density},
            {"crossover_magnon_number", report.crossover_magnon_number},
            {"rows", rows}};
}

json calibrate_into(const Context& ctx, const fs::path& dir, const config::RunConfig& c,
                    const std::optional<fs::path>& geophone_points, const std::optional<fs::path>& heating_points) {
    const auto mode = config::solve_configured_mode(c);
    calib::CalibrationBundle bundle;
    bundle.thermal = config::thermal_model(c, mode);
    bundle.tilt.slope = c.calibration.tilt_slope;
    bundle.reference_nominal = c.calibration.reference_nominal;
    json summary;
    if (geophone_points) {
        std::vector<calib::GeophonePoint> pts;
        for (const auto& row : read_numeric_csv(*geophone_points, 2)) pts.push_back({row[0], row[1]});
        bundle.geophone = calib::fit_geophone(pts);
        summary["geophone_points"] = pts.size();
    }
    if (heating_points) {
        std::vector<calib::HeatingPoint> pts;
        for (const auto& row : read_numeric_csv(*heating_points, 2)) pts.push_back({row[0], row[1] * units::micro});
        bundle.tilt = calib::fit_tilt_calibration(pts, bundle.thermal);
        summary["heating_points"] = pts.size();
    }
    const auto path = dir / "calibration.json";
    json j = json::parse(calib::bundle_to_json(bundle));
    if (c.calibration.heating_uk && c.calibration.modulation_hz) {
        const double dt = *c.calibration.heating_uk * units::micro;
        const auto band = calib::coupling_band(*c.calibration.modulation_hz, bundle.thermal, dt);
        j["coupling_band"] = {{"low_hz_per_deg2", band.low}, {"high_hz_per_deg2", band.high}};
        const double g_fit = c.crystal.coupling_hz_per_deg2;
        try {
            const auto frac = calib::surface_heat_fraction(g_fit, bundle.thermal, *c.calibration.modulation_hz, dt);
            j["heat_fraction"] = {{"coupling_fit_hz_per_deg2", g_fit},
                                  {"fraction_of_residual", frac.fraction_of_residual},
                                  {"fraction_of_total", frac.fraction_of_total}};
        } catch (const DomainError& e) {
            j["heat_fraction"] = {{"coupling_fit_hz_per_deg2", g_fit}, {"error", e.what()}};
        }
    }
    write_json(ctx, path, j);
    summary["bundle"] = j;
    return summary;
}

} // namespace

Format parse_format(const std::string& name) {
    if (name == "csv") return Format::csv;
    if (name == "json") return Format::json;
    throw ConfigError("unknown output format '" + name + "' (csv or json)");
}

Context make_context(const ContextRequest& request) {
    json resolved = request.config_path ? config::load(*request.config_path) : config::default_json();
    for (const auto& o : request.overrides) config::apply_override(resolved, o);
    if (request.seed) resolved["seed"] = *request.seed;
    if (request.out_dir) resolved["output_dir"] = *request.out_dir;
    Context ctx;
    ctx.config = config::from_json(resolved);
    ctx.resolved = config::to_json(ctx.config);
    ctx.hash = config::config_hash(ctx.resolved);
    ctx.out_dir = ctx.config.output_dir;
    ctx.format = request.format;
    return ctx;
}

void prepare_output(const Context& ctx, const std::string& command) {
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + ctx.out_dir.string() + ": " + ec.message());
    write_json(ctx, ctx.out_dir / "config.resolved.json", {{"config", ctx.resolved}});
    write_json(ctx, ctx.out_dir / "run_info.json", {{"command", command}, {"started_utc", utc_timestamp()}});
}

json cmd_mode(const Context& ctx) {
    json report = mode_report(ctx.config);
    write_json(ctx, ctx.out_dir / "mode.json", report);
    return report;
}

json cmd_synth(const Context& ctx) {
    json summary = synth_into(ctx, ctx.out_dir, ctx.config);
    write_json(ctx, ctx.out_dir / "synth.json", summary);
    return summary;
}

json cmd_analyze(const Context& ctx, const fs::path& record, const std::optional<fs::path>& geophone) {
    const auto rec = signal::read_record_csv(record);
    double fexc = 0.0;
    if (geophone) {
        double rate = 0.0;
        const auto trace = signal::read_series_csv(*geophone, &rate);
        fexc = signal::estimate_drive_frequency(trace, rate);
    } else {
        fexc = excitation_hz_of(ctx, config::solve_configured_mode(ctx.config));
    }
    const auto analysis = spectral::analyze_record(rec, fexc, config::analysis_options(ctx.config));
    json summary = write_analysis(ctx, ctx.out_dir, analysis, fexc);
    summary["record"] = record.string();
    write_json(ctx, ctx.out_dir / "analysis.json", summary);
    return summary;
}

json cmd_sweep(const Context& ctx, const std::optional<fs::path>& input) {
    return sweep_into(ctx, ctx.out_dir, ctx.config, input);
}

json cmd_calibrate(const Context& ctx, const std::optional<fs::path>& geophone_points,
                   const std::optional<fs::path>& heating_points) {
    return calibrate_into(ctx, ctx.out_dir, ctx.config, geophone_points, heating_points);
}

json cmd_energy_audit(const Context& ctx) {
    return audit_into(ctx, ctx.out_dir, ctx.config);
}

json cmd_pipeline(const Context& ctx) {
    const auto& base = ctx.config;
    const auto sub = [&](const char* name) {
        const fs::path dir = ctx.out_dir / name;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string());
        return dir;
    };
    json bundle;
    bundle["mode"] = mode_report(base);
    write_json(ctx, sub("mode") / "mode.json", bundle["mode"]);

    const auto mode = config::solve_configured_mode(base);
    const double fexc = excitation_hz_of(ctx, mode);

    // Default scenario: synthesize, then analyze the record that was just written.
    {
        const fs::path dir = sub("signal");
        json synth = synth_into(ctx, dir, base);
        const auto rec = signal::read_record_csv(dir / "record.csv");
        const auto analysis = spectral::analyze_record(rec, fexc, config::analysis_options(base));
        synth["analysis"] = write_analysis(ctx, dir, analysis, fexc);
        bundle["signal"] = synth;
    }

    // Drive amplitude ramp without drift: the mean frequency moves by G/2.
    {
        const fs::path dir = sub("ramp");
        config::RunConfig c = base;
        c.crystal.drift_hz = 0.0;
        c.synthesis.duration_s = std::min(c.synthesis.duration_s, 1.5);
        auto opts = config::analysis_options(c);
        opts.max_fits = 3;
        const auto mean_f = [&](double tilt_deg, double& fitted_g) {
            c.drive.max_tilt_deg = tilt_deg;
            const auto rec = signal::synthesize(config::crystal_params(c), config::drive_program(c, mode),
                                                config::noise_spec(c), config::synthesis_options(c));
            const auto fits = spectral::fit_record(rec, fexc, opts);
            std::vector<double> mf, g;
            for (const auto& f : fits) {
                mf.push_back(f.mean_frequency);
                g.push_back(f.modulation);
            }
            fitted_g = median_of(g);
            return median_of(mf);
        };
        double g0 = 0.0;
        const double baseline = mean_f(0.0, g0);
        CsvWriter w(ctx, dir / "mean_shift.csv", "tilt_deg,G_injected,G_fitted,mean_shift,half_G_fitted");
        json rows = json::array();
        for (double tilt : base.drive.ramp_tilts_deg) {
            double g_fit = 0.0;
            const double shift = baseline - mean_f(tilt, g_fit);
            const double g_true = base.crystal.coupling_hz_per_deg2 * tilt * tilt;
            w.row(tilt, g_true, g_fit, shift, 0.5 * g_fit);
            rows.push_back({{"tilt_deg", tilt}, {"G_injected", g_true}, {"G_fitted", g_fit}, {"mean_shift", shift}});
        }
        w.close();
        bundle["ramp"] = rows;
    }

    // Carrier null: G at the first zero of J0(G / 4 f_exc).
    {
        const fs::path dir = sub("carrier_null");
        config::RunConfig c = base;
        c.crystal.drift_hz = 0.0;
        c.crystal.static_tilt_deg = 0.0;
        c.synthesis.duration_s = std::min(c.synthesis.duration_s, 1.5);
        const double j0_zero = special::nth_zero([](double x) { return special::bessel_j(0, x); }, 1, 0.1, 0.05, 10.0).x;
        const double g_null = 4.0 * fexc * j0_zero;
        c.drive.max_tilt_deg = std::sqrt(g_null / c.crystal.coupling_hz_per_deg2);
        c.drive.excitation_hz = fexc;
        const auto rec = signal::synthesize(config::crystal_params(c), config::drive_program(c, mode),
                                            config::noise_spec(c), config::synthesis_options(c));
        auto opts = config::analysis_options(c);
        const auto spec = spectral::spectrogram(rec, opts.spectrogram);
        const std::size_t mid = spec.frames.size() / 2;
        const double mean_hz = c.synthesis.lockin_offset_hz - 0.5 * g_null;
        const auto levels = spectral::line_levels(spec, mid, mean_hz, fexc, c.analysis.n_max);
        CsvWriter w(ctx, dir / "lines.csv", "offset_hz,magnitude");
        for (int n = c.analysis.n_max; n >= 1; --n) w.row(-n * fexc, levels.lower[static_cast<std::size_t>(n - 1)]);
        w.row(0.0, levels.carrier);
        for (int n = 1; n <= c.analysis.n_max; ++n) w.row(n * fexc, levels.upper[static_cast<std::size_t>(n - 1)]);
        w.close();
        bundle["carrier_null"] = {{"G_hz", g_null},
                                  {"tilt_deg", c.drive.max_tilt_deg},
                                  {"carrier", levels.carrier},
                                  {"strongest_sideband", levels.strongest_sideband},
                                  {"carrier_ratio", levels.carrier / levels.strongest_sideband}};
    }

    bundle["sweep"] = sweep_into(ctx, sub("sweep"), base, std::nullopt);
    bundle["energy_audit"] = audit_into(ctx, sub("energy"), base);
    bundle["calibration"] = calibrate_into(ctx, sub("calibration"), base, std::nullopt, std::nullopt);
    write_json(ctx, ctx.out_dir / "bundle.json", bundle);
    return bundle;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) return 2;
    if (dynamic_cast<const SolverError*>(&e) || dynamic_cast<const AmplitudeFloorError*>(&e)) return 3;
    if (dynamic_cast<const IoError*>(&e)) return 4;
    return 1;
}

json error_json(const std::exception& e) {
    const int code = exit_code_for(e);
    const char* kind = code == 2 ? "config" : code == 3 ? "numerical" : code == 4 ? "io" : "internal";
    return {{"error", kind}, {"message", e.what()}, {"exit_code", code}};
}

} // namespace tcopt::cli
