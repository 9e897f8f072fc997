#include "tcopt/calibration.hpp"

#include "tcopt/errors.hpp"
#include "tcopt/optimize.hpp"
#include "tcopt/units.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tcopt::calib {

void GeophoneCal::validate() const {
    if (!(scale > 0.0)) throw DomainError("geophone scale C must be positive");
    if (!(exponent > 0.0)) throw DomainError("geophone exponent nu must be positive");
    if (!std::isfinite(base)) throw DomainError("geophone base level must be finite");
}

double GeophoneCal::level(double nominal_amplitude) const {
    if (!(nominal_amplitude >= 0.0)) throw DomainError("nominal amplitude must be non-negative");
    return scale * std::pow(nominal_amplitude, exponent) + base;
}

double GeophoneCal::normalized(double nominal_amplitude, double reference) const {
    return level(nominal_amplitude) / level(reference);
}

namespace {

// C and B by linear least squares for a fixed exponent; returns the residual sum of squares.
double linear_for_exponent(std::span<const GeophonePoint> pts, double nu, double& c, double& b) {
    double sxx = 0, sx = 0, sy = 0, sxy = 0;
    const double n = static_cast<double>(pts.size());
    for (const auto& p : pts) {
        const double x = std::pow(p.nominal, nu);
        sxx += x * x;
        sx += x;
        sy += p.voltage;
        sxy += x * p.voltage;
    }
    const double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-300) return std::numeric_limits<double>::infinity();
    c = (n * sxy - sx * sy) / det;
    b = (sxx * sy - sx * sxy) / det;
    double rss = 0;
    for (const auto& p : pts) {
        const double r = c * std::pow(p.nominal, nu) + b - p.voltage;
        rss += r * r;
    }
    return rss;
}

} // namespace

GeophoneCal fit_geophone(std::span<const GeophonePoint> points) {
    if (points.size() < 4) throw DomainError("geophone fit needs at least 4 points");
    for (const auto& p : points) {
        if (!(p.nominal >= 0.0)) throw DomainError("nominal amplitudes must be non-negative");
    }

    double best_rss = std::numeric_limits<double>::infinity();
    double c0 = 1.0, b0 = 0.0, nu0 = 1.0;
    for (double nu = 0.1; nu <= 3.0 + 1e-9; nu += 0.05) {
        double c = 0, b = 0;
        const double rss = linear_for_exponent(points, nu, c, b);
        if (rss < best_rss && c > 0.0) {
            best_rss = rss;
            c0 = c;
            b0 = b;
            nu0 = nu;
        }
    }

    const optim::ResidualFn residual = [&](std::span<const double> x, std::span<double> r) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            r[i] = x[0] * std::pow(points[i].nominal, x[1]) + x[2] - points[i].voltage;
        }
    };
    optim::Bounds bounds{{1e-300, 1e-6, -std::numeric_limits<double>::infinity()}, {}};
    const auto fit = optim::least_squares(residual, {c0, nu0, b0}, points.size(), bounds,
                                          {.max_iterations = 200, .x_tolerance = 1e-14, .g_tolerance = 1e-15,
                                           .f_tolerance = 1e-15});
    if (!fit.converged || !std::isfinite(fit.cost)) {
        std::ostringstream os;
        os << "geophone fit did not converge (" << fit.message << "): start C=" << c0 << " nu=" << nu0
           << " B=" << b0 << ", last C=" << fit.x[0] << " nu=" << fit.x[1] << " B=" << fit.x[2];
        throw SolverError(os.str());
    }
    GeophoneCal cal{fit.x[0], fit.x[1], fit.x[2]};
    cal.validate();
    return cal;
}

void ThermalModel::validate() const {
    if (!(thermal_resistance > 0.0)) throw DomainError("thermal resistance must be positive");
    if (!(q_total > 0.0)) throw DomainError("Q_total must be positive");
    if (!(q_thermal >= q_total)) throw DomainError("Q_thermal must be >= Q_total");
    cell.validate();
    if (!(mode.angular_frequency > 0.0)) throw DomainError("thermal model needs a solved surface mode");
}

double ThermalModel::q_residual() const {
    const double inv = 1.0 / q_total - 1.0 / q_thermal;
    return inv > 0.0 ? 1.0 / inv : std::numeric_limits<double>::infinity();
}

ThermalModel helium3_thermal_model() {
    ThermalModel m;
    m.cell = hydro::helium3_cell();
    m.mode = hydro::solve_mode(m.cell, 1, m.q_total, true);
    return m;
}

double scale_thermal_resistance(double reference, double reference_length, double reference_diameter,
                                double length, double diameter) {
    const double d = reference_diameter / diameter;
    return reference * (length / reference_length) * d * d;
}

double energy_loss_fraction(double quality_factor) {
    if (!(quality_factor > 0.0)) throw DomainError("quality factor must be positive");
    return -std::expm1(-units::two_pi / quality_factor);
}

double stored_energy(const hydro::FluidCell& cell, double max_tilt_rad) {
    const double r2 = cell.radius * cell.radius;
    return units::pi / 8.0 * cell.density * cell.gravity * r2 * r2 * max_tilt_rad * max_tilt_rad;
}

double dissipated_power(const hydro::FluidCell& cell, const hydro::SurfaceMode& mode, double max_tilt_deg,
                        double quality_factor) {
    if (!(max_tilt_deg >= 0.0)) throw DomainError("tilt amplitude must be non-negative");
    const double theta = units::deg_to_rad(max_tilt_deg);
    const double r2 = cell.radius * cell.radius;
    return mode.angular_frequency / 16.0 * energy_loss_fraction(quality_factor) * cell.density * cell.gravity *
           r2 * r2 * theta * theta;
}

double dissipated_power(const hydro::FluidCell& cell, const hydro::SurfaceMode& mode, double max_tilt_deg) {
    return dissipated_power(cell, mode, max_tilt_deg, mode.quality_factor);
}

double heating_per_deg2(const ThermalModel& model, double quality_factor) {
    return model.thermal_resistance * dissipated_power(model.cell, model.mode, 1.0, quality_factor);
}

double tilt_from_heating(double temperature_difference, const ThermalModel& model) {
    if (!(temperature_difference >= 0.0)) throw DomainError("temperature difference must be non-negative");
    model.validate();
    return std::sqrt(temperature_difference / heating_per_deg2(model, model.q_total));
}

void TiltCalibration::validate() const {
    if (!(slope > 0.0)) throw DomainError("tilt calibration slope must be positive");
}

double TiltCalibration::max_tilt_deg(double normalized_amplitude) const {
    if (!(normalized_amplitude >= 0.0)) throw DomainError("normalized amplitude must be non-negative");
    return std::sqrt(slope * normalized_amplitude);
}

TiltCalibration fit_tilt_calibration(std::span<const HeatingPoint> points, const ThermalModel& model) {
    if (points.empty()) throw DomainError("tilt calibration needs at least one point");
    model.validate();
    const double per_deg2 = heating_per_deg2(model, model.q_total);
    double sxy = 0.0, sxx = 0.0;
    for (const auto& p : points) {
        const double theta2 = p.temperature_difference / per_deg2;
        sxy += p.normalized_amplitude * theta2;
        sxx += p.normalized_amplitude * p.normalized_amplitude;
    }
    if (!(sxx > 0.0)) throw DomainError("tilt calibration needs a non-zero amplitude");
    TiltCalibration cal{sxy / sxx};
    cal.validate();
    return cal;
}

CouplingBand coupling_band(double modulation_hz, const ThermalModel& model, double temperature_difference) {
    if (!(modulation_hz >= 0.0)) throw DomainError("modulation amplitude G must be non-negative");
    if (!(temperature_difference > 0.0)) throw DomainError("temperature difference must be positive");
    model.validate();
    // theta^2 = dT / (R_T P/theta^2), so g = G R_T (P/theta^2) / dT grows with the assumed loss.
    CouplingBand band;
    band.high = modulation_hz * heating_per_deg2(model, model.q_total) / temperature_difference;
    band.low = modulation_hz * heating_per_deg2(model, model.q_thermal) / temperature_difference;
    return band;
}

HeatFraction surface_heat_fraction(double coupling_fit, const ThermalModel& model, double modulation_hz,
                                   double temperature_difference) {
    const auto band = coupling_band(modulation_hz, model, temperature_difference);
    const double tol = 1e-12 * band.high;
    if (coupling_fit < band.low - tol || coupling_fit > band.high + tol) {
        std::ostringstream os;
        os << "coupling " << coupling_fit << " Hz/deg^2 outside the calibration band [" << band.low << ", "
           << band.high << "]";
        throw DomainError(os.str());
    }
    HeatFraction out;
    if (band.high == band.low) return out;
    // Bulk loss interpolates between L(Q_total) (nothing bypasses) and L(Q_thermal) (all of the
    // temperature-independent part bypasses); g is proportional to the bulk loss.
    out.fraction_of_residual = std::clamp((band.high - coupling_fit) / (band.high - band.low), 0.0, 1.0);
    const double l_total = energy_loss_fraction(model.q_total);
    const double l_thermal = energy_loss_fraction(model.q_thermal);
    out.fraction_of_total = out.fraction_of_residual * (l_total - l_thermal) / l_total;
    return out;
}

namespace {

using nlohmann::json;

json cell_json(const hydro::FluidCell& c) {
    return {{"density", c.density}, {"surface_tension", c.surface_tension}, {"gravity", c.gravity},
            {"radius", c.radius}, {"depth", c.depth}};
}

json mode_json(const hydro::SurfaceMode& m) {
    return {{"wavenumber", m.wavenumber}, {"angular_frequency", m.angular_frequency},
            {"quality_factor", m.quality_factor}, {"mode_index", m.mode_index}, {"radius", m.radius}};
}

} // namespace

std::string bundle_to_json(const CalibrationBundle& b) {
    json j;
    j["version"] = b.version;
    j["geophone"] = {{"C", b.geophone.scale}, {"nu", b.geophone.exponent}, {"B", b.geophone.base}};
    j["thermal"] = {{"thermal_resistance_K_per_W", b.thermal.thermal_resistance},
                    {"q_total", b.thermal.q_total},
                    {"q_thermal", b.thermal.q_thermal},
                    {"cell", cell_json(b.thermal.cell)},
                    {"mode", mode_json(b.thermal.mode)}};
    j["tilt"] = {{"slope_deg2_per_A_exc", b.tilt.slope}};
    j["reference_nominal"] = b.reference_nominal;
    j["derived"] = {{"heating_uK_per_deg2", heating_per_deg2(b.thermal, b.thermal.q_total) / units::micro},
                    {"power_pW_per_deg2",
                     dissipated_power(b.thermal.cell, b.thermal.mode, 1.0, b.thermal.q_total) / units::pico},
                    {"q_residual", b.thermal.q_residual()}};
    return j.dump(2);
}

CalibrationBundle bundle_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        CalibrationBundle b;
        b.version = j.at("version").get<int>();
        if (b.version != 1) throw IoError("unsupported calibration bundle version " + std::to_string(b.version));
        const auto& g = j.at("geophone");
        b.geophone = {g.at("C").get<double>(), g.at("nu").get<double>(), g.at("B").get<double>()};
        const auto& t = j.at("thermal");
        b.thermal.thermal_resistance = t.at("thermal_resistance_K_per_W").get<double>();
        b.thermal.q_total = t.at("q_total").get<double>();
        b.thermal.q_thermal = t.at("q_thermal").get<double>();
        const auto& c = t.at("cell");
        b.thermal.cell = {c.at("density").get<double>(), c.at("surface_tension").get<double>(),
                          c.at("gravity").get<double>(), c.at("radius").get<double>(), c.at("depth").get<double>()};
        const auto& m = t.at("mode");
        b.thermal.mode.wavenumber = m.at("wavenumber").get<double>();
        b.thermal.mode.angular_frequency = m.at("angular_frequency").get<double>();
        b.thermal.mode.quality_factor = m.at("quality_factor").get<double>();
        b.thermal.mode.mode_index = m.at("mode_index").get<int>();
        b.thermal.mode.radius = m.at("radius").get<double>();
        b.tilt.slope = j.at("tilt").at("slope_deg2_per_A_exc").get<double>();
        b.reference_nominal = j.at("reference_nominal").get<double>();
        return b;
    } catch (const json::exception& e) {
        throw IoError(std::string("calibration bundle: ") + e.what());
    }
}

} // namespace tcopt::calib
