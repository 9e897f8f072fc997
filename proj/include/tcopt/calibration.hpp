#pragma once

#include "tcopt/surface_hydro.hpp"

#include <span>
#include <string>
#include <vector>

namespace tcopt::calib {

/// Geophone power law V_gp = C * A_nom^nu + B.
struct GeophoneCal {
    double scale = 1.0;    ///< C, V per (nominal unit)^nu
    double exponent = 1.0; ///< nu
    double base = 0.0;     ///< B, V

    void validate() const;
    [[nodiscard]] double level(double nominal_amplitude) const;
    /// A_exc = V_gp(A_nom) / V_gp(reference).
    [[nodiscard]] double normalized(double nominal_amplitude, double reference = 0.098) const;
};

struct GeophonePoint {
    double nominal = 0.0; ///< A_nom
    double voltage = 0.0; ///< V_gp
};

/// Nonlinear least squares for (C, nu, B). Needs at least four points with A_nom >= 0.
/// Throws SolverError carrying the parameter trace when the fit does not converge.
[[nodiscard]] GeophoneCal fit_geophone(std::span<const GeophonePoint> points);

/// Lumped thermal path from the surface to the bottom thermometer, plus the two quality
/// factors that bracket how much of the surface dissipation reaches the bulk liquid.
struct ThermalModel {
    double thermal_resistance = 0.75e6; ///< R_T, K W^-1 (0.75 uK/pW)
    double q_total = 65.0;
    double q_thermal = 375.0;
    hydro::FluidCell cell;
    hydro::SurfaceMode mode;

    void validate() const;
    /// 1/Q_residual = 1/Q_total - 1/Q_thermal; infinite when the two coincide.
    [[nodiscard]] double q_residual() const;
};

/// 3He cell with its solved fundamental mode and the default thermal path.
[[nodiscard]] ThermalModel helium3_thermal_model();

/// Scales a measured thermal resistance by length ratio and inverse squared diameter ratio.
[[nodiscard]] double scale_thermal_resistance(double reference, double reference_length,
                                              double reference_diameter, double length, double diameter);

/// Fraction of oscillator energy lost per cycle, 1 - exp(-2 pi / Q).
[[nodiscard]] double energy_loss_fraction(double quality_factor);

/// Gravitational energy at maximum tilt, (pi/8) rho g R^4 theta^2, theta in rad. Joules.
[[nodiscard]] double stored_energy(const hydro::FluidCell& cell, double max_tilt_rad);

/// P = (omega/16)(1 - exp(-2 pi/Q)) rho g R^4 theta^2 with theta given in degrees. Watts.
[[nodiscard]] double dissipated_power(const hydro::FluidCell& cell, const hydro::SurfaceMode& mode,
                                      double max_tilt_deg, double quality_factor);
/// Same with Q taken from the mode.
[[nodiscard]] double dissipated_power(const hydro::FluidCell& cell, const hydro::SurfaceMode& mode,
                                      double max_tilt_deg);

/// dT/theta^2 in K deg^-2 when the energy lost at quality factor Q heats the bulk.
[[nodiscard]] double heating_per_deg2(const ThermalModel& model, double quality_factor);

/// theta_max (deg) from the measured temperature difference, calibrated with Q_total.
[[nodiscard]] double tilt_from_heating(double temperature_difference, const ThermalModel& model);

/// Single-parameter calibration theta_max^2 (deg^2) = slope * A_exc.
struct TiltCalibration {
    double slope = 2.62;

    void validate() const;
    [[nodiscard]] double max_tilt_deg(double normalized_amplitude) const;
};

struct HeatingPoint {
    double normalized_amplitude = 0.0;  ///< A_exc
    double temperature_difference = 0.0; ///< K
};

/// Least squares through the origin of theta^2 = dT / heating_per_deg2(Q_total) against A_exc.
[[nodiscard]] TiltCalibration fit_tilt_calibration(std::span<const HeatingPoint> points,
                                                   const ThermalModel& model);

/// Coupling range g = G / theta_max^2 (Hz deg^-2) spanned by the two heat-release limits.
/// The upper edge assumes all dissipation reaches the bulk (Q_total); the lower edge assumes the
/// temperature-independent part never enters it (Q_thermal).
struct CouplingBand {
    double low = 0.0;
    double high = 0.0;
};

[[nodiscard]] CouplingBand coupling_band(double modulation_hz, const ThermalModel& model,
                                         double temperature_difference);

struct HeatFraction {
    double fraction_of_residual = 0.0; ///< of the temperature-independent dissipation
    double fraction_of_total = 0.0;    ///< of all dissipation at the operating point
};

/// Fraction of surface-generated heat that bypasses the bulk, such that the bulk-heating
/// calibration reproduces `coupling_fit`. The bulk receives the thermal loss plus the retained
/// share of the residual loss, interpolated linearly between the two band edges.
/// Throws DomainError when the coupling lies outside the band.
[[nodiscard]] HeatFraction surface_heat_fraction(double coupling_fit, const ThermalModel& model,
                                                 double modulation_hz, double temperature_difference);

/// Persisted calibration state.
struct CalibrationBundle {
    int version = 1;
    GeophoneCal geophone;
    ThermalModel thermal;
    TiltCalibration tilt;
    double reference_nominal = 0.098;
};

[[nodiscard]] std::string bundle_to_json(const CalibrationBundle& bundle);
/// Throws IoError on malformed input or an unsupported version.
[[nodiscard]] CalibrationBundle bundle_from_json(const std::string& text);

} // namespace tcopt::calib
