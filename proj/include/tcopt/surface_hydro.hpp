#pragma once

#include <string>

namespace tcopt::hydro {

/// Fluid properties and cylinder geometry. SI units throughout.
struct FluidCell {
    double density = 81.9;           ///< kg m^-3
    double surface_tension = 155e-6; ///< N m^-1
    double gravity = 9.81;           ///< m s^-2
    double radius = 2.925e-3;        ///< m
    double depth = 0.12;             ///< m, liquid depth below the free surface

    /// Throws DomainError when a field violates its physical range.
    void validate() const;

    [[nodiscard]] double depth_to_diameter() const { return depth / (2.0 * radius); }

    /// Infinite-depth formulas are trusted when the column is at least three diameters deep.
    [[nodiscard]] bool deep_container() const { return depth_to_diameter() >= 3.0; }
};

/// Liquid 3He at saturated vapour pressure in the 5.85 mm quartz tube.
[[nodiscard]] FluidCell helium3_cell();

struct SurfaceMode {
    double wavenumber = 0.0;        ///< m^-1
    double angular_frequency = 0.0; ///< rad s^-1
    double quality_factor = 65.0;
    int mode_index = 1;
    double radius = 0.0;            ///< container radius the mode was solved for, m

    [[nodiscard]] double frequency_hz() const;
    /// Energy damping rate gamma = omega / Q.
    [[nodiscard]] double damping_rate() const { return angular_frequency / quality_factor; }
    /// Steady-state tilt amplitude at drive frequency `omega_exc` relative to the on-resonance
    /// amplitude of a driven damped oscillator.
    [[nodiscard]] double relative_response(double omega_exc) const;
};

/// Oscillation state of the planar fundamental mode; the phase argument is omega*time + phase.
struct SurfaceState {
    double amplitude = 0.0; ///< m
    double phase = 0.0;     ///< rad
    double time = 0.0;      ///< s
};

/// Cylindrical components.
struct CylVector {
    double r = 0.0;
    double phi = 0.0;
    double z = 0.0;
};

/// mode_index-th positive root of J0(kR) - J2(kR) = 0, divided by R.
[[nodiscard]] double solve_mode_wavenumber(const FluidCell& cell, int mode_index);

/// Gravity-capillary dispersion for an infinitely deep cylinder, optionally with the
/// meniscus correction. Throws DomainError when the meniscus factor is not positive.
[[nodiscard]] double dispersion(const FluidCell& cell, double wavenumber, bool meniscus);

/// Wavenumber plus dispersion; `quality_factor` is an input (measured or configured).
[[nodiscard]] SurfaceMode solve_mode(const FluidCell& cell, int mode_index, double quality_factor,
                                     bool meniscus = true);

/// Velocity u = -grad(phi) of the planar mode potential phi = A J1(kr) e^{kz} sin(wt) sin(varphi).
/// Requires 0 <= r <= R and z <= 0.
[[nodiscard]] CylVector velocity_field(const SurfaceMode& mode, const SurfaceState& state, double r,
                                       double phi, double z);

/// h = A J1(kr) sin(wt) sin(varphi).
[[nodiscard]] double surface_height(const SurfaceMode& mode, const SurfaceState& state, double r,
                                    double phi);

struct AxisTilt {
    double angle = 0.0;     ///< rad, instantaneous tilt at the axis
    double max_angle = 0.0; ///< theta_max = A k / 2
    bool small_angle = true; ///< false when theta_max >= 0.1 rad
};

[[nodiscard]] AxisTilt axis_tilt(const SurfaceMode& mode, const SurfaceState& state);

/// Amplitude A giving a requested on-axis tilt amplitude (inverse of theta_max = A k / 2).
[[nodiscard]] double amplitude_for_tilt(const SurfaceMode& mode, double max_tilt);

} // namespace tcopt::hydro
