#include "tcopt/surface_hydro.hpp"

#include "tcopt/errors.hpp"
#include "tcopt/special.hpp"
#include "tcopt/units.hpp"

#include <cmath>
#include <sstream>

namespace tcopt::hydro {

namespace {

constexpr double kSmallAngleLimit = 0.1;

void check_radius(const SurfaceMode& mode, double r) {
    if (!(r >= 0.0) || r > mode.radius * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "radial position " << r << " m outside [0, " << mode.radius << "]";
        throw DomainError(os.str());
    }
}

double oscillation(const SurfaceMode& mode, const SurfaceState& state) {
    return std::sin(mode.angular_frequency * state.time + state.phase);
}

} // namespace

void FluidCell::validate() const {
    if (!(density > 0.0)) throw DomainError("fluid density must be positive");
    if (!(surface_tension >= 0.0)) throw DomainError("surface tension must be non-negative");
    if (!(gravity > 0.0)) throw DomainError("gravity must be positive");
    if (!(radius > 0.0)) throw DomainError("cell radius must be positive");
    if (!(depth > 0.0)) throw DomainError("liquid depth must be positive");
}

FluidCell helium3_cell() {
    return FluidCell{};
}

double SurfaceMode::frequency_hz() const {
    return units::rad_s_to_hz(angular_frequency);
}

double SurfaceMode::relative_response(double omega_exc) const {
    const double w0 = angular_frequency;
    const double gamma = damping_rate();
    const double detune = w0 * w0 - omega_exc * omega_exc;
    return gamma * w0 / std::sqrt(detune * detune + gamma * gamma * omega_exc * omega_exc);
}

double solve_mode_wavenumber(const FluidCell& cell, int mode_index) {
    cell.validate();
    if (mode_index < 1) throw DomainError("mode index must be >= 1");
    if (cell.depth <= cell.radius) {
        throw DomainError("liquid depth must exceed the radius for the deep-container dispersion");
    }
    // J0 - J2 starts at 1 for x = 0; zeros are spaced by about pi.
    const double limit = 4.0 * mode_index + 10.0;
    const auto root = special::nth_zero(special::bessel_j0_minus_j2, mode_index, 0.05, 0.05, limit,
                                        {.relative_tolerance = 1e-8});
    return root.x / cell.radius;
}

double dispersion(const FluidCell& cell, double wavenumber, bool meniscus) {
    cell.validate();
    if (!(wavenumber > 0.0)) throw DomainError("wavenumber must be positive");
    const double g = cell.gravity;
    const double rho = cell.density;
    const double sigma = cell.surface_tension;
    double w2 = g * wavenumber * (1.0 + sigma * wavenumber * wavenumber / (g * rho));
    if (meniscus) {
        const double factor = 1.0 - 2.0 * sigma * wavenumber / (g * rho * cell.radius);
        if (!(factor > 0.0)) {
            std::ostringstream os;
            os << "meniscus correction factor " << factor << " is not positive";
            throw DomainError(os.str());
        }
        w2 *= factor;
    }
    return std::sqrt(w2);
}

SurfaceMode solve_mode(const FluidCell& cell, int mode_index, double quality_factor, bool meniscus) {
    if (!(quality_factor > 0.0)) throw DomainError("quality factor must be positive");
    SurfaceMode mode;
    mode.mode_index = mode_index;
    mode.wavenumber = solve_mode_wavenumber(cell, mode_index);
    mode.angular_frequency = dispersion(cell, mode.wavenumber, meniscus);
    mode.quality_factor = quality_factor;
    mode.radius = cell.radius;
    return mode;
}

CylVector velocity_field(const SurfaceMode& mode, const SurfaceState& state, double r, double phi,
                         double z) {
    check_radius(mode, r);
    if (z > 0.0) throw DomainError("vertical coordinate must be <= 0 (inside the liquid)");
    const double k = mode.wavenumber;
    const double a = state.amplitude;
    const double decay = std::exp(k * z) * oscillation(mode, state);
    const double kr = k * r;
    // J1(kr)/r -> k/2 on the axis.
    const double j1_over_r = r > 0.0 ? special::bessel_j(1, kr) / r : 0.5 * k;
    CylVector u;
    u.r = -0.5 * a * k * special::bessel_j0_minus_j2(kr) * decay * std::sin(phi);
    u.phi = -a * j1_over_r * decay * std::cos(phi);
    u.z = -a * k * special::bessel_j(1, kr) * decay * std::sin(phi);
    return u;
}

double surface_height(const SurfaceMode& mode, const SurfaceState& state, double r, double phi) {
    check_radius(mode, r);
    return state.amplitude * special::bessel_j(1, mode.wavenumber * r) * oscillation(mode, state) *
           std::sin(phi);
}

AxisTilt axis_tilt(const SurfaceMode& mode, const SurfaceState& state) {
    AxisTilt tilt;
    tilt.max_angle = 0.5 * state.amplitude * mode.wavenumber;
    tilt.angle = tilt.max_angle * oscillation(mode, state);
    tilt.small_angle = tilt.max_angle < kSmallAngleLimit;
    return tilt;
}

double amplitude_for_tilt(const SurfaceMode& mode, double max_tilt) {
    return 2.0 * max_tilt / mode.wavenumber;
}

} // namespace tcopt::hydro
