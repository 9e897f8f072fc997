#include "tcopt/timecrystal_model.hpp"

#include "tcopt/errors.hpp"
#include "tcopt/units.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tcopt::crystal {

void DriftModel::validate() const {
    if (!(relaxation_time > 0.0)) throw DomainError("drift relaxation time must be positive");
    if (!(amplitude >= 0.0)) throw DomainError("drift amplitude must be non-negative");
}

double DriftModel::offset(double t) const {
    if (amplitude == 0.0) return 0.0;
    return -amplitude * std::exp(-t / relaxation_time);
}

Coupling Coupling::from_hz_per_deg2(double g) {
    return from_hz_per_rad2(units::per_deg2_to_per_rad2(g));
}

Coupling Coupling::from_hz_per_rad2(double g) {
    Coupling c;
    c.hz_per_rad2_ = g;
    return c;
}

double Coupling::hz_per_deg2() const {
    return units::per_rad2_to_per_deg2(hz_per_rad2_);
}

void TimeCrystalParams::validate() const {
    if (!std::isfinite(coupling.hz_per_rad2())) throw DomainError("coupling must be finite");
    if (!(std::abs(static_tilt) < 0.1)) throw DomainError("static tilt must satisfy |theta_0| < 0.1 rad");
    drift.validate();
}

double TimeCrystalParams::bare_frequency(double t) const {
    return base_frequency + drift.offset(t);
}

double frequency_shift(const TimeCrystalParams& p, double tilt) {
    const double d = tilt - p.static_tilt;
    return units::two_pi * p.coupling.hz_per_rad2() * d * d;
}

double instantaneous_frequency(const TimeCrystalParams& p, double tilt, double t) {
    return p.bare_frequency(t) + frequency_shift(p, tilt);
}

double FmComponents::evaluate(double phase) const {
    return dc + first * std::sin(phase) + second * std::cos(2.0 * phase);
}

FmComponents fm_decomposition(const TimeCrystalParams& p, double max_tilt) {
    if (!(max_tilt >= 0.0)) throw DomainError("tilt amplitude must be non-negative");
    const double g = p.coupling.hz_per_rad2();
    const double t0 = p.static_tilt;
    FmComponents c;
    c.dc = units::two_pi * g * (t0 * t0 + 0.5 * max_tilt * max_tilt);
    c.first = -2.0 * units::two_pi * g * max_tilt * t0;
    c.second = -units::pi * g * max_tilt * max_tilt;
    return c;
}

double HamiltonianParams::cavity_frequency(double tilt) const {
    return shifted_frequency + units::two_pi * (quadratic_coupling * tilt * tilt - linear_coupling * tilt);
}

HamiltonianParams hamiltonian_from_coupling(const TimeCrystalParams& p, double mech_frequency) {
    const double g = p.coupling.hz_per_rad2();
    HamiltonianParams h;
    h.quadratic_coupling = g;
    h.linear_coupling = 2.0 * g * p.static_tilt;
    h.shifted_frequency = p.base_frequency + units::two_pi * g * p.static_tilt * p.static_tilt;
    h.mech_frequency = mech_frequency;
    return h;
}

TimeCrystalParams coupling_from_hamiltonian(const HamiltonianParams& h) {
    if (h.quadratic_coupling == 0.0) {
        throw DomainError("quadratic coupling is zero; static tilt is not recoverable");
    }
    TimeCrystalParams p;
    p.coupling = Coupling::from_hz_per_rad2(h.quadratic_coupling);
    p.static_tilt = h.linear_coupling / (2.0 * h.quadratic_coupling);
    p.base_frequency =
        h.shifted_frequency - units::two_pi * h.quadratic_coupling * p.static_tilt * p.static_tilt;
    return p;
}

double Table::operator()(double at) const {
    if (x.empty()) throw DomainError("empty table");
    if (at <= x.front()) return y.front();
    if (at >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), at);
    const auto i = static_cast<std::size_t>(it - x.begin());
    const double w = (at - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + w * (y[i] - y[i - 1]);
}

double Table::min_value() const {
    if (y.empty()) throw DomainError("empty table");
    return *std::min_element(y.begin(), y.end());
}

void Table::validate(const char* name) const {
    if (x.empty() || x.size() != y.size()) {
        throw DomainError(std::string(name) + ": table needs matching, non-empty x and y");
    }
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (!(x[i] > x[i - 1])) throw DomainError(std::string(name) + ": x must be strictly increasing");
    }
}

void TrapConfig::validate() const {
    field_profile.validate("field profile");
    if (!(field_profile.min_value() > 0.0)) throw DomainError("field profile must be positive");
    if (!beta_profile.x.empty()) {
        beta_profile.validate("beta profile");
        for (double b : beta_profile.y) {
            if (b < 0.0 || b > units::pi) throw DomainError("beta_L must lie in [0, pi]");
        }
    }
}

double TrapConfig::beta(double r) const {
    return beta_profile.x.empty() ? beta_slope * r : beta_profile(r);
}

double axial_potential(const TrapConfig& cfg, double z) {
    const double h = cfg.field_profile(z);
    if (!(h > 0.0)) throw DomainError("magnetic field must be positive");
    return std::abs(cfg.gyromagnetic_ratio) * h;
}

double radial_potential(const TrapConfig& cfg, double r, double z) {
    const double larmor = axial_potential(cfg, z);
    const double s = std::sin(0.5 * cfg.beta(r));
    return 4.0 * cfg.leggett_frequency * cfg.leggett_frequency / (5.0 * larmor) * s * s;
}

double trap_potential(const TrapConfig& cfg, double r, double z) {
    return axial_potential(cfg, z) + radial_potential(cfg, r, z);
}

} // namespace tcopt::crystal
