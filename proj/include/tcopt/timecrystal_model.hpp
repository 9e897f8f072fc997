#pragma once

#include <vector>

namespace tcopt::crystal {

/// Magnon-decay drift of the bare precession frequency:
///   omega_0(t) = asymptotic - amplitude * exp(-t / relaxation_time).
/// The asymptotic frequency lives in TimeCrystalParams::base_frequency.
struct DriftModel {
    double amplitude = 0.0;       ///< rad s^-1, >= 0
    double relaxation_time = 1.0; ///< s, > 0

    void validate() const;
    /// Offset of omega_0(t) below its asymptote (<= 0).
    [[nodiscard]] double offset(double t) const;
};

/// Optomechanical coupling g. Entered and reported in Hz deg^-2, stored in Hz rad^-2.
class Coupling {
  public:
    constexpr Coupling() = default;

    [[nodiscard]] static Coupling from_hz_per_deg2(double g);
    [[nodiscard]] static Coupling from_hz_per_rad2(double g);

    [[nodiscard]] double hz_per_rad2() const { return hz_per_rad2_; }
    [[nodiscard]] double hz_per_deg2() const;

  private:
    double hz_per_rad2_ = 0.0;
};

struct TimeCrystalParams {
    double base_frequency = 0.0; ///< asymptotic bare frequency, rad s^-1
    Coupling coupling;
    double static_tilt = 0.0;    ///< theta_0, rad
    DriftModel drift;

    void validate() const;
    /// omega_0(t), including the drift.
    [[nodiscard]] double bare_frequency(double t) const;
};

/// omega_TC = omega_0(t) + 2 pi g (theta - theta_0)^2. Angles in rad, result in rad s^-1.
[[nodiscard]] double instantaneous_frequency(const TimeCrystalParams& p, double tilt, double t);

/// Frequency shift over omega_0(t) only, without evaluating the (large) base frequency.
[[nodiscard]] double frequency_shift(const TimeCrystalParams& p, double tilt);

/// Harmonic content of the shift for theta(t) = theta_max sin(w t):
///   dc + first * sin(w t) + second * cos(2 w t).
struct FmComponents {
    double dc = 0.0;     ///< rad s^-1
    double first = 0.0;  ///< coefficient of sin(w t)
    double second = 0.0; ///< coefficient of cos(2 w t)

    [[nodiscard]] double evaluate(double phase) const;
};

[[nodiscard]] FmComponents fm_decomposition(const TimeCrystalParams& p, double max_tilt);

/// Parameters of the linear+quadratic optomechanical Hamiltonian
///   H/hbar = w~ a+a + w_m b+b + 2 pi g1 a+a x + 2 pi g2 a+a x^2.
/// The Hamiltonian is written with the linear term entering as -2 pi g1 x so that
///   w~ + 2 pi g2 x^2 - 2 pi g1 x == omega_0 + 2 pi g (x - theta_0)^2
/// with x standing for the surface tilt in rad.
struct HamiltonianParams {
    double linear_coupling = 0.0;    ///< g1, Hz rad^-1
    double quadratic_coupling = 0.0; ///< g2, Hz rad^-2
    double shifted_frequency = 0.0;  ///< w~_TC, rad s^-1
    double mech_frequency = 0.0;     ///< w_m, rad s^-1

    /// Cavity frequency for a given displacement (tilt).
    [[nodiscard]] double cavity_frequency(double tilt) const;
};

/// g2 = g, g1 = 2 g theta_0, w~ = omega_0 + 2 pi g theta_0^2 (asymptotic omega_0).
[[nodiscard]] HamiltonianParams hamiltonian_from_coupling(const TimeCrystalParams& p,
                                                          double mech_frequency);

/// Inverse mapping. Requires g2 != 0.
[[nodiscard]] TimeCrystalParams coupling_from_hamiltonian(const HamiltonianParams& h);

/// Piecewise-linear table y(x), x strictly increasing. Extrapolates flat.
struct Table {
    std::vector<double> x;
    std::vector<double> y;

    [[nodiscard]] double operator()(double at) const;
    [[nodiscard]] double min_value() const;
    void validate(const char* name) const;
};

/// Magnon trap: Zeeman part along the axis plus the textural (spin-orbit) part across it.
struct TrapConfig {
    double gyromagnetic_ratio = -2.0378e8; ///< rad s^-1 T^-1 (3He)
    Table field_profile;                   ///< H(z) in T
    double leggett_frequency = 0.0;        ///< rad s^-1
    /// beta_L(r): tabulated, or beta_L = slope * r when the table is empty.
    Table beta_profile;
    double beta_slope = 0.0; ///< rad m^-1

    void validate() const;
    [[nodiscard]] double beta(double r) const;
};

/// Zeeman part |gamma| H(z) (rad s^-1).
[[nodiscard]] double axial_potential(const TrapConfig& cfg, double z);
/// Textural part 4 Omega_L^2 / (5 omega_L) sin^2(beta_L/2), omega_L = |gamma| H(z).
[[nodiscard]] double radial_potential(const TrapConfig& cfg, double r, double z);
/// U_tot / hbar in rad s^-1.
[[nodiscard]] double trap_potential(const TrapConfig& cfg, double r, double z);

} // namespace tcopt::crystal
