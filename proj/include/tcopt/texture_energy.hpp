#pragma once

#include <optional>
#include <string>
#include <vector>

// Free-energy densities of the superfluid texture, in CGS units throughout (G, cm, s, erg), which
// is how the magnitudes being compared are usually quoted.
namespace tcopt::texture {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    [[nodiscard]] double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    [[nodiscard]] Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    [[nodiscard]] double norm() const;
    [[nodiscard]] Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    [[nodiscard]] Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
};

/// Coefficients of the texture free energy. An empty value means "not known", which propagates
/// to the corresponding term instead of silently contributing zero.
struct TextureCoefficients {
    std::optional<double> a;           ///< erg cm^-3 G^-2
    std::optional<double> lambda_dv;   ///< erg cm^-5 s^2
    std::optional<double> lambda_hv;   ///< erg cm^-5 s^2 G^-2
    std::optional<double> lambda_hv1;  ///< erg cm^-2 G^-1
    std::optional<double> lambda_g1;   ///< erg cm^-1
    std::optional<double> lambda_g2;   ///< erg cm^-1
    std::optional<double> d_sh;        ///< erg cm^-2 G^-2
    std::optional<double> lambda_shv1; ///< erg cm^-3 s G^-1
    std::optional<double> lambda_sg;   ///< erg cm^-1
    std::optional<double> b2;          ///< erg cm^-2
    std::optional<double> b4;          ///< erg cm^-2

    /// Throws DomainError for negative coefficients.
    void validate() const;
};

struct TextureInputs {
    double field = 0.0;                   ///< |H|, G
    Vec3 field_direction{0.0, 0.0, 1.0};  ///< unit
    Vec3 superfluid_velocity;             ///< cm s^-1
    Vec3 normal_velocity;                 ///< cm s^-1
    Vec3 normal_vorticity;                ///< curl v_n, s^-1
    Vec3 n_hat{0.0, 0.0, 1.0};            ///< rotation axis of the order parameter
    Vec3 l_hat{0.0, 0.0, 1.0};            ///< orbital anisotropy axis
    Vec3 s_hat{0.0, 0.0, 1.0};            ///< surface normal into the fluid
    double healing_length = 1e-2;         ///< xi_H, cm
    double magnon_number = 0.0;
    double trap_volume = 1.0;             ///< cm^3, volume the magnon wave function occupies
    double leggett_frequency = 0.0;       ///< Omega_L, rad s^-1
    double larmor_frequency = 0.0;        ///< omega_L, rad s^-1
    TextureCoefficients coefficients;

    /// Unit vectors normalized to 1e-12, non-negative coefficients, positive length scales.
    void validate() const;
};

/// Energy per volume (bulk) or per area (surface), with the sign of the free-energy term.
using Density = std::optional<double>;

struct BulkDensities {
    Density dipole_field;          ///< F_DH / V, erg cm^-3
    Density dipole_velocity;       ///< F_DV / V
    Density field_velocity;        ///< F_HV / V
    Density field_velocity_first;  ///< F_HV1 / V
    Density gradient;              ///< F_G / V, estimated as (lambda_G1 + lambda_G2) / xi_H^2
};

struct SurfaceDensities {
    Density surface_field;          ///< F_SH / A, erg cm^-2
    Density surface_field_velocity; ///< F_SHV1 / A
    Density surface_gradient;       ///< F_SG / A, estimated as lambda_SG / xi_H
    Density surface_dipole;         ///< F_SD / A
};

[[nodiscard]] BulkDensities bulk_energy_densities(const TextureInputs& in);
[[nodiscard]] SurfaceDensities surface_energy_densities(const TextureInputs& in);

/// (4/5) hbar (Omega_L^2 / omega_L) sin^2(beta_L / 2) |Psi|^2, erg cm^-3, with |Psi|^2 in cm^-3.
[[nodiscard]] double spin_orbit_density(const TextureInputs& in, double beta_l, double psi_squared);

/// Spin-orbit density contributed by one magnon spread over the trap volume.
[[nodiscard]] double spin_orbit_density_per_magnon(const TextureInputs& in, double beta_l);

/// Conditions and coefficients reproducing the quoted texture-energy magnitudes at H = 200 G.
struct AuditConditions {
    TextureInputs inputs;
    double bulk_velocity = 0.1;    ///< cm s^-1, "realistic" superflow in the bulk
    double surface_velocity = 1.0; ///< cm s^-1, upper end of the flow next to the surface
    double beta_l = 1.0471975511965976; ///< rad
};

[[nodiscard]] AuditConditions default_audit_conditions();

struct AuditRow {
    std::string term;
    std::string group;  ///< "bulk", "surface" or "magnon"
    std::string unit;
    Density magnitude;  ///< |F| in its own energy-lowering orientation
    Density ratio_to_max; ///< magnitude over the largest magnitude in the same group
    std::optional<double> quoted; ///< the literature estimate for comparison, when there is one
};

struct AuditReport {
    std::vector<AuditRow> rows;
    double surface_dominance = 0.0;   ///< |F_SH| over the largest other surface term
    double per_magnon_density = 0.0;  ///< erg cm^-3
    /// Magnon number at which the spin-orbit density reaches the smallest retained bulk term
    /// (dipole-field, field-velocity, gradient).
    double crossover_magnon_number = 0.0;
};

/// Evaluates every term in the orientation that maximizes it (n || H for F_DH, l || v_s for
/// F_HV, l || s for F_SH, l perpendicular to both s and v_s for F_SHV1, ...).
[[nodiscard]] AuditReport energy_audit(const AuditConditions& conditions);

} // namespace tcopt::texture
