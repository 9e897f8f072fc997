#include "tcopt/errors.hpp"
#include "tcopt/texture_energy.hpp"
#include "tcopt/units.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <string>

using namespace tcopt;
using namespace tcopt::texture;

namespace {

const Vec3 kX{1.0, 0.0, 0.0};
const Vec3 kY{0.0, 1.0, 0.0};
const Vec3 kZ{0.0, 0.0, 1.0};

TextureInputs defaults() { return default_audit_conditions().inputs; }

const AuditRow& row(const AuditReport& report, const std::string& term) {
    for (const auto& r : report.rows) {
        if (r.term == term) return r;
    }
    throw std::runtime_error("no audit row " + term);
}

} // namespace

TEST(Texture, DipoleFieldVanishesForPerpendicularN) {
    auto in = defaults();
    in.field_direction = kZ;
    in.n_hat = kX;
    EXPECT_EQ(*bulk_energy_densities(in).dipole_field, 0.0);
    in.n_hat = kZ;
    EXPECT_LT(*bulk_energy_densities(in).dipole_field, 0.0);
}

TEST(Texture, DipoleFieldMagnitude) {
    auto in = defaults();
    in.n_hat = in.field_direction;
    EXPECT_NEAR(-*bulk_energy_densities(in).dipole_field, 3e-9, 1e-20);
}

TEST(Texture, FieldVelocityMagnitude) {
    auto in = defaults();
    for (double v : {0.1, 0.5, 2.0}) {
        in.superfluid_velocity = kX * v;
        in.l_hat = kX;
        EXPECT_NEAR(-*bulk_energy_densities(in).field_velocity, 8e-8 * v * v, 1e-12 * 8e-8 * v * v);
        in.l_hat = kY;
        EXPECT_EQ(*bulk_energy_densities(in).field_velocity, 0.0);
    }
}

TEST(Texture, CounterflowEntersThroughDifference) {
    auto in = defaults();
    in.l_hat = kX;
    in.superfluid_velocity = kX * 0.3;
    in.normal_velocity = kX * 0.3;
    EXPECT_EQ(*bulk_energy_densities(in).field_velocity, 0.0);
}

TEST(Texture, SurfaceFieldVanishesForInPlaneL) {
    auto in = defaults();
    in.s_hat = kZ;
    in.l_hat = kX;
    EXPECT_EQ(*surface_energy_densities(in).surface_field, 0.0);
    in.l_hat = kZ;
    EXPECT_NEAR(-*surface_energy_densities(in).surface_field, 9e-9, 1e-20);
}

TEST(Texture, SurfaceFieldVelocityOrientation) {
    auto in = defaults();
    in.s_hat = kZ;
    in.superfluid_velocity = kX;
    in.l_hat = kY; // parallel to s x v
    EXPECT_LT(*surface_energy_densities(in).surface_field_velocity, 0.0);
    in.l_hat = kX; // orthogonal to s x v
    EXPECT_EQ(*surface_energy_densities(in).surface_field_velocity, 0.0);
    in.l_hat = kZ;
    EXPECT_EQ(*surface_energy_densities(in).surface_field_velocity, 0.0);
}

TEST(Texture, SurfaceDipoleLowersEnergyForNormalN) {
    auto in = defaults();
    in.s_hat = kZ;
    in.n_hat = kZ;
    EXPECT_LT(*surface_energy_densities(in).surface_dipole, 0.0);
    in.n_hat = kX;
    EXPECT_EQ(*surface_energy_densities(in).surface_dipole, 0.0);
}

TEST(Texture, AlignedTermsAreNonPositive) {
    auto in = defaults();
    in.field_direction = kZ;
    in.n_hat = kZ;
    in.l_hat = kZ;
    in.s_hat = kZ;
    in.superfluid_velocity = kZ * 0.5;
    const auto b = bulk_energy_densities(in);
    EXPECT_LE(*b.dipole_field, 0.0);
    EXPECT_LE(*b.dipole_velocity, 0.0);
    EXPECT_LE(*b.field_velocity, 0.0);
    const auto s = surface_energy_densities(in);
    EXPECT_LE(*s.surface_field, 0.0);
}

TEST(Texture, FieldPowerLaws) {
    auto in = defaults();
    in.n_hat = in.field_direction;
    in.l_hat = kX;
    in.s_hat = kZ;
    in.superfluid_velocity = kX * 0.7;
    const auto b1 = bulk_energy_densities(in);
    const auto s1 = surface_energy_densities(in);
    in.l_hat = kY;
    const auto shv1 = *surface_energy_densities(in).surface_field_velocity;
    in.field *= 3.0;
    const auto b3 = bulk_energy_densities(in);
    EXPECT_NEAR(*b3.dipole_field / *b1.dipole_field, 9.0, 1e-12);
    EXPECT_NEAR(*surface_energy_densities(in).surface_field_velocity / shv1, 3.0, 1e-12);
    in.l_hat = kX;
    EXPECT_NEAR(*bulk_energy_densities(in).field_velocity / *b1.field_velocity, 9.0, 1e-12);
    EXPECT_EQ(*surface_energy_densities(in).surface_gradient, *s1.surface_gradient);
}

TEST(Texture, VelocityPowerLaws) {
    auto in = defaults();
    in.l_hat = kY;
    in.s_hat = kZ;
    in.superfluid_velocity = kX * 0.2;
    const double shv1 = *surface_energy_densities(in).surface_field_velocity;
    in.l_hat = kX;
    const double hv = *bulk_energy_densities(in).field_velocity;
    in.superfluid_velocity = kX * 0.8;
    EXPECT_NEAR(*bulk_energy_densities(in).field_velocity / hv, 16.0, 1e-12);
    in.l_hat = kY;
    EXPECT_NEAR(*surface_energy_densities(in).surface_field_velocity / shv1, 4.0, 1e-12);
}

TEST(Texture, MissingCoefficientIsUnavailable) {
    auto in = defaults();
    EXPECT_FALSE(bulk_energy_densities(in).field_velocity_first.has_value());
    in.coefficients.a.reset();
    EXPECT_FALSE(bulk_energy_densities(in).dipole_field.has_value());
    in.coefficients.lambda_g2.reset();
    EXPECT_FALSE(bulk_energy_densities(in).gradient.has_value());
    in.coefficients.b4.reset();
    EXPECT_FALSE(surface_energy_densities(in).surface_dipole.has_value());
    EXPECT_TRUE(surface_energy_densities(in).surface_field.has_value());
}

TEST(Texture, InvalidInputsRejected) {
    auto in = defaults();
    in.n_hat = {1.0, 1.0, 0.0};
    EXPECT_THROW((void)bulk_energy_densities(in), DomainError);
    in = defaults();
    in.coefficients.d_sh = -1.0;
    EXPECT_THROW((void)surface_energy_densities(in), DomainError);
    in = defaults();
    EXPECT_THROW((void)spin_orbit_density(in, 1.0, -1.0), DomainError);
}

TEST(Texture, SpinOrbitZeroWithoutTilt) {
    EXPECT_EQ(spin_orbit_density(defaults(), 0.0, 1e12), 0.0);
}

TEST(Texture, SpinOrbitFormula) {
    const auto in = defaults();
    const double expected = 0.8 * units::hbar_cgs * in.leggett_frequency * in.leggett_frequency /
                            in.larmor_frequency * 0.75 * 3.0; // sin^2(60 deg)
    EXPECT_NEAR(spin_orbit_density(in, 2.0 * std::numbers::pi / 3.0, 3.0), expected, 1e-12 * expected);
}

TEST(Texture, PerMagnonDensity) {
    const auto ac = default_audit_conditions();
    const double d = spin_orbit_density_per_magnon(ac.inputs, ac.beta_l);
    EXPECT_GT(d, 0.5e-22);
    EXPECT_LT(d, 2e-22);
}

TEST(Texture, AuditReproducesQuotedMagnitudes) {
    const auto report = energy_audit(default_audit_conditions());
    for (const std::string term : {"F_DH", "F_G", "F_SH", "F_SHV1", "F_SG", "F_SD", "F_HV/|v_s|^2", "F_SO/N_m"}) {
        const auto& r = row(report, term);
        ASSERT_TRUE(r.magnitude.has_value()) << term;
        ASSERT_TRUE(r.quoted.has_value()) << term;
        EXPECT_LT(std::abs(std::log(*r.magnitude / *r.quoted)), std::log(2.0)) << term;
    }
    EXPECT_FALSE(row(report, "F_HV1").magnitude.has_value());
}

TEST(Texture, AuditSurfaceFieldDominates) {
    const auto report = energy_audit(default_audit_conditions());
    // With the quoted magnitudes the next-largest surface term is F_SG (2e-10), giving 45.
    EXPECT_NEAR(report.surface_dominance, 9e-9 / 2e-10, 1e-6);
    EXPECT_DOUBLE_EQ(*row(report, "F_SH").ratio_to_max, 1.0);
}

TEST(Texture, AuditCrossoverFromSmallestBulkTerm) {
    const auto report = energy_audit(default_audit_conditions());
    const double smallest = std::min({*row(report, "F_DH").magnitude, *row(report, "F_HV").magnitude,
                                      *row(report, "F_G").magnitude});
    EXPECT_NEAR(report.crossover_magnon_number, smallest / report.per_magnon_density,
                1e-12 * report.crossover_magnon_number);
}
