#include "tcopt/errors.hpp"
#include "tcopt/timecrystal_model.hpp"
#include "tcopt/units.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace tcopt::crystal;
using tcopt::units::deg_to_rad;

namespace {

TimeCrystalParams params(double g_deg2, double theta0_deg) {
    TimeCrystalParams p;
    p.base_frequency = 2.0 * std::numbers::pi * 833e3;
    p.coupling = Coupling::from_hz_per_deg2(g_deg2);
    p.static_tilt = deg_to_rad(theta0_deg);
    return p;
}

} // namespace

TEST(TimeCrystal, CouplingUnitConversion) {
    const auto c = Coupling::from_hz_per_deg2(3.74);
    EXPECT_NEAR(c.hz_per_rad2(), 3.74 * std::pow(180.0 / std::numbers::pi, 2), 1e-9);
    EXPECT_NEAR(c.hz_per_deg2(), 3.74, 1e-12);
    EXPECT_NEAR(Coupling::from_hz_per_rad2(c.hz_per_rad2()).hz_per_deg2(), 3.74, 1e-12);
}

TEST(TimeCrystal, MinimumAtStaticTilt) {
    const auto p = params(3.74, 0.7);
    EXPECT_EQ(instantaneous_frequency(p, p.static_tilt, 0.0), p.base_frequency);
    EXPECT_EQ(frequency_shift(p, p.static_tilt), 0.0);
}

TEST(TimeCrystal, ShiftForConstantTilt) {
    const auto p = params(3.74, 0.0);
    const double theta = deg_to_rad(2.0);
    EXPECT_NEAR(frequency_shift(p, theta), 2.0 * std::numbers::pi * p.coupling.hz_per_rad2() * theta * theta,
                1e-12);
}

TEST(TimeCrystal, OneDegreeShiftAtMeasuredCoupling) {
    const auto p = params(3.74, 0.0);
    EXPECT_NEAR(frequency_shift(p, deg_to_rad(1.0)), 2.0 * std::numbers::pi * 3.74, 1e-12);
    const auto q = params(3.74, 0.3);
    EXPECT_NEAR(frequency_shift(q, deg_to_rad(1.3)), 2.0 * std::numbers::pi * 3.74, 1e-11);
}

TEST(TimeCrystal, DriftApproachesAsymptote) {
    auto p = params(0.0, 0.0);
    p.drift.amplitude = 2.0 * std::numbers::pi * 150.0;
    p.drift.relaxation_time = 10.0;
    EXPECT_NEAR(p.bare_frequency(0.0), p.base_frequency - p.drift.amplitude, 1e-6);
    double previous = p.bare_frequency(0.0);
    for (double t = 0.5; t < 100.0; t += 0.5) {
        const double w = p.bare_frequency(t);
        EXPECT_GE(w, previous);
        previous = w;
    }
    EXPECT_NEAR(p.bare_frequency(1000.0), p.base_frequency, 1e-6);
    EXPECT_NEAR(instantaneous_frequency(p, p.static_tilt, 3.0), p.bare_frequency(3.0), 0.0);
}

TEST(TimeCrystal, InvalidDriftRejected) {
    DriftModel d;
    d.relaxation_time = 0.0;
    EXPECT_THROW(d.validate(), tcopt::DomainError);
    d.relaxation_time = 1.0;
    d.amplitude = -1.0;
    EXPECT_THROW(d.validate(), tcopt::DomainError);
}

TEST(TimeCrystal, ParityOfQuadraticForm) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> angle(-0.09, 0.09);
    std::uniform_real_distribution<double> coupling(0.1, 60.0);
    for (int i = 0; i < 200; ++i) {
        TimeCrystalParams p = params(coupling(rng), 0.0);
        p.static_tilt = angle(rng);
        TimeCrystalParams mirrored = p;
        mirrored.static_tilt = -p.static_tilt;
        const double theta = angle(rng);
        EXPECT_DOUBLE_EQ(instantaneous_frequency(p, theta, 0.0), instantaneous_frequency(mirrored, -theta, 0.0));
    }
}

TEST(TimeCrystal, SymmetricDriveHasNoFirstHarmonic) {
    const auto fm = fm_decomposition(params(3.74, 0.0), deg_to_rad(3.0));
    EXPECT_EQ(fm.first, 0.0);
}

TEST(TimeCrystal, StaticTiltOnly) {
    const auto p = params(3.74, 0.5);
    const auto fm = fm_decomposition(p, 0.0);
    const double g = 2.0 * std::numbers::pi * p.coupling.hz_per_rad2();
    EXPECT_NEAR(fm.dc, g * p.static_tilt * p.static_tilt, 1e-12);
    EXPECT_EQ(fm.first, 0.0);
    EXPECT_EQ(fm.second, 0.0);
}

TEST(TimeCrystal, MeanShiftIsHalfOfModulation) {
    const auto p = params(3.74, 0.0);
    const double theta_max = deg_to_rad(2.5);
    const auto fm = fm_decomposition(p, theta_max);
    // Frequency swings between 0 and 2 |second|, i.e. peak-to-peak 2|second| = g theta_max^2.
    const double peak_to_peak = 2.0 * std::abs(fm.second);
    EXPECT_NEAR(fm.dc, 0.5 * peak_to_peak, 1e-12 * fm.dc);
    EXPECT_NEAR(fm.second, -std::numbers::pi * p.coupling.hz_per_rad2() * theta_max * theta_max, 1e-12);
}

TEST(TimeCrystal, HarmonicsReconstructInstantaneousShift) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> angle(0.0, 0.08);
    std::uniform_real_distribution<double> coupling(0.1, 60.0);
    for (int trial = 0; trial < 20; ++trial) {
        TimeCrystalParams p = params(coupling(rng), 0.0);
        p.static_tilt = angle(rng) - 0.04;
        const double theta_max = angle(rng);
        const auto fm = fm_decomposition(p, theta_max);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double phase = 2.0 * std::numbers::pi * i / 1000.0;
            const double direct = frequency_shift(p, theta_max * std::sin(phase));
            worst = std::max(worst, std::abs(direct - fm.evaluate(phase)));
        }
        EXPECT_LT(worst, 1e-12 * std::max(fm.dc, 1e-300) + 1e-15);
    }
}

TEST(TimeCrystal, HamiltonianPureQuadratic) {
    const auto p = params(3.74, 0.0);
    const auto h = hamiltonian_from_coupling(p, 2.0 * std::numbers::pi * 12.4);
    EXPECT_EQ(h.linear_coupling, 0.0);
    EXPECT_EQ(h.shifted_frequency, p.base_frequency);
    EXPECT_NEAR(h.quadratic_coupling, p.coupling.hz_per_rad2(), 1e-9);
}

TEST(TimeCrystal, HamiltonianLinearCouplingFromStaticTilt) {
    const auto p = params(3.74, 0.5);
    const auto h = hamiltonian_from_coupling(p, 2.0 * std::numbers::pi * 12.4);
    // g1 = 2 g theta_0 = 2 * 3.74 * 0.5 Hz/deg.
    EXPECT_NEAR(h.linear_coupling * tcopt::units::rad_per_deg, 3.74, 1e-12);
    EXPECT_NEAR(h.shifted_frequency - p.base_frequency,
                2.0 * std::numbers::pi * p.coupling.hz_per_rad2() * p.static_tilt * p.static_tilt, 1e-9);
}

TEST(TimeCrystal, HamiltonianReproducesFrequencyLaw) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> angle(-0.09, 0.09);
    std::uniform_real_distribution<double> coupling(0.1, 60.0);
    for (int i = 0; i < 100; ++i) {
        TimeCrystalParams p = params(coupling(rng), 0.0);
        p.static_tilt = angle(rng);
        const double theta = angle(rng);
        const auto h = hamiltonian_from_coupling(p, 80.0);
        const double expected = instantaneous_frequency(p, theta, 0.0);
        EXPECT_NEAR(h.cavity_frequency(theta), expected, 1e-15 * expected);
    }
}

TEST(TimeCrystal, HamiltonianMappingIsBijective) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> angle(-0.09, 0.09);
    std::uniform_real_distribution<double> coupling(0.1, 60.0);
    for (int i = 0; i < 100; ++i) {
        TimeCrystalParams p = params(coupling(rng), 0.0);
        p.static_tilt = angle(rng);
        const auto back = coupling_from_hamiltonian(hamiltonian_from_coupling(p, 80.0));
        EXPECT_NEAR(back.coupling.hz_per_rad2(), p.coupling.hz_per_rad2(), 1e-12 * p.coupling.hz_per_rad2());
        EXPECT_NEAR(back.static_tilt, p.static_tilt, 1e-12 * std::abs(p.static_tilt) + 1e-15);
        EXPECT_NEAR(back.base_frequency, p.base_frequency, 1e-12 * p.base_frequency);
    }
}

TEST(TimeCrystal, InverseRejectsZeroQuadraticCoupling) {
    HamiltonianParams h;
    h.shifted_frequency = 1.0;
    h.mech_frequency = 1.0;
    EXPECT_THROW((void)coupling_from_hamiltonian(h), tcopt::DomainError);
}

namespace {

TrapConfig trap(double beta_slope) {
    TrapConfig cfg;
    cfg.field_profile.x = {-0.01, 0.0, 0.01};
    cfg.field_profile.y = {0.0260, 0.0256, 0.0260};
    cfg.leggett_frequency = 2.0 * std::numbers::pi * 250e3;
    cfg.beta_slope = beta_slope;
    return cfg;
}

} // namespace

TEST(TimeCrystal, TrapVanishesWhereTextureIsFlat) {
    const auto cfg = trap(0.0);
    EXPECT_EQ(radial_potential(cfg, 1e-3, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(trap_potential(cfg, 1e-3, 0.0), axial_potential(cfg, 0.0));
}

TEST(TimeCrystal, TrapMaximumAtBetaPi) {
    auto cfg = trap(0.0);
    cfg.beta_profile.x = {0.0, 1.0};
    cfg.beta_profile.y = {std::numbers::pi, std::numbers::pi};
    const double omega_l = std::abs(cfg.gyromagnetic_ratio) * 0.0256;
    const double expected = 4.0 * cfg.leggett_frequency * cfg.leggett_frequency / (5.0 * omega_l);
    EXPECT_NEAR(radial_potential(cfg, 0.5, 0.0), expected, 1e-9 * expected);
}

TEST(TimeCrystal, TrapIsHarmonicNearAxis) {
    const double c = 10.0; // rad/m
    const auto cfg = trap(c);
    const double omega_l = std::abs(cfg.gyromagnetic_ratio) * 0.0256;
    const double omega_leg2 = cfg.leggett_frequency * cfg.leggett_frequency;
    for (double r : {1e-4, 3e-4, 1e-3, 3e-3}) {
        const double harmonic = omega_leg2 / (5.0 * omega_l) * c * c * r * r;
        const double exact = radial_potential(cfg, r, 0.0);
        // sin^2(x/2) = x^2/4 - x^4/48 + ..., so the relative deviation is (c r)^2 / 12.
        const double x = c * r;
        EXPECT_NEAR(exact / harmonic, 1.0 - x * x / 12.0, x * x * x * x / 300.0);
    }
}

TEST(TimeCrystal, TrapBoundedBelowByZeemanMinimum) {
    const auto cfg = trap(200.0);
    const double floor = std::abs(cfg.gyromagnetic_ratio) * 0.0256;
    for (double z = -0.02; z <= 0.02; z += 1e-3) {
        for (double r = 0.0; r <= 3e-3; r += 2e-4) {
            EXPECT_GE(trap_potential(cfg, r, z), floor);
        }
    }
}

TEST(TimeCrystal, TrapRejectsNonPositiveField) {
    auto cfg = trap(1.0);
    cfg.field_profile.y = {0.01, -0.01, 0.01};
    EXPECT_THROW(cfg.validate(), tcopt::DomainError);
}
