#include "tcopt/texture_energy.hpp"

#include "tcopt/errors.hpp"
#include "tcopt/units.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace tcopt::texture {

namespace {

void require_unit(const Vec3& v, const char* name) {
    if (std::abs(v.norm() - 1.0) > 1e-12) throw DomainError(std::string(name) + " must be a unit vector");
}

void require_non_negative(const std::optional<double>& c, const char* name) {
    if (c && !(*c >= 0.0)) throw DomainError(std::string("texture coefficient ") + name + " must be non-negative");
}

// Combines optional coefficients: empty if any input is empty.
template <typename F>
Density with(F&& f, std::initializer_list<std::optional<double>> coefficients) {
    for (const auto& c : coefficients) {
        if (!c) return std::nullopt;
    }
    return f();
}

std::optional<double> abs_of(const Density& d) {
    return d ? std::optional<double>(std::abs(*d)) : std::nullopt;
}

} // namespace

double Vec3::norm() const {
    return std::sqrt(dot(*this));
}

void TextureCoefficients::validate() const {
    require_non_negative(a, "a");
    require_non_negative(lambda_dv, "lambda_DV");
    require_non_negative(lambda_hv, "lambda_HV");
    require_non_negative(lambda_hv1, "lambda_HV1");
    require_non_negative(lambda_g1, "lambda_G1");
    require_non_negative(lambda_g2, "lambda_G2");
    require_non_negative(d_sh, "d_SH");
    require_non_negative(lambda_shv1, "lambda_SHV1");
    require_non_negative(lambda_sg, "lambda_SG");
    require_non_negative(b2, "b2");
    require_non_negative(b4, "b4");
}

void TextureInputs::validate() const {
    if (!(field >= 0.0)) throw DomainError("field magnitude must be non-negative");
    require_unit(field_direction, "field direction");
    require_unit(n_hat, "n");
    require_unit(l_hat, "l");
    require_unit(s_hat, "s");
    if (!(healing_length > 0.0)) throw DomainError("healing length must be positive");
    if (!(magnon_number >= 0.0)) throw DomainError("magnon number must be non-negative");
    if (!(trap_volume > 0.0)) throw DomainError("trap volume must be positive");
    if (!(leggett_frequency >= 0.0)) throw DomainError("Leggett frequency must be non-negative");
    if (!(larmor_frequency > 0.0)) throw DomainError("Larmor frequency must be positive");
    coefficients.validate();
}

BulkDensities bulk_energy_densities(const TextureInputs& in) {
    in.validate();
    const auto& c = in.coefficients;
    const double h = in.field;
    const Vec3 dv = in.superfluid_velocity - in.normal_velocity;
    const double n_h = in.n_hat.dot(in.field_direction);
    const double n_v = in.n_hat.dot(dv);
    const double l_v = in.l_hat.dot(dv);
    const double xi = in.healing_length;

    BulkDensities out;
    out.dipole_field = with([&] { return -*c.a * h * h * n_h * n_h; }, {c.a});
    out.dipole_velocity = with([&] { return -*c.lambda_dv * n_v * n_v; }, {c.lambda_dv});
    out.field_velocity = with([&] { return -*c.lambda_hv * h * h * l_v * l_v; }, {c.lambda_hv});
    out.field_velocity_first =
        with([&] { return -*c.lambda_hv1 * h * in.l_hat.dot(in.normal_vorticity); }, {c.lambda_hv1});
    out.gradient = with([&] { return (*c.lambda_g1 + *c.lambda_g2) / (xi * xi); }, {c.lambda_g1, c.lambda_g2});
    return out;
}

SurfaceDensities surface_energy_densities(const TextureInputs& in) {
    in.validate();
    const auto& c = in.coefficients;
    const double h = in.field;
    const Vec3 dv = in.superfluid_velocity - in.normal_velocity;
    const double l_s = in.l_hat.dot(in.s_hat);
    const double s_n = in.s_hat.dot(in.n_hat);

    SurfaceDensities out;
    out.surface_field = with([&] { return -*c.d_sh * h * h * l_s * l_s; }, {c.d_sh});
    out.surface_field_velocity =
        with([&] { return -*c.lambda_shv1 * h * in.l_hat.dot(in.s_hat.cross(dv)); }, {c.lambda_shv1});
    out.surface_gradient = with([&] { return *c.lambda_sg / in.healing_length; }, {c.lambda_sg});
    out.surface_dipole = with(
        [&] {
            const double s2 = s_n * s_n;
            return *c.b4 * s2 * s2 - *c.b2 * s2;
        },
        {c.b2, c.b4});
    return out;
}

double spin_orbit_density(const TextureInputs& in, double beta_l, double psi_squared) {
    if (!(psi_squared >= 0.0)) throw DomainError("|Psi|^2 must be non-negative");
    if (!(in.larmor_frequency > 0.0)) throw DomainError("Larmor frequency must be positive");
    const double s = std::sin(0.5 * beta_l);
    return 0.8 * units::hbar_cgs * in.leggett_frequency * in.leggett_frequency / in.larmor_frequency * s * s *
           psi_squared;
}

double spin_orbit_density_per_magnon(const TextureInputs& in, double beta_l) {
    if (!(in.trap_volume > 0.0)) throw DomainError("trap volume must be positive");
    return spin_orbit_density(in, beta_l, 1.0 / in.trap_volume);
}

AuditConditions default_audit_conditions() {
    // Each coefficient is the quoted magnitude at H = 200 G divided by the field and length
    // factors of its term.
    constexpr double h = 200.0;
    constexpr double xi = 1e-2;
    AuditConditions ac;
    auto& in = ac.inputs;
    in.field = h;
    in.healing_length = xi;
    in.trap_volume = 1.0;
    in.leggett_frequency = units::two_pi * 250e3;
    in.larmor_frequency = units::two_pi * 833e3;
    auto& c = in.coefficients;
    c.a = 3e-9 / (h * h);
    c.lambda_hv = 8e-8 / (h * h);
    c.lambda_dv = 0.01 * 8e-8; // "a couple of orders of magnitude" below the field-velocity term
    c.lambda_hv1 = std::nullopt; // never estimated; irrelevant without rotation
    c.lambda_g1 = 0.5 * 1e-9 * xi * xi;
    c.lambda_g2 = 0.5 * 1e-9 * xi * xi;
    c.d_sh = 9e-9 / (h * h);
    c.lambda_shv1 = 5e-13;
    c.lambda_sg = 2e-10 * xi;
    // b2 ~ 17 x and b4 ~ 5 x with 12 x = 1e-10 erg/cm^2.
    c.b2 = 17.0 * 1e-10 / 12.0;
    c.b4 = 5.0 * 1e-10 / 12.0;
    return ac;
}

AuditReport energy_audit(const AuditConditions& conditions) {
    const TextureInputs& base = conditions.inputs;
    base.validate();
    const Vec3 x{1.0, 0.0, 0.0};
    const Vec3 y{0.0, 1.0, 0.0};
    const Vec3 z{0.0, 0.0, 1.0};

    const auto bulk_with = [&](const std::function<void(TextureInputs&)>& setup) {
        TextureInputs in = base;
        in.field_direction = z;
        in.superfluid_velocity = x * conditions.bulk_velocity;
        in.normal_velocity = {};
        setup(in);
        return bulk_energy_densities(in);
    };
    const auto surface_with = [&](const std::function<void(TextureInputs&)>& setup) {
        TextureInputs in = base;
        in.s_hat = z;
        in.superfluid_velocity = x * conditions.surface_velocity;
        in.normal_velocity = {};
        setup(in);
        return surface_energy_densities(in);
    };

    const auto dh = bulk_with([&](TextureInputs& in) { in.n_hat = z; }).dipole_field;
    const auto dv = bulk_with([&](TextureInputs& in) { in.n_hat = x; }).dipole_velocity;
    const auto hv = bulk_with([&](TextureInputs& in) { in.l_hat = x; }).field_velocity;
    const auto hv1 = bulk_with([&](TextureInputs& in) { in.l_hat = z; }).field_velocity_first;
    const auto grad = bulk_with([](TextureInputs&) {}).gradient;
    const auto sh = surface_with([&](TextureInputs& in) { in.l_hat = z; }).surface_field;
    // s x v_s = z x x = y.
    const auto shv1 = surface_with([&](TextureInputs& in) { in.l_hat = y; }).surface_field_velocity;
    const auto sg = surface_with([](TextureInputs&) {}).surface_gradient;
    const auto sd = surface_with([&](TextureInputs& in) { in.n_hat = z; }).surface_dipole;

    AuditReport report;
    const auto add = [&](std::string term, std::string group, std::string unit, Density value,
                         std::optional<double> quoted) {
        report.rows.push_back({std::move(term), std::move(group), std::move(unit), abs_of(value), std::nullopt, quoted});
    };
    const std::string per_volume = "erg/cm^3";
    const std::string per_area = "erg/cm^2";
    add("F_DH", "bulk", per_volume, dh, 3e-9);
    add("F_DV", "bulk", per_volume, dv, std::nullopt);
    add("F_HV", "bulk", per_volume, hv, std::nullopt);
    add("F_HV1", "bulk", per_volume, hv1, std::nullopt);
    add("F_G", "bulk", per_volume, grad, 1e-9);
    add("F_SH", "surface", per_area, sh, 9e-9);
    add("F_SHV1", "surface", per_area, shv1, 1e-10 * conditions.surface_velocity);
    add("F_SG", "surface", per_area, sg, 2e-10);
    add("F_SD", "surface", per_area, sd, 1e-10);

    const double v2 = conditions.bulk_velocity * conditions.bulk_velocity;
    add("F_HV/|v_s|^2", "coefficient", "erg s^2/cm^5", hv ? Density(*hv / v2) : std::nullopt, 8e-8);

    report.per_magnon_density = spin_orbit_density_per_magnon(base, conditions.beta_l);
    add("F_SO/N_m", "magnon", per_volume, report.per_magnon_density, 1e-22);

    for (const std::string group : {"bulk", "surface"}) {
        double mx = 0.0;
        for (const auto& r : report.rows) {
            if (r.group == group && r.magnitude) mx = std::max(mx, *r.magnitude);
        }
        for (auto& r : report.rows) {
            if (r.group == group && r.magnitude && mx > 0.0) r.ratio_to_max = *r.magnitude / mx;
        }
    }

    double others = 0.0;
    for (const auto& d : {shv1, sg, sd}) {
        if (d) others = std::max(others, std::abs(*d));
    }
    report.surface_dominance = sh && others > 0.0 ? std::abs(*sh) / others : 0.0;

    double smallest_bulk = 0.0;
    for (const auto& d : {dh, hv, grad}) {
        if (!d) continue;
        const double m = std::abs(*d);
        if (m > 0.0 && (smallest_bulk == 0.0 || m < smallest_bulk)) smallest_bulk = m;
    }
    report.crossover_magnon_number =
        report.per_magnon_density > 0.0 ? smallest_bulk / report.per_magnon_density : 0.0;
    add("N_m crossover", "magnon", "1", report.crossover_magnon_number, 1e12);
    return report;
}

} // namespace tcopt::texture
