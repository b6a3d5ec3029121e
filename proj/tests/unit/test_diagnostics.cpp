#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support/random_states.hpp"
#include "tfdw/diagnostics.hpp"

using namespace tfdw;

namespace {

RadialFunction gaussian(double m = 1, double width = 1, GridPtr g = default_grid()) {
    double const norm = std::sqrt(m) * std::pow(std::numbers::pi * width * width, -0.75);
    return RadialFunction::sample(g, [&](double r) { return norm * std::exp(-r * r / (2 * width * width)); });
}

// thin shell of mass m at radius rho, a few nodes wide
RadialFunction shell(double rho, double m = 1) {
    auto u = RadialFunction::sample(default_grid(), [&](double r) { return std::exp(-(r - rho) * (r - rho) / (2 * 0.1 * 0.1)); });
    u *= std::sqrt(m / mass(u));
    return u;
}

MinimizeResult atomic_minimizer(double m, double r_max = 40) {
    SolveConfig cfg;
    cfg.mass = m;
    cfg.grid.r_max = r_max;
    return minimize_mass_constrained(PotentialSpec::atomic(1), cfg, Constants{});
}

} // namespace

TEST(Cutoff, PartitionOfUnity) {
    for (double t = -0.5; t <= 1.5; t += 0.01) {
        double const f = CutoffProfile::f(t), g = CutoffProfile::g(t);
        EXPECT_NEAR(f * f + g * g, 1, 1e-15);
        EXPECT_NEAR(CutoffProfile::df(t) * CutoffProfile::df(t) + CutoffProfile::dg(t) * CutoffProfile::dg(t),
                    CutoffProfile::gradient_sum(t), 1e-14);
        EXPECT_LE(std::max(std::abs(CutoffProfile::df(t)), std::abs(CutoffProfile::dg(t))),
                  CutoffProfile::max_slope() + 1e-15);
    }
    EXPECT_NEAR(CutoffProfile::max_slope(), 1.9426506678894722, 1e-12);
    EXPECT_LE(CutoffProfile::max_slope(), cutoff_slope_bound);
}

TEST(Cutoff, DerivativesMatchFiniteDifferences) {
    for (double t : {0.1, 0.3, 0.5, 0.77, 0.95}) {
        double const e = 1e-6;
        EXPECT_NEAR((CutoffProfile::f(t + e) - CutoffProfile::f(t - e)) / (2 * e), CutoffProfile::df(t), 1e-8);
        EXPECT_NEAR((CutoffProfile::g(t + e) - CutoffProfile::g(t - e)) / (2 * e), CutoffProfile::dg(t), 1e-8);
    }
}

TEST(Cutoff, PairAndLayer) {
    auto const c = make_cutoff(2);
    EXPECT_EQ(c.chi(1.5), 1);
    EXPECT_EQ(c.eta(3.5), 1);
    EXPECT_TRUE(c.in_layer(2.5));
    EXPECT_FALSE(c.in_layer(2));
    EXPECT_FALSE(c.in_layer(3));
    EXPECT_THROW(make_cutoff(-1), domain_error);
    EXPECT_THROW(make_cutoff(std::nan("")), domain_error);
}

TEST(IMS, DefectIsSmallAgainstKinetic) {
    std::mt19937_64 rng(fixtures::default_seed);
    for (int i = 0; i < 5; ++i) {
        auto const u = fixtures::random_radial(default_grid(), rng, 2);
        for (double R : {1.0, 2.0, 4.0}) EXPECT_LT(std::abs(ims_defect(u, R)), 1e-3 * kinetic_density(u));
    }
}

TEST(IMS, RmsDefectShrinksUnderRefinement) {
    auto const coarse = gaussian(1, 1.5, make_log_grid(1e-4, 40, 1000));
    auto const fine = gaussian(1, 1.5, make_log_grid(1e-4, 40, 4000));
    for (double R : {1.0, 2.0}) {
        double const order = std::log2(ims_defect_rms(coarse, R) / ims_defect_rms(fine, R)) / 2;
        EXPECT_GT(order, 1.8) << "R=" << R;
    }
    EXPECT_THROW(ims_defect_rms(coarse, 1, 0), domain_error);
}

TEST(Rm, ThinShell) {
    // chi_R^2 = 1/2 at t = 1/2, so the half-mass radius of a shell at rho is rho - 1/2
    for (double rho : {3.0, 6.0, 12.0}) EXPECT_NEAR(radius_Rm(shell(rho, 2)), rho - 0.5, 5e-3);
}

TEST(Rm, CompactStateHasNegativeRadius) {
    EXPECT_LT(radius_Rm(gaussian(1, 0.05)), 0);
    RadialFunction z(default_grid());
    EXPECT_THROW(radius_Rm(z), domain_error);
}

TEST(Rm, HalfTheMassInside) {
    auto const u = gaussian(0.8, 2);
    EXPECT_NEAR(inner_mass(u, radius_Rm(u)), 0.4, 1e-7);
}

TEST(SplitPoint, LiesInInterval) {
    auto const r = atomic_minimizer(0.5);
    auto const sp = split_point(r.radial(), PotentialSpec::atomic(1));
    double const Rm = radius_Rm(r.radial());
    EXPECT_NEAR(sp.lo, Rm / std::sqrt(0.5), 1e-12);
    EXPECT_NEAR(sp.hi, 2 * Rm / std::sqrt(0.5), 1e-12);
    EXPECT_GE(sp.r, sp.lo);
    EXPECT_LE(sp.r, sp.hi);
    EXPECT_NEAR(sp.inner_mass, inner_mass(r.radial(), sp.r), 1e-15);
    EXPECT_NEAR(sp.sup_abs_xV, 1, 1e-12);
    // frozen values of the default solve
    EXPECT_NEAR(Rm, 2.1527, 1e-3);
    EXPECT_NEAR(sp.r, 6.0797, 1e-3);
    EXPECT_NEAR(sp.inner_mass, 0.48098, 1e-4);
}

TEST(SplitPoint, EmptyIntervalThrows) {
    // R_m / sqrt(m) = 59 lies beyond r_max - 1
    EXPECT_THROW(split_point(shell(30, 0.25), PotentialSpec::none()), domain_error);
    RadialFunction z(default_grid());
    EXPECT_THROW(split_point(z, PotentialSpec::none()), domain_error);
}

TEST(Lemmas, SignsAtAtomicMinimizer) {
    auto const r = atomic_minimizer(1);
    ASSERT_TRUE(r.converged);
    for (double R : {1.0, 2.0, 4.0, 8.0}) {
        EXPECT_GE(localization_gap(r.radial(), r.potential, R, r.constants), 0) << R;
        EXPECT_GE(annulus_residual(r.radial(), r.potential, R, r.constants), 0) << R;
    }
}

TEST(Lemmas, AnnulusNeedsUnitRadius) {
    auto const u = gaussian();
    EXPECT_THROW(annulus_residual(u, PotentialSpec::none(), 0.5, Constants{}), domain_error);
    EXPECT_NO_THROW(annulus_residual(u, PotentialSpec::none(), 1, Constants{}));
}

TEST(Concentration, RadialTable) {
    auto const u = gaussian(2, 1.5);
    std::vector<double> const radii{0.5, 1, 2, 4, 8};
    auto const c = concentration(u, radii);
    ASSERT_EQ(c.table.size(), radii.size());
    for (std::size_t i = 0; i < c.table.size(); ++i) {
        EXPECT_LE(c.table[i].M, 2 + 1e-9);
        if (i == 0) continue;
        EXPECT_GE(c.table[i].M, c.table[i - 1].M);
    }
    EXPECT_NEAR(c.table.back().M, 2, 1e-6);
    EXPECT_LT(c.table.front().center, 0.2); // within a few centre steps of the origin
    ASSERT_TRUE(c.threshold_radius.has_value());
    EXPECT_GT(c.table[0].M, 0); // small ball at the centre
    EXPECT_THROW(concentration(u, std::vector<double>{-1}), domain_error);
}

TEST(Concentration, ShellPrefersOffCentre) {
    auto const c = concentration(shell(10), std::vector<double>{1});
    EXPECT_NEAR(c.table[0].center, 10, 0.2);
    EXPECT_NEAR(c.table[0].M, 1.0 / 400, 2e-4); // R^2 / (4 rho^2)
    EXPECT_FALSE(c.threshold_radius.has_value());
}

TEST(Concentration, BoxAgreesWithRadial) {
    auto const box = make_box(16, 32);
    auto const u = gaussian();
    auto const f = Field3::from_radial(box, u);
    std::vector<double> const radii{1, 2};
    auto const a = concentration(u, radii), b = concentration(f, radii);
    for (std::size_t i = 0; i < radii.size(); ++i) EXPECT_NEAR(a.table[i].M, b.table[i].M, 0.05);
}

TEST(Escape, InputValidation) {
    std::vector<MinimizeResult> rs{atomic_minimizer(0.5, 20)};
    EXPECT_THROW(escape_indicator(rs), configuration_error);
    rs.push_back(atomic_minimizer(0.6, 40));
    EXPECT_THROW(escape_indicator(rs), configuration_error);
    rs.back() = atomic_minimizer(0.5, 20);
    EXPECT_THROW(escape_indicator(rs), configuration_error); // not strictly increasing
    rs.back() = atomic_minimizer(0.5, 40);
    auto const rep = escape_indicator(rs);
    EXPECT_FALSE(rep.escape_suspected);
    EXPECT_EQ(rep.flag(), "none");
    EXPECT_EQ(rep.rows.size(), 2u);
}

TEST(Diagnose, ReportFields) {
    auto const r = atomic_minimizer(0.5);
    std::vector<double> const radii{0.5, 1, 2};
    auto const rep = diagnose(r, radii, std::vector<double>{1, 2});
    EXPECT_NEAR(rep.mass, 0.5, 1e-10);
    EXPECT_NEAR(rep.inner_mass + rep.outer_mass, rep.mass, 1e-15);
    EXPECT_TRUE(rep.split_available);
    ASSERT_EQ(rep.lemmas.size(), 3u);
    EXPECT_TRUE(std::isnan(rep.lemmas[0].annulus));
    EXPECT_FALSE(std::isnan(rep.lemmas[1].annulus));
    EXPECT_GT(rep.potential_moment, 0);
    EXPECT_EQ(rep.concentration.table.size(), 2u);
}

TEST(Diagnose, BoxState) {
    auto const box = make_box(16, 32);
    auto const f = Field3::from_radial(box, gaussian());
    std::vector<double> const radii{1, 2};
    auto const rep = diagnose(f, PotentialSpec::molecular({{1, {0, 0, 0}}}), Constants{}, radii, radii);
    EXPECT_NEAR(rep.mass, 1, 1e-3);
    EXPECT_TRUE(std::isfinite(rep.R_m));
    EXPECT_EQ(rep.lemmas.size(), 2u);
}
