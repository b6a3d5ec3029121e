#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "tfdw/cartesian.hpp"
#include "tfdw/functional.hpp"

using namespace tfdw;

namespace {

double gaussian(double r) { return std::pow(std::numbers::pi, -0.75) * std::exp(-r * r / 2); }

} // namespace

TEST(BoxGrid, Validation) {
    EXPECT_THROW(make_box(0, 32), configuration_error);
    EXPECT_THROW(make_box(10, 8), configuration_error);
    EXPECT_THROW(make_box(10, 128), configuration_error);
    EXPECT_THROW(make_box(10, 33), configuration_error);
    EXPECT_THROW(make_box(10, 22), configuration_error); // factor 11
    EXPECT_NO_THROW(make_box(10, 48));
}

TEST(BoxGrid, CentredCoordinates) {
    auto const b = make_box(16, 32);
    EXPECT_DOUBLE_EQ(b->coordinate(16), 0);
    EXPECT_DOUBLE_EQ(b->spacing(), 0.5);
    EXPECT_EQ(b->size(), 32u * 32u * 32u);
}

TEST(Field3, MassAndKineticOfGaussian) {
    auto const b = make_box(16, 48);
    auto const u = Field3::sample(b, [](double x, double y, double z) { return gaussian(std::sqrt(x * x + y * y + z * z)); });
    EXPECT_NEAR(mass(u), 1, 1e-8);
    EXPECT_NEAR(kinetic_density(u), 1.5, 1e-3);
}

TEST(Hartree3, MatchesRadialAt64) {
    auto const b = make_box(16, 64);
    auto const u = Field3::sample(b, [](double x, double y, double z) { return gaussian(std::sqrt(x * x + y * y + z * z)); });
    Field3 rho(b);
    for (std::size_t i = 0; i < u.size(); ++i) rho[i] = u[i] * u[i];
    EXPECT_NEAR(hartree_free_space(rho).energy / 0.39894228040143268, 1, 0.01);
}

TEST(Hartree3, ScalesLinearlyWithCharge) {
    auto const b = make_box(16, 32);
    auto rho = Field3::sample(b, [](double x, double y, double z) { return std::exp(-(x * x + y * y + z * z)); });
    double const e1 = hartree_free_space(rho).energy;
    rho *= 2;
    EXPECT_NEAR(hartree_free_space(rho).energy, 4 * e1, 1e-10 * e1);
}

TEST(Dilate3, PreservesMass) {
    auto const b = make_box(16, 48);
    auto const u = Field3::sample(b, [](double x, double y, double z) { return gaussian(std::sqrt(x * x + y * y + z * z)); });
    for (double ell : {0.75, 1.5}) EXPECT_NEAR(mass(dilate(u, ell)), 1, 2e-3);
}

TEST(Molecular, SmearedCoulombFarField) {
    EXPECT_NEAR(smeared_coulomb(2, 10, 0.2), -0.2, 1e-9);
    EXPECT_TRUE(std::isfinite(smeared_coulomb(1, 0, 0.2)));
}

TEST(Functional3, GaussianTermsCloseToRadial) {
    auto const b = make_box(16, 64);
    auto const u = Field3::sample(b, [](double x, double y, double z) { return gaussian(std::sqrt(x * x + y * y + z * z)); });
    auto const e = energy(u, PotentialSpec::none(), Constants{});
    EXPECT_NEAR(e.weizsacker, 1.5, 2e-3);
    EXPECT_NEAR(e.thomas_fermi, 0.14793706657475995, 1e-4);
    EXPECT_NEAR(e.dirac, 0.36645188392718994, 1e-4);
    EXPECT_NEAR(e.hartree, 0.39894228040143268, 4e-3);
}
