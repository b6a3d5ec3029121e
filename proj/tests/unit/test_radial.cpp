#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "tfdw/radial.hpp"

using namespace tfdw;

namespace {

RadialFunction gaussian(GridPtr g, double width = 1) {
    double const norm = std::pow(std::numbers::pi * width * width, -0.75);
    return RadialFunction::sample(g, [&](double r) { return norm * std::exp(-r * r / (2 * width * width)); });
}

} // namespace

TEST(RadialGrid, RejectsBadParameters) {
    EXPECT_THROW(make_log_grid(0, 40, 2000), configuration_error);
    EXPECT_THROW(make_log_grid(1, 0.5, 2000), configuration_error);
    EXPECT_THROW(make_log_grid(1e-4, 40, 8), configuration_error);
    EXPECT_THROW(make_grid(GridKind::linear, -1, 10, 100), configuration_error);
}

TEST(RadialGrid, NodesSpanTheInterval) {
    auto const g = default_grid();
    EXPECT_EQ(g->size(), 2000u);
    EXPECT_DOUBLE_EQ(g->nodes().front(), 1e-4);
    EXPECT_NEAR(g->nodes().back(), 40, 1e-12);
    EXPECT_EQ(g->mid_nodes().size(), g->size() - 1);
}

TEST(RadialQuadrature, GaussianMass) {
    for (double w : {0.5, 1.0, 3.0}) EXPECT_NEAR(mass(gaussian(default_grid(), w)), 1, 1e-6) << "width " << w;
}

TEST(RadialQuadrature, GaussianKinetic) {
    // int |grad u|^2 = 3 / (2 w^2)
    for (double w : {0.5, 1.0, 2.0}) EXPECT_NEAR(kinetic_density(gaussian(default_grid(), w)), 1.5 / (w * w), 1e-5);
}

TEST(RadialHartree, GaussianSelfEnergy) {
    auto const u = gaussian(default_grid());
    RadialFunction rho(u.grid_ptr());
    for (std::size_t i = 0; i < u.size(); ++i) rho[i] = u[i] * u[i];
    EXPECT_NEAR(hartree_radial(rho).energy, 0.39894228040143268, 4e-6);
}

TEST(RadialHartree, UniformBall) {
    auto const g = make_log_grid(1e-4, 40, 4000);
    auto const nodes = g->nodes();
    double const R = *std::lower_bound(nodes.begin(), nodes.end(), 2.0);
    double const rho0 = 3 / (4 * std::numbers::pi * R * R * R);
    auto const rho = RadialFunction::sample(g, [&](double r) { return r < R ? rho0 : r == R ? rho0 / 2 : 0.0; });
    EXPECT_NEAR(hartree_radial(rho).energy / (3 / (5 * R)), 1, 1e-3);
}

TEST(RadialHartree, NewtonPotentialOutsideIsCharge) {
    auto const u = gaussian(default_grid());
    std::vector<double> rho(u.size()), phi(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) rho[i] = u[i] * u[i];
    newton_potential(u.grid(), rho, phi);
    auto const r = u.grid().nodes();
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] <= 10) continue;
        EXPECT_NEAR(phi[i] * r[i], 1, 1e-6);
    }
}

TEST(RadialDilate, PreservesMassAndScalesKinetic) {
    auto const u = gaussian(default_grid());
    for (double ell : {0.5, 2.0}) {
        auto const v = dilate(u, ell);
        EXPECT_NEAR(mass(v), 1, 1e-6);
        EXPECT_NEAR(kinetic_density(v) / kinetic_density(u), ell * ell, 1e-4);
    }
}

TEST(RadialDilate, RejectsNonPositiveFactor) {
    auto const u = gaussian(default_grid());
    EXPECT_ANY_THROW(dilate(u, 0));
    EXPECT_ANY_THROW(dilate(u, -1));
}

TEST(RadialEvaluate, InterpolatesBetweenNodes) {
    auto const u = gaussian(default_grid());
    for (double r : {0.3, 1.0, 2.5}) EXPECT_NEAR(evaluate(u, r), std::pow(std::numbers::pi, -0.75) * std::exp(-r * r / 2), 1e-8);
    EXPECT_EQ(evaluate(u, 100), 0);
}

TEST(RadialFunction, SizeMismatchThrows) {
    EXPECT_THROW(RadialFunction(default_grid(), std::vector<double>(3)), configuration_error);
}
