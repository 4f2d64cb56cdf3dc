#include "conirad/geometry.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace conirad;

TEST(UnitFromAngles, AxisCases)
{
    const auto a = unit_from_angles(0.0, kPi / 2);
    EXPECT_NEAR(a.x(), 1.0, 1e-15);
    EXPECT_NEAR(a.y(), 0.0, 1e-15);
    EXPECT_NEAR(a.z(), 0.0, 1e-15);
    const auto b = unit_from_angles(kPi / 2, kPi / 2);
    EXPECT_NEAR(b.x(), 0.0, 1e-15);
    EXPECT_NEAR(b.y(), 1.0, 1e-15);
    for (double phi : {0.0, 1.3, 4.0}) {
        const auto p = unit_from_angles(phi, 0.0);
        EXPECT_NEAR(p.x(), 0.0, 1e-15);
        EXPECT_NEAR(p.y(), 0.0, 1e-15);
        EXPECT_DOUBLE_EQ(p.z(), 1.0);
    }
}

TEST(UnitFromAngles, UnitNormAndInverse)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> uphi(0.0, kTwoPi), ueta(0.0, kPi);
    for (int i = 0; i < 1000; ++i) {
        const double phi = uphi(rng), eta = ueta(rng);
        const auto w = unit_from_angles(phi, eta);
        EXPECT_NEAR(norm(w.vec()), 1.0, 1e-12);
        const auto a = angles_from_unit(w);
        EXPECT_NEAR(a.eta, eta, 1e-9);
        if (eta > 1e-6 && eta < kPi - 1e-6) {
            EXPECT_NEAR(std::cos(a.phi - phi), 1.0, 1e-9);
        }
    }
}

TEST(UnitVec3, RejectsNonUnitComponents)
{
    EXPECT_THROW(UnitVec3::from_components(1.0, 1.0, 0.0), ValidationError);
    EXPECT_NO_THROW(UnitVec3::from_components(0.6, 0.8, 0.0));
    EXPECT_THROW(UnitVec3::normalized({0.0, 0.0, 0.0}), ValidationError);
}

TEST(ConeParams, ValidatesAndWraps)
{
    EXPECT_THROW(ConeParams(0.0, 0.0, 0.0, 1), ValidationError);
    EXPECT_THROW(ConeParams(0.0, 0.0, kPi, 1), ValidationError);
    EXPECT_THROW(ConeParams(0.0, 0.0, 1.0, 0), ValidationError);
    EXPECT_NO_THROW(ConeParams(0.0, 0.0, kPi / 2, 1));
    const ConeParams c(0.0, -kPi / 2, 1.0, 1);
    EXPECT_NEAR(c.beta(), 1.5 * kPi, 1e-15);
}

TEST(ConePoint, Examples)
{
    const ConeParams c(0.7, 1.1, 0.4, 1);
    const Point3 v = cone_point(c, 0.0, 2.0);
    EXPECT_EQ(v.x, 0.0);
    EXPECT_EQ(v.y, 0.0);
    EXPECT_EQ(v.z, 0.7);
    const Point3 up = cone_point(ConeParams(0.0, 0.0, kPi / 2, 1), 1.0, kPi / 2);
    EXPECT_NEAR(up.x, 0.0, 1e-15);
    EXPECT_NEAR(up.y, 0.0, 1e-15);
    EXPECT_NEAR(up.z, 1.0, 1e-15);
    EXPECT_THROW(cone_point(c, -1.0, 0.0), ValidationError);
}

TEST(ConePoint, GeneratorMakesAnglePsiWithAxis)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const ConeParams c(4 * u(rng) - 2, kTwoPi * u(rng), 0.01 + (kPi - 0.02) * u(rng), 1);
        const double r = 10 * u(rng), alpha = kTwoPi * u(rng);
        const Vec3 d = cone_point(c, r, alpha) - c.apex();
        EXPECT_NEAR(dot(c.axis(), d), r * std::cos(c.psi()), 1e-12 * std::max(1.0, r));
        if (r > 1e-3) {
            EXPECT_NEAR(dot(c.axis(), d * (1.0 / norm(d))), std::cos(c.psi()), 1e-12);
        }
    }
}

TEST(ConeSymmetry, ExampleAndInvolution)
{
    const auto s = cone_symmetry_params(ConeParams(0.0, 0.0, kPi / 3, 2));
    EXPECT_DOUBLE_EQ(s.z(), 0.0);
    EXPECT_NEAR(s.beta(), kPi, 1e-15);
    EXPECT_NEAR(s.psi(), 2 * kPi / 3, 1e-15);
    EXPECT_EQ(s.k(), 2);
    const ConeParams c(0.3, 5.9, 1.2, 1);
    const auto back = cone_symmetry_params(cone_symmetry_params(c));
    EXPECT_NEAR(back.z(), c.z(), 0.0);
    EXPECT_NEAR(std::cos(back.beta() - c.beta()), 1.0, 1e-15);
    EXPECT_NEAR(back.psi(), c.psi(), 1e-15);
}

TEST(ConeSymmetry, SamePointSet)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const ConeParams c(2 * u(rng) - 1, kTwoPi * u(rng), 0.05 + 3.0 * u(rng), 1);
        const auto s = cone_symmetry_params(c);
        const Point3 x = cone_point(c, 0.1 + 3 * u(rng), kTwoPi * u(rng));
        const Vec3 d = x - s.apex();
        EXPECT_NEAR(dot(s.axis(), d) / norm(d), std::cos(s.psi()), 1e-10);
        // and its explicit preimage on the symmetric cone
        const Vec3 dir = d * (1.0 / norm(d));
        const double ca = dot(dir, horizontal(s.beta() + kPi / 2)) / std::sin(s.psi());
        const double sa = dir.z / std::sin(s.psi());
        const Point3 y = cone_point(s, norm(d), std::atan2(sa, ca));
        EXPECT_NEAR(norm(y - x), 0.0, 1e-10);
    }
}
