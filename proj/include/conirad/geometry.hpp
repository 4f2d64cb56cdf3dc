#ifndef CONIRAD_GEOMETRY_HPP
#define CONIRAD_GEOMETRY_HPP

// Coordinate conventions shared by every transform.
//
// Vertices lie on the z-axis at b(z) = (0, 0, z). A direction on the sphere is
// addressed by a horizontal angle phi and a polar angle eta measured from +z:
//   a(phi, eta) = (cos phi sin eta, sin phi sin eta, cos eta).
// The cone c(z, beta, psi) has vertex b(z), horizontal axis
// e_beta = (cos beta, sin beta, 0) and half-opening angle psi; its
// generators are parametrized by alpha over the fixed frame
//   u = (-sin beta, cos beta, 0),  v = (0, 0, 1).

#include "core.hpp"

#include <string>

namespace conirad {

class UnitVec3 {
public:
    /// Normalizes a nonzero vector.
    static UnitVec3 normalized(const Vec3& v)
    {
        const double n = norm(v);
        if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("cannot normalize a zero or non-finite vector");
        return UnitVec3(v.x / n, v.y / n, v.z / n);
    }

    /// Accepts components that are already unit length (to 1e-12).
    static UnitVec3 from_components(double x, double y, double z)
    {
        const double n2 = x * x + y * y + z * z;
        if (std::abs(n2 - 1.0) > 1e-12) throw ValidationError("UnitVec3 components are not unit length");
        return UnitVec3(x, y, z);
    }

    double x() const { return v_.x; }
    double y() const { return v_.y; }
    double z() const { return v_.z; }
    const Vec3& vec() const { return v_; }
    operator const Vec3&() const { return v_; }

    /// Mirror image through the horizontal plane (third coordinate negated).
    UnitVec3 reflected() const { return UnitVec3(v_.x, v_.y, -v_.z); }

private:
    UnitVec3(double x, double y, double z) : v_{x, y, z} {}
    Vec3 v_;
};

struct SphereAngles {
    double phi = 0.0;
    double eta = 0.0;
};

inline Point3 vertex(double z) { return {0.0, 0.0, z}; }

/// Horizontal unit vector e_phi.
inline Vec3 horizontal(double phi) { return {std::cos(phi), std::sin(phi), 0.0}; }

inline UnitVec3 unit_from_angles(double phi, double eta)
{
    const double se = std::sin(eta);
    return UnitVec3::from_components(std::cos(phi) * se, std::sin(phi) * se, std::cos(eta));
}

inline UnitVec3 unit_from_angles(const SphereAngles& a) { return unit_from_angles(a.phi, a.eta); }

inline SphereAngles angles_from_unit(const UnitVec3& w)
{
    const double rho = std::hypot(w.x(), w.y());
    return {wrap_angle(std::atan2(w.y(), w.x())), std::atan2(rho, w.z())};
}

class ConeParams {
public:
    /// beta is reduced mod 2pi; psi must lie strictly inside (0, pi); k >= 1.
    ConeParams(double z, double beta, double psi, int k) : z_(z), beta_(wrap_angle(beta)), psi_(psi), k_(k)
    {
        if (!std::isfinite(z)) throw ValidationError("cone vertex height must be finite");
        if (!(psi > 0.0 && psi < kPi)) throw ValidationError("cone half-opening angle must lie in (0, pi)");
        if (k < 1) throw ValidationError("cone weight index k must be >= 1");
    }

    double z() const { return z_; }
    double beta() const { return beta_; }
    double psi() const { return psi_; }
    int k() const { return k_; }

    Point3 apex() const { return vertex(z_); }
    Vec3 axis() const { return horizontal(beta_); }

    /// Unit direction of the generator at frame angle alpha.
    Vec3 generator(double alpha) const
    {
        const double cb = std::cos(beta_), sb = std::sin(beta_);
        const double cp = std::cos(psi_), sp = std::sin(psi_);
        const double ca = std::cos(alpha), sa = std::sin(alpha);
        return {cp * cb - sp * ca * sb, cp * sb + sp * ca * cb, sp * sa};
    }

private:
    double z_, beta_, psi_;
    int k_;
};

inline Point3 cone_point(const ConeParams& c, double r, double alpha)
{
    if (r < 0.0) throw ValidationError("cone_point requires r >= 0");
    return c.apex() + r * c.generator(alpha);
}

/// The same cone as a point set, described from the opposite axis direction.
inline ConeParams cone_symmetry_params(const ConeParams& c)
{
    return ConeParams(c.z(), c.beta() + kPi, kPi - c.psi(), c.k());
}

} // namespace conirad

#endif // CONIRAD_GEOMETRY_HPP
