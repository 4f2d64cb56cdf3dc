#ifndef CONIRAD_PHANTOM_HPP
#define CONIRAD_PHANTOM_HPP

#include "core.hpp"

#include <vector>

namespace conirad {

/// amplitude * exp(1 - 1/(1 - |x-c|^2/R^2)) inside the ball, 0 outside.
struct Bump {
    Point3 center;
    double radius = 1.0;
    double amplitude = 1.0;

    double operator()(const Point3& x) const
    {
        const Vec3 d = x - center;
        const double q = dot(d, d) / (radius * radius);
        if (q >= 1.0) return 0.0;
        return amplitude * std::exp(1.0 - 1.0 / (1.0 - q));
    }
};

/// amplitude * exp(-|x-c|^2 / width^2). Not compactly supported.
struct Gaussian {
    Point3 center;
    double width = 1.0;
    double amplitude = 1.0;

    double operator()(const Point3& x) const
    {
        const Vec3 d = x - center;
        return amplitude * std::exp(-dot(d, d) / (width * width));
    }
};

/// Ball outside of which a single component is (effectively) zero.
struct SupportBall {
    Point3 center;
    double radius = 0.0;
};

/// Relative cutoff defining the effective support of Gaussian components.
inline constexpr double kGaussianCutoff = 1e-14;

class Phantom {
public:
    Phantom() = default;
    Phantom(std::vector<Bump> bumps, std::vector<Gaussian> gaussians = {})
        : bumps_(std::move(bumps)), gaussians_(std::move(gaussians))
    {
        for (const auto& b : bumps_)
            if (!(b.radius > 0.0)) throw ValidationError("bump radius must be positive");
        for (const auto& g : gaussians_)
            if (!(g.width > 0.0)) throw ValidationError("gaussian width must be positive");
    }

    const std::vector<Bump>& bumps() const { return bumps_; }
    const std::vector<Gaussian>& gaussians() const { return gaussians_; }
    bool empty() const { return bumps_.empty() && gaussians_.empty(); }
    bool compact() const { return gaussians_.empty(); }
    std::size_t component_count() const { return bumps_.size() + gaussians_.size(); }

    double operator()(const Point3& x) const
    {
        double v = 0.0;
        for (const auto& b : bumps_) v += b(x);
        for (const auto& g : gaussians_) v += g(x);
        return v;
    }

    /// Value of component i (bumps first, then gaussians).
    double component(std::size_t i, const Point3& x) const
    {
        return i < bumps_.size() ? bumps_[i](x) : gaussians_[i - bumps_.size()](x);
    }

    double max_amplitude() const
    {
        double m = 0.0;
        for (const auto& b : bumps_) m = std::max(m, std::abs(b.amplitude));
        for (const auto& g : gaussians_) m = std::max(m, std::abs(g.amplitude));
        return m;
    }

    SupportBall component_support(std::size_t i) const
    {
        if (i < bumps_.size()) return {bumps_[i].center, bumps_[i].radius};
        const auto& g = gaussians_[i - bumps_.size()];
        const double ratio = std::abs(g.amplitude) / (kGaussianCutoff * max_amplitude());
        const double r = ratio > 1.0 ? g.width * std::sqrt(std::log(ratio)) : 0.0;
        return {g.center, r};
    }

    /// Smallest R (about the origin) outside of which every component vanishes.
    double support_radius() const
    {
        double r = 0.0;
        for (std::size_t i = 0; i < component_count(); ++i) {
            const auto s = component_support(i);
            r = std::max(r, norm(s.center) + s.radius);
        }
        return r;
    }

    /// Axis-aligned box enclosing every component support.
    std::pair<Point3, Point3> support_box() const
    {
        if (empty()) return {{}, {}};
        Point3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
        for (std::size_t i = 0; i < component_count(); ++i) {
            const auto s = component_support(i);
            lo = {std::min(lo.x, s.center.x - s.radius), std::min(lo.y, s.center.y - s.radius),
                  std::min(lo.z, s.center.z - s.radius)};
            hi = {std::max(hi.x, s.center.x + s.radius), std::max(hi.y, s.center.y + s.radius),
                  std::max(hi.z, s.center.z + s.radius)};
        }
        return {lo, hi};
    }

private:
    std::vector<Bump> bumps_;
    std::vector<Gaussian> gaussians_;
};

inline double eval_phantom(const Phantom& p, const Point3& x) { return p(x); }
inline double support_radius(const Phantom& p) { return p.support_radius(); }

} // namespace conirad

#endif // CONIRAD_PHANTOM_HPP
