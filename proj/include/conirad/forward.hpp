#ifndef CONIRAD_FORWARD_HPP
#define CONIRAD_FORWARD_HPP

// Forward transforms. These double as data simulators and as the brute-force
// oracles the inversion stages are checked against.
//
// Ray and cone integrals are evaluated component by component: each phantom
// component is integrated only over the chord (or generator window) where its
// support ball is hit. For compact phantoms this equals the integral truncated
// at vertex-to-support distance.

#include "geometry.hpp"
#include "grid.hpp"
#include "phantom.hpp"
#include "quadrature.hpp"

#include <concepts>
#include <functional>
#include <optional>
#include <utility>

namespace conirad {

using SphereFunction = std::function<double(const UnitVec3&)>;
using PlaneFunction = std::function<double(double, double)>;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Parameter range r >= 0 where origin + r * dir (dir unit) lies inside the ball.
inline std::optional<Interval> ray_chord(const Point3& origin, const Vec3& dir, const SupportBall& ball)
{
    const Vec3 d = ball.center - origin;
    const double b = dot(dir, d);
    const double disc = b * b - dot(d, d) + ball.radius * ball.radius;
    if (disc <= 0.0) return std::nullopt;
    const double s = std::sqrt(disc);
    const double lo = std::max(0.0, b - s), hi = b + s;
    if (hi <= lo) return std::nullopt;
    return Interval{lo, hi};
}

namespace detail {

inline double ray_component(const Phantom& f, std::size_t comp, const Point3& origin, const Vec3& dir, int k,
                            const QuadratureSpec& q)
{
    const auto chord = ray_chord(origin, dir, f.component_support(comp));
    if (!chord) return 0.0;
    auto integrand = [&](double r) {
        const double v = f.component(comp, origin + r * dir);
        return k == 0 ? v : v * std::pow(r, k);
    };
    return integrate_1d(integrand, chord->lo, chord->hi, q);
}

} // namespace detail

/// Integral of f(b(z) + r w) r^k over r >= 0.
inline double weighted_xray(const Phantom& f, double z, const UnitVec3& omega, int k, const QuadratureSpec& q)
{
    if (k < 0) throw ValidationError("weighted_xray requires k >= 0");
    double sum = 0.0;
    for (std::size_t c = 0; c < f.component_count(); ++c) sum += detail::ray_component(f, c, vertex(z), omega, k, q);
    return sum;
}

/// Same transform for a nonzero, not necessarily unit, direction (degree -(k+1) homogeneous).
inline double weighted_xray(const Phantom& f, double z, const Vec3& direction, int k, const QuadratureSpec& q)
{
    const double n = norm(direction);
    return weighted_xray(f, z, UnitVec3::normalized(direction), k, q) / std::pow(n, k + 1);
}

/// Window of generator angles alpha whose rays hit `ball`; nullopt if none,
/// an interval of length 2pi if all do.
inline std::optional<Interval> generator_window(const ConeParams& c, const SupportBall& ball)
{
    const Vec3 d = ball.center - c.apex();
    const double dist = norm(d);
    if (dist <= ball.radius) return Interval{0.0, kTwoPi};
    const Vec3 dh = d * (1.0 / dist);
    const double cos_max = std::sqrt(std::max(0.0, 1.0 - (ball.radius * ball.radius) / (dist * dist)));
    const double cb = std::cos(c.beta()), sb = std::sin(c.beta());
    const double a = std::cos(c.psi()) * (cb * dh.x + sb * dh.y);
    const double bu = std::sin(c.psi()) * (-sb * dh.x + cb * dh.y);
    const double bv = std::sin(c.psi()) * dh.z;
    const double b = std::hypot(bu, bv);
    if (b < 1e-15) {
        if (a >= cos_max) return Interval{0.0, kTwoPi};
        return std::nullopt;
    }
    const double x = (cos_max - a) / b;
    if (x >= 1.0) return std::nullopt;
    if (x <= -1.0) return Interval{0.0, kTwoPi};
    const double center = std::atan2(bv, bu), half = std::acos(x);
    return Interval{center - half, center + half};
}

/// Conical transform T_k f(z, beta, psi) = sin(psi) * int_0^{2pi} chi_k f(z, w(alpha)) d alpha.
inline double conical_transform(const Phantom& f, const ConeParams& c, const QuadratureSpec& q)
{
    const Point3 apex = c.apex();
    double total = 0.0;
    for (std::size_t comp = 0; comp < f.component_count(); ++comp) {
        const SupportBall ball = f.component_support(comp);
        const auto window = generator_window(c, ball);
        if (!window) continue;
        auto along = [&](double alpha) { return detail::ray_component(f, comp, apex, c.generator(alpha), c.k(), q); };
        if (window->hi - window->lo >= kTwoPi) {
            // periodic integrand over the full circle: trapezoid is spectrally accurate
            CompensatedSum s;
            const double h = kTwoPi / q.n;
            for (int i = 0; i < q.n; ++i) s.add(along((i + 0.5) * h));
            total += s.value() * h;
        } else {
            total += integrate_1d(along, window->lo, window->hi, q);
        }
    }
    return std::sin(c.psi()) * total;
}

enum class SliceNorm { mean, arc_density };

/// Point on the circle {w : e_phi . w = t} at frame angle alpha.
inline UnitVec3 slice_circle_point(double phi, double t, double alpha)
{
    const double rho = std::sqrt(std::max(0.0, 1.0 - t * t));
    const double c = std::cos(phi), s = std::sin(phi);
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    return UnitVec3::normalized({t * c - rho * ca * s, t * s + rho * ca * c, rho * sa});
}

/// Vertical slice transform. `mean` is the circle average; `arc_density` divides it
/// further by sqrt(1 - t^2). q.n equally spaced, reflection-symmetric nodes.
template <class G>
    requires std::invocable<G&, const UnitVec3&>
double vertical_slice(G&& g, double phi, double t, const QuadratureSpec& q, SliceNorm norm = SliceNorm::mean)
{
    if (std::abs(t) > 1.0) return 0.0;
    if (t == 1.0) return g(UnitVec3::normalized(horizontal(phi)));
    if (t == -1.0) return g(UnitVec3::normalized(horizontal(phi) * -1.0));
    CompensatedSum s;
    const double h = kTwoPi / q.n;
    for (int i = 0; i < q.n; ++i) s.add(g(slice_circle_point(phi, t, (i + 0.5) * h)));
    const double mean = s.value() / q.n;
    return norm == SliceNorm::mean ? mean : mean / std::sqrt(1.0 - t * t);
}

/// Bicubic sampler of a SphereGrid: periodic in phi, reflected through the poles.
class SphereSampler {
public:
    explicit SphereSampler(const SphereGrid& g) : grid_(g)
    {
        if (g.nphi() % 2 != 0) throw ValidationError("sphere sampling needs an even phi count for pole reflection");
        if (g.nphi() < 4 || g.neta() < 2) throw ValidationError("sphere grid too small to interpolate");
    }

    double operator()(const UnitVec3& w) const
    {
        const auto a = angles_from_unit(w);
        const Axis& pa = grid_.axis(0);
        const Axis& ea = grid_.axis(1);
        const double u = pa.fractional_index(a.phi), v = ea.fractional_index(a.eta);
        const long i0 = static_cast<long>(std::floor(u)) - 1, j0 = static_cast<long>(std::floor(v)) - 1;
        double wu[4], wv[4];
        detail::cubic_weights(u - static_cast<double>(i0 + 1), wu, nullptr);
        detail::cubic_weights(v - static_cast<double>(j0 + 1), wv, nullptr);
        const long np = static_cast<long>(grid_.nphi()), ne = static_cast<long>(grid_.neta());
        double acc = 0.0;
        for (int a_ = 0; a_ < 4; ++a_) {
            for (int b_ = 0; b_ < 4; ++b_) {
                long i = i0 + a_, j = j0 + b_;
                if (j < 0) {
                    j = -j - 1;
                    i += np / 2;
                } else if (j >= ne) {
                    j = 2 * ne - 1 - j;
                    i += np / 2;
                }
                acc += wu[a_] * wv[b_] * grid_.at(detail::wrap_index(i, grid_.nphi()), static_cast<std::size_t>(j));
            }
        }
        return acc;
    }

private:
    const SphereGrid& grid_;
};

inline double vertical_slice(const SphereGrid& g, double phi, double t, const QuadratureSpec& q,
                             SliceNorm norm = SliceNorm::mean)
{
    SphereSampler sampler(g);
    return vertical_slice(sampler, phi, t, q, norm);
}

/// Sum of the two ray integrals from b(z) in directions a(phi, eta) and a(phi, pi - eta).
inline double vline_transform(const Phantom& f, double z, double phi, double eta, const QuadratureSpec& q)
{
    if (!(eta > 0.0 && eta < kPi)) throw ValidationError("vline_transform requires eta in (0, pi)");
    return weighted_xray(f, z, unit_from_angles(phi, eta), 0, q) + weighted_xray(f, z, unit_from_angles(phi, kPi - eta), 0, q);
}

struct EvenOddParts {
    SphereFunction even;
    SphereFunction odd;
};

/// Split h into parts even and odd under w3 -> -w3.
inline EvenOddParts even_odd_parts(SphereFunction h)
{
    auto shared = std::make_shared<SphereFunction>(std::move(h));
    return {[shared](const UnitVec3& w) { return 0.5 * ((*shared)(w) + (*shared)(w.reflected())); },
            [shared](const UnitVec3& w) { return 0.5 * ((*shared)(w) - (*shared)(w.reflected())); }};
}

/// Line integral of fstar over {(u, v) : u cos(eta) + v sin(eta) = p}, arc
/// length t in [-half_length, half_length].
template <class F>
double radon2d(F&& fstar, double eta, double p, const QuadratureSpec& q, double half_length)
{
    const double c = std::cos(eta), s = std::sin(eta);
    auto along = [&](double t) { return fstar(p * c - t * s, p * s + t * c); };
    return integrate_1d(along, -half_length, half_length, q);
}

enum class Reflection { even, odd };

/// Radon transform of the reflected half-plane trace f*(u, v) = f(|u| e_phi + v e_3)
/// (even) or sign(u) f(|u| e_phi + v e_3) (odd), with chords clipped to each
/// component's in-plane support disc.
inline double radon2d_phantom(const Phantom& f, double phi, double eta, double p, const QuadratureSpec& q,
                              Reflection parity = Reflection::even)
{
    const double c = std::cos(eta), s = std::sin(eta);
    const Vec3 e = horizontal(phi);
    const double t_axis = std::abs(s) > 1e-300 ? p * c / s : (p * c >= 0 ? 1e300 : -1e300);
    double total = 0.0;
    for (std::size_t comp = 0; comp < f.component_count(); ++comp) {
        const SupportBall ball = f.component_support(comp);
        const double par = ball.center.x * e.x + ball.center.y * e.y;
        const double perp2 = ball.center.x * ball.center.x + ball.center.y * ball.center.y - par * par;
        const double r2 = ball.radius * ball.radius - perp2;
        if (r2 <= 0.0) continue;
        for (int side = 0; side < 2; ++side) {
            // side 0: u >= 0 (disc center +par); side 1: u <= 0 (mirror disc)
            const double cu = side == 0 ? par : -par, cv = ball.center.z;
            // closest approach parameter along the line to the disc center
            const double t0 = -cu * s + cv * c;
            const double du = p * c - t0 * s - cu, dv = p * s + t0 * c - cv;
            const double disc = r2 - (du * du + dv * dv);
            if (disc <= 0.0) continue;
            double lo = t0 - std::sqrt(disc), hi = t0 + std::sqrt(disc);
            // u(t) = p c - t s is decreasing in t for s > 0
            if (side == 0) hi = std::min(hi, t_axis);
            else lo = std::max(lo, t_axis);
            if (hi <= lo) continue;
            auto along = [&](double t) {
                const double u = std::abs(p * c - t * s), v = p * s + t * c;
                return f.component(comp, Point3{u * e.x, u * e.y, v});
            };
            const double sign = (side == 1 && parity == Reflection::odd) ? -1.0 : 1.0;
            total += sign * integrate_1d(along, lo, hi, q);
        }
    }
    return total;
}

/// Acquisition lattice for simulate_grid.
struct TransformGridSpec {
    Axis z = Axis::centered("z", 64, -8.0, 8.0);
    std::size_t beta_count = 96;
    std::size_t psi_count = 64;
    int k = 1;

    TransformGrid make() const { return TransformGrid(z, beta_count, psi_count, k); }
};

/// T_k samples at every node of the lattice. Deterministic; nodes are
/// independent so the fill is split over threads.
inline TransformGrid simulate_grid(const Phantom& f, const TransformGridSpec& spec, const QuadratureSpec& q,
                                   unsigned threads = 0)
{
    q.validate();
    TransformGrid grid = spec.make();
    const std::size_t rows = grid.nz() * grid.nbeta();
    parallel_for(
        rows,
        [&](std::size_t row) {
            const std::size_t iz = row / grid.nbeta(), ib = row % grid.nbeta();
            for (std::size_t ip = 0; ip < grid.npsi(); ++ip) {
                try {
                    const ConeParams cone(grid.z_axis().node(iz), grid.beta_axis().node(ib), grid.psi_axis().node(ip),
                                          spec.k);
                    grid.at(iz, ib, ip) = conical_transform(f, cone, q);
                } catch (const NumericalError& e) {
                    throw NumericalError(std::string(e.what()) + " (grid node z=" + std::to_string(iz) +
                                         ", beta=" + std::to_string(ib) + ", psi=" + std::to_string(ip) + ")");
                }
            }
        },
        threads);
    return grid;
}

} // namespace conirad

#endif // CONIRAD_FORWARD_HPP
