#ifndef CONIRAD_QUADRATURE_HPP
#define CONIRAD_QUADRATURE_HPP

// Numerical substrate: 1D rules (regular and principal value), finite
// difference stencils, and interpolation on uniform axes.

#include "axis.hpp"
#include "core.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <sstream>
#include <vector>

namespace conirad {

enum class Rule { midpoint, simpson, gauss_legendre };

struct QuadratureSpec {
    Rule rule = Rule::gauss_legendre;
    int n = 256;
    bool adaptive = false;
    double rel_tol = 1e-10;

    void validate() const
    {
        if (n < 2) throw ValidationError("quadrature needs n >= 2");
        if (adaptive && !(rel_tol > 0.0)) throw ValidationError("adaptive quadrature needs rel_tol > 0");
    }

    static QuadratureSpec gauss(int n) { return {Rule::gauss_legendre, n, false, 1e-10}; }
    static QuadratureSpec simpson(int n) { return {Rule::simpson, n, false, 1e-10}; }
    static QuadratureSpec midpoint(int n) { return {Rule::midpoint, n, false, 1e-10}; }
};

struct GaussLegendre {
    std::vector<double> nodes;   // on [-1, 1], ascending
    std::vector<double> weights;
};

namespace detail {

inline GaussLegendre compute_gauss_legendre(int n)
{
    GaussLegendre gl;
    gl.nodes.resize(n);
    gl.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            // n == 1 never reaches here (n >= 2 enforced by callers)
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        gl.nodes[i] = -x;
        gl.nodes[n - 1 - i] = x;
        gl.weights[i] = w;
        gl.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) gl.nodes[n / 2] = 0.0;
    return gl;
}

} // namespace detail

/// Cached Gauss-Legendre rule with n nodes.
inline const GaussLegendre& gauss_legendre(int n)
{
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussLegendre>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussLegendre>(detail::compute_gauss_legendre(n));
    return *slot;
}

namespace detail {

template <class F>
double checked_eval(F& f, double t)
{
    const double v = f(t);
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os.precision(17);
        os << "non-finite integrand value at node t = " << t;
        throw NumericalError(os.str());
    }
    return v;
}

template <class F>
double apply_rule(F& f, double a, double b, Rule rule, int n)
{
    CompensatedSum sum;
    if (b == a) return 0.0;
    switch (rule) {
    case Rule::midpoint: {
        const double h = (b - a) / n;
        for (int i = 0; i < n; ++i) sum.add(checked_eval(f, a + (i + 0.5) * h));
        return sum.value() * h;
    }
    case Rule::simpson: {
        const int intervals = n - 1;
        const double h = (b - a) / intervals;
        if (intervals == 1) return 0.5 * h * (checked_eval(f, a) + checked_eval(f, b));
        // Composite Simpson on an even number of intervals, 3/8 rule on the last three otherwise.
        const int simpson_intervals = (intervals % 2 == 0) ? intervals : intervals - 3;
        for (int i = 0; i <= simpson_intervals; ++i) {
            const double w = (i == 0 || i == simpson_intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            if (simpson_intervals > 0) sum.add(w * h / 3.0 * checked_eval(f, a + i * h));
        }
        if (simpson_intervals != intervals) {
            const int s = simpson_intervals;
            const double c = 3.0 * h / 8.0;
            sum.add(c * checked_eval(f, a + s * h));
            sum.add(3.0 * c * checked_eval(f, a + (s + 1) * h));
            sum.add(3.0 * c * checked_eval(f, a + (s + 2) * h));
            sum.add(c * checked_eval(f, b));
        }
        return sum.value();
    }
    case Rule::gauss_legendre: {
        const auto& gl = gauss_legendre(n);
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (int i = 0; i < n; ++i) sum.add(gl.weights[i] * checked_eval(f, mid + half * gl.nodes[i]));
        return sum.value() * half;
    }
    }
    return 0.0;
}

template <class F>
double adaptive(F& f, double a, double b, const QuadratureSpec& spec, double whole, double scale, int depth)
{
    const double m = 0.5 * (a + b);
    const double left = apply_rule(f, a, m, spec.rule, spec.n);
    const double right = apply_rule(f, m, b, spec.rule, spec.n);
    const double refined = left + right;
    if (depth >= 40 || std::abs(refined - whole) <= spec.rel_tol * std::max(std::abs(refined), scale))
        return refined;
    return adaptive(f, a, m, spec, left, scale, depth + 1) + adaptive(f, m, b, spec, right, scale, depth + 1);
}

} // namespace detail

/// Integral of f over [a, b] with the rule named in `spec`.
template <class F>
double integrate_1d(F&& f, double a, double b, const QuadratureSpec& spec)
{
    spec.validate();
    if (a > b) throw ValidationError("integrate_1d requires a <= b");
    const double whole = detail::apply_rule(f, a, b, spec.rule, spec.n);
    if (!spec.adaptive) return whole;
    // scale floor keeps integrals that are exactly zero from recursing forever
    const double scale = std::abs(whole) * 1e-3 + 1e-300;
    return detail::adaptive(f, a, b, spec, whole, scale, 0);
}

/// Principal value of the integral of f(t) / (t - s) over [a, b] by
/// singularity subtraction.
template <class F>
double integrate_pv(F&& f, double a, double b, double s, const QuadratureSpec& spec)
{
    if (!(a < s && s < b)) throw ValidationError("integrate_pv requires a < s < b");
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    if (s - a < 1e-14 * scale || b - s < 1e-14 * scale)
        throw NumericalError("integrate_pv: singular point within 1e-14 of an endpoint; log term diverges");
    const double fs = f(s);
    if (!std::isfinite(fs)) throw NumericalError("integrate_pv: non-finite integrand at the singular point");
    // one-sided difference toward the longer side
    const double dir = (b - s) >= (s - a) ? 1.0 : -1.0;
    const double h = 1e-6 * std::max(1.0, std::abs(s)) * dir;
    const double dfs = (f(s + h) - fs) / h;
    const double tiny = 1e-12 * scale;
    auto g = [&](double t) {
        const double d = t - s;
        if (std::abs(d) <= tiny) return dfs;
        return (f(t) - fs) / d;
    };
    return integrate_1d(g, a, b, spec) + fs * std::log((b - s) / (s - a));
}

// ---------------------------------------------------------------------------
// Finite differences

/// Fornberg weights for the m-th derivative at x0 from samples at `x`.
inline std::vector<double> fd_weights(double x0, std::span<const double> x, int m)
{
    const int n = static_cast<int>(x.size());
    if (n <= m) throw ValidationError("finite difference stencil needs more points than the derivative order");
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0, c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][m];
    return w;
}

struct FDSpec {
    int order = 1;
    int accuracy = 2;
    double h = 1.0;

    int central_half_width() const { return (order + 1) / 2 - 1 + accuracy / 2; }
    int central_width() const { return 2 * central_half_width() + 1; }
    int boundary_width() const { return std::max(central_width(), order + accuracy); }

    void validate() const
    {
        if (order < 1) throw ValidationError("finite difference order must be >= 1");
        if (accuracy < 2 || accuracy % 2 != 0) throw ValidationError("finite difference accuracy must be even and >= 2");
        if (!(h > 0.0)) throw ValidationError("finite difference step must be positive");
    }
};

/// Central stencil weights on integer offsets -half..half, unscaled (h = 1).
inline std::vector<double> central_weights(int order, int accuracy)
{
    FDSpec spec{order, accuracy, 1.0};
    spec.validate();
    const int half = spec.central_half_width();
    std::vector<double> x;
    for (int i = -half; i <= half; ++i) x.push_back(i);
    return fd_weights(0.0, x, order);
}

/// Precomputed derivative operator for sequences of a fixed length: central
/// stencils in the interior, equally accurate one-sided stencils at the ends.
class DiffOperator {
public:
    DiffOperator(std::size_t length, const FDSpec& spec) : n_(length), spec_(spec)
    {
        spec.validate();
        const int width = spec.boundary_width();
        if (static_cast<int>(length) < width)
            throw ValidationError("sequence of length " + std::to_string(length) + " is shorter than the stencil width " +
                                  std::to_string(width));
        half_ = spec.central_half_width();
        const double scale = 1.0 / std::pow(spec.h, spec.order);
        central_ = central_weights(spec.order, spec.accuracy);
        for (auto& w : central_) w *= scale;
        const int nb = std::min<int>(half_, static_cast<int>(length));
        for (int i = 0; i < nb; ++i) {
            std::vector<double> x;
            for (int j = 0; j < width; ++j) x.push_back(j);
            auto w = fd_weights(i, x, spec.order);
            for (auto& v : w) v *= scale;
            left_.push_back(std::move(w));
            // right edge: nodes at n-1-j expressed as offsets -j from the last node
            std::vector<double> xr;
            for (int j = 0; j < width; ++j) xr.push_back(-j);
            auto wr = fd_weights(-i, xr, spec.order);
            for (auto& v : wr) v *= scale;
            right_.push_back(std::move(wr));
        }
    }

    std::size_t length() const { return n_; }

    /// out[i * out_stride] = derivative at i of in[j * in_stride].
    void apply(const double* in, std::ptrdiff_t in_stride, double* out, std::ptrdiff_t out_stride) const
    {
        const int n = static_cast<int>(n_);
        const int width = static_cast<int>(left_.empty() ? 0 : left_[0].size());
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            if (i < half_) {
                const auto& w = left_[i];
                for (int j = 0; j < width; ++j) acc += w[j] * in[j * in_stride];
            } else if (i >= n - half_) {
                const auto& w = right_[n - 1 - i];
                for (int j = 0; j < width; ++j) acc += w[j] * in[(n - 1 - j) * in_stride];
            } else {
                for (int j = -half_; j <= half_; ++j) acc += central_[j + half_] * in[(i + j) * in_stride];
            }
            out[i * out_stride] = acc;
        }
    }

    std::vector<double> operator()(std::span<const double> values) const
    {
        if (values.size() != n_) throw ValidationError("DiffOperator applied to a sequence of the wrong length");
        std::vector<double> out(n_);
        apply(values.data(), 1, out.data(), 1);
        return out;
    }

private:
    std::size_t n_;
    FDSpec spec_;
    int half_ = 0;
    std::vector<double> central_;
    std::vector<std::vector<double>> left_, right_;
};

inline std::vector<double> diff_samples(std::span<const double> values, const FDSpec& spec)
{
    return DiffOperator(values.size(), spec)(values);
}

// ---------------------------------------------------------------------------
// Interpolation

enum class InterpMethod { linear, cubic };

/// Behaviour outside the node hull of a non-periodic axis.
enum class Extension { error, zero, clamp };

namespace detail {

/// Lagrange weights (and t-derivatives) for nodes at offsets -1, 0, 1, 2.
inline void cubic_weights(double t, double w[4], double dw[4])
{
    w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
    w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
    w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
    if (dw) {
        dw[0] = -(3.0 * t * t - 6.0 * t + 2.0) / 6.0;
        dw[1] = (3.0 * t * t - 4.0 * t - 1.0) / 2.0;
        dw[2] = -(3.0 * t * t - 2.0 * t - 2.0) / 2.0;
        dw[3] = (3.0 * t * t - 1.0) / 6.0;
    }
}

inline std::size_t wrap_index(long i, std::size_t n)
{
    const long m = static_cast<long>(n);
    long r = i % m;
    if (r < 0) r += m;
    return static_cast<std::size_t>(r);
}

} // namespace detail

struct InterpResult {
    double value = 0.0;
    double derivative = 0.0; // with respect to x
};

/// Interpolated value (and x-derivative) of samples on `axis`.
inline InterpResult interp_grid_d(const Axis& axis, std::span<const double> values, double x, InterpMethod method,
                                  Extension ext = Extension::error)
{
    const std::size_t n = axis.count;
    if (n == 0 || values.empty()) throw ValidationError("interpolation on an empty grid");
    if (values.size() != n) throw ValidationError("interpolation: value count does not match axis");
    const double h = axis.step();
    double u = axis.fractional_index(x);
    if (!axis.periodic) {
        const double slack = 1e-12 * std::max(1.0, static_cast<double>(n));
        if (u < -slack || u > static_cast<double>(n - 1) + slack) {
            if (ext == Extension::zero) return {};
            if (ext == Extension::error) {
                std::ostringstream os;
                os << "interpolation point " << x << " outside the hull of axis '" << axis.name << "'";
                throw ValidationError(os.str());
            }
            u = std::clamp(u, 0.0, static_cast<double>(n - 1));
            if (n == 1) return {values[0], 0.0};
        }
        u = std::clamp(u, 0.0, static_cast<double>(n - 1));
        if (n == 1) return {values[0], 0.0};
    }
    long i = static_cast<long>(std::floor(u));
    if (method == InterpMethod::linear || n < 4) {
        if (!axis.periodic) i = std::clamp<long>(i, 0, static_cast<long>(n) - 2);
        const double t = u - static_cast<double>(i);
        const double a = values[detail::wrap_index(i, n)], b = values[detail::wrap_index(i + 1, n)];
        return {a + t * (b - a), (b - a) / h};
    }
    long start = i - 1;
    if (!axis.periodic) start = std::clamp<long>(start, 0, static_cast<long>(n) - 4);
    const double t = u - static_cast<double>(start + 1);
    double w[4], dw[4];
    detail::cubic_weights(t, w, dw);
    InterpResult r;
    for (int j = 0; j < 4; ++j) {
        const double v = values[detail::wrap_index(start + j, n)];
        r.value += w[j] * v;
        r.derivative += dw[j] * v;
    }
    r.derivative /= h;
    return r;
}

inline double interp_grid(const Axis& axis, std::span<const double> values, double x, InterpMethod method,
                          Extension ext = Extension::error)
{
    return interp_grid_d(axis, values, x, method, ext).value;
}

/// Principal value of the integral of g(t) / (t - s) over the hull of a
/// cell-centered axis, with g known at the nodes. Singularity subtraction
/// with a midpoint rule; g(s) is interpolated.
inline double pv_sampled(const Axis& axis, std::span<const double> g, double s, InterpMethod method = InterpMethod::cubic)
{
    const double a = axis.min, b = axis.max, h = axis.step();
    const std::size_t n = axis.count;
    if (!(s > a && s < b)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += g[i] / (axis.node(i) - s);
        return acc * h;
    }
    const double tol = 1e-14 * std::max({1.0, std::abs(a), std::abs(b)});
    if (s - a < tol || b - s < tol) throw NumericalError("pv_sampled: singular point on the axis boundary");
    const auto gs = interp_grid_d(axis, g, s, method, Extension::clamp);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = axis.node(i) - s;
        acc += std::abs(d) < 1e-12 * h ? gs.derivative : (g[i] - gs.value) / d;
    }
    return acc * h + gs.value * std::log((b - s) / (s - a));
}

} // namespace conirad

#endif // CONIRAD_QUADRATURE_HPP
