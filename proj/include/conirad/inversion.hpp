#ifndef CONIRAD_INVERSION_HPP
#define CONIRAD_INVERSION_HPP

// Reconstruction of f from sampled conical transform data.
//
// Stages, per vertical half-plane at azimuth phi:
//   1. slice values      G(z, beta, psi) = T_k(z, beta, psi) / (2 pi sin^sigma psi),
//                        extended to psi in (pi/2, pi) through the cone point-set
//                        symmetry and evenly reflected at psi = 0 and psi = pi;
//   2. vertical-slice inversion on S^2 (principal value in psi for every
//      beta) giving the even part of chi_k f(z, a(phi, gamma));
//   3. d^k/dz^k and the gamma integral giving one parity part of chi_0 f,
//      (chi_0 f(z, a(phi, eta)) -/+ chi_0 f(z, a(phi, pi - eta))) / 2,
//      the odd part for odd k and the even part for even k;
//   4. z = p / sin(eta) turns these ray sums or differences into 2D Radon data
//      of the half-plane trace reflected with the same parity,
//      f*(u, v) = f(|u| e_phi, v) or sign(u) f(|u| e_phi, v), which is
//      inverted by the filtered principal-value formula.
//
// The fractional relation behind stage 3 integrates d^k/dz^k chi_k f against
// sin^(k-1)(gamma - eta) over gamma in [eta, pi]. Applied to the even part of
// chi_k f, the mirrored half of the integral picks up (-1)^k, so for k = 1 it
// returns the odd part of chi_0 f, not the even (V-line) part; that one would
// need the odd part of chi_k f, which the slice data cannot see.
//
// The vertical slice transform of a sphere function jumps to zero at |t| = 1,
// so the t-derivative in the inversion carries point masses there. They are
// kept as an explicit equator term: a Poisson integral of g on the equator
// (ReconOptions::equator_terms).

#include "forward.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "quadrature.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

namespace conirad {

enum class ReconMode { compositional, fused };

struct ReconOptions {
    int sigma = 1;                 // exponent of sin(psi) in the slice normalization
    ReconMode mode = ReconMode::compositional;
    int fd_z_accuracy = 4;         // d^k/dz^k on the z-axis of the data grid
    int fd_psi_accuracy = 4;       // d/dpsi on the extended psi axis
    int fd_p_accuracy = 4;         // d/dp on the sinogram
    int gamma_nodes = 181;         // nodal gamma grid on [0, pi]
    int eta_nodes = 180;           // cell-centered sinogram angles on (0, pi)
    int p_nodes = 257;             // cell-centered sinogram offsets on [-P, P]
    double p_extent = 0.0;         // P; 0 derives it from the output volume
    double eta_margin_cells = 2.0; // excluded band near eta = 0 and eta = pi, in eta steps
    bool psi_extension = true;
    bool equator_terms = true;
    unsigned threads = 0;

    void validate() const
    {
        if (sigma != 1 && sigma != 2) throw ValidationError("sigma must be 1 or 2");
        for (int a : {fd_z_accuracy, fd_psi_accuracy, fd_p_accuracy})
            if (a < 2 || a % 2) throw ValidationError("finite difference accuracy must be even and >= 2");
        if (gamma_nodes < 5) throw ValidationError("gamma_nodes must be >= 5");
        if (eta_nodes < 4) throw ValidationError("eta_nodes must be >= 4");
        if (p_nodes < 8) throw ValidationError("p_nodes must be >= 8");
        if (p_extent < 0.0) throw ValidationError("p_extent must be >= 0");
        if (!(eta_margin_cells > 0.0)) throw ValidationError("eta margin must be positive");
    }

    double eta_margin() const { return eta_margin_cells * kPi / eta_nodes; }
};

inline const char* to_string(ReconMode m) { return m == ReconMode::fused ? "fused" : "compositional"; }

/// k-th z-derivative of the data, taken along the z-axis with one-sided
/// stencils at the ends.
inline TransformGrid differentiate_z(const TransformGrid& t, int order, int accuracy)
{
    TransformGrid out = t;
    const DiffOperator d(t.nz(), FDSpec{order, accuracy, t.z_axis().step()});
    const std::ptrdiff_t stride = static_cast<std::ptrdiff_t>(t.nbeta() * t.npsi());
    for (std::size_t ib = 0; ib < t.nbeta(); ++ib)
        for (std::size_t ip = 0; ip < t.npsi(); ++ip)
            d.apply(&t.values()[t.index(0, ib, ip)], stride, &out.values()[out.index(0, ib, ip)], stride);
    return out;
}

/// Slice values of the data on the extended psi axis, their psi-derivative,
/// and the equator values G(z, beta, 0), ready for the sphere inversion.
class SliceTable {
public:
    SliceTable(const TransformGrid& t, int sigma, int psi_accuracy = 4, bool psi_extension = true)
        : z_axis_(t.z_axis()), nz_(t.nz()), nb_(t.nbeta()), ne_(2 * t.npsi()), k_(t.k()), sigma_(sigma),
          extended_(psi_extension)
    {
        if (sigma != 1 && sigma != 2) throw ValidationError("sigma must be 1 or 2");
        if (nb_ % 2 != 0) throw ValidationError("beta count must be even so that beta + pi is a grid node");
        if (nb_ < 4) throw ValidationError("beta count must be >= 4");
        h_ = kPi / static_cast<double>(ne_);
        const std::size_t np = t.npsi();
        const FDSpec spec{1, psi_accuracy, h_};
        spec.validate();
        const int half = spec.central_half_width();
        if (static_cast<std::size_t>(half) > np)
            throw ValidationError("psi grid too small for the requested stencil");
        const auto w = central_weights(1, psi_accuracy);

        cos_.resize(ne_);
        sin_.resize(ne_);
        for (std::size_t j = 0; j < ne_; ++j) {
            const double psi = (static_cast<double>(j) + 0.5) * h_;
            cos_[j] = std::cos(psi);
            sin_[j] = std::sin(psi);
        }
        g_.assign(nz_ * nb_ * ne_, 0.0);
        d_.assign(nz_ * nb_ * (ne_ + 2 * kPad), 0.0);
        eq_.assign(nz_ * nb_, 0.0);
        for (std::size_t iz = 0; iz < nz_; ++iz) {
            for (std::size_t ib = 0; ib < nb_; ++ib) {
                double* g = &g_[(iz * nb_ + ib) * ne_];
                const std::size_t ob = (ib + nb_ / 2) % nb_;
                for (std::size_t j = 0; j < np; ++j) {
                    const double s = std::pow(std::sin(t.psi_axis().node(j)), sigma);
                    g[j] = t.at(iz, ib, j) / (kTwoPi * s);
                    // psi' = pi - psi_j on the opposite axis direction
                    g[ne_ - 1 - j] = t.at(iz, ob, j) / (kTwoPi * s);
                }
            }
        }
        // derivatives need the whole extended row, so a second pass
        for (std::size_t iz = 0; iz < nz_; ++iz) {
            for (std::size_t ib = 0; ib < nb_; ++ib) {
                const double* g = &g_[(iz * nb_ + ib) * ne_];
                double* d = &d_[(iz * nb_ + ib) * (ne_ + 2 * kPad)] + kPad;
                auto ge = [&](long j) { return g[reflect_even(j)]; };
                for (long j = 0; j < static_cast<long>(ne_); ++j) {
                    double acc = 0.0;
                    for (int o = -half; o <= half; ++o) acc += w[o + half] * ge(j + o);
                    d[j] = acc / h_;
                }
                // d/dpsi of an even function is odd about psi = 0 and psi = pi
                for (long j = 1; j <= kPad; ++j) {
                    d[-j] = -d[j - 1];
                    d[static_cast<long>(ne_) - 1 + j] = -d[static_cast<long>(ne_) - j];
                }
                // equator value G(beta, 0): 6-point even extrapolation
                eq_[iz * nb_ + ib] = (150.0 * g[0] - 25.0 * g[1] + 3.0 * g[2]) / 128.0;
            }
        }
        // trigonometric interpolation coefficients of the equator values
        const std::size_t nh = nb_ / 2;
        fa_.assign(nz_ * (nh + 1), 0.0);
        fb_.assign(nz_ * (nh + 1), 0.0);
        const double db = kTwoPi / static_cast<double>(nb_);
        for (std::size_t iz = 0; iz < nz_; ++iz) {
            for (std::size_t n = 0; n <= nh; ++n) {
                double a = 0.0, b = 0.0;
                for (std::size_t ib = 0; ib < nb_; ++ib) {
                    const double beta = (static_cast<double>(ib) + 0.5) * db;
                    a += eq_[iz * nb_ + ib] * std::cos(static_cast<double>(n) * beta);
                    b += eq_[iz * nb_ + ib] * std::sin(static_cast<double>(n) * beta);
                }
                const double scale = (n == 0 || n == nh) ? 1.0 / static_cast<double>(nb_) : 2.0 / static_cast<double>(nb_);
                fa_[iz * (nh + 1) + n] = a * scale;
                fb_[iz * (nh + 1) + n] = b * scale;
            }
        }
    }

    int k() const { return k_; }
    int sigma() const { return sigma_; }
    bool extended() const { return extended_; }
    const Axis& z_axis() const { return z_axis_; }
    std::size_t nz() const { return nz_; }
    std::size_t nbeta() const { return nb_; }
    std::size_t npsi_extended() const { return ne_; }
    double psi_step() const { return h_; }
    double beta_step() const { return kTwoPi / static_cast<double>(nb_); }
    double beta_node(std::size_t ib) const { return (static_cast<double>(ib) + 0.5) * beta_step(); }

    double g(std::size_t iz, std::size_t ib, std::size_t j) const { return g_[(iz * nb_ + ib) * ne_ + j]; }
    double dpsi(std::size_t iz, std::size_t ib, std::size_t j) const
    {
        return d_[(iz * nb_ + ib) * (ne_ + 2 * kPad) + kPad + j];
    }
    double equator(std::size_t iz, std::size_t ib) const { return eq_[iz * nb_ + ib]; }

    /// Slice value at an arbitrary (z, beta, psi); tricubic, periodic in beta,
    /// even reflection in psi at 0 and pi.
    double slice(double z, double beta, double psi) const
    {
        if (!(psi > 0.0 && psi < kPi)) throw ValidationError("slice lookup requires psi in (0, pi)");
        if (!extended_ && psi > (static_cast<double>(ne_ / 2) - 0.5) * h_)
            throw ValidationError("psi lies beyond the data hull and the symmetry extension is disabled");
        const double uz = z_axis_.fractional_index(z);
        if (uz < -1e-9 || uz > static_cast<double>(nz_ - 1) + 1e-9)
            throw ValidationError("slice lookup: z outside the data grid");
        const double ub = wrap_angle(beta) / beta_step() - 0.5;
        const double up = psi / h_ - 0.5;
        double wz[4], wb[4], wp[4];
        long z0 = std::clamp<long>(static_cast<long>(std::floor(uz)) - 1, 0, static_cast<long>(nz_) - 4);
        if (nz_ < 4) throw ValidationError("slice lookup needs at least 4 z nodes");
        const long b0 = static_cast<long>(std::floor(ub)) - 1;
        const long p0 = static_cast<long>(std::floor(up)) - 1;
        detail::cubic_weights(uz - static_cast<double>(z0 + 1), wz, nullptr);
        detail::cubic_weights(ub - static_cast<double>(b0 + 1), wb, nullptr);
        detail::cubic_weights(up - static_cast<double>(p0 + 1), wp, nullptr);
        double acc = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int c = 0; c < 4; ++c)
                    acc += wz[a] * wb[b] * wp[c] *
                           g(static_cast<std::size_t>(z0 + a), detail::wrap_index(b0 + b, nb_), reflect_even(p0 + c));
        return acc;
    }

    /// PV integral over psi in (0, pi) of dG/dpsi / (cos psi - s) at a z node
    /// and beta node, by subtracting dG/dpsi at the singular point.
    double psi_principal_value(std::size_t iz, std::size_t ib, double s) const
    {
        const double* d = &d_[(iz * nb_ + ib) * (ne_ + 2 * kPad)] + kPad;
        const double ps = std::acos(std::clamp(s, -1.0, 1.0));
        const double u = ps / h_ - 0.5;
        const long j1 = static_cast<long>(std::floor(u));
        double w[4], dw[4];
        detail::cubic_weights(u - static_cast<double>(j1), w, dw);
        double c = 0.0, dc = 0.0;
        for (int m = 0; m < 4; ++m) {
            c += w[m] * d[j1 - 1 + m];
            dc += dw[m] * d[j1 - 1 + m];
        }
        dc /= h_;
        const long n = static_cast<long>(ne_);
        const long lo = std::clamp<long>(j1, 0, n), hi = std::clamp<long>(j1 + 2, 0, n);
        double acc = 0.0;
        for (long j = 0; j < lo; ++j) acc += (d[j] - c) / (cos_[j] - s);
        for (long j = lo; j < hi; ++j) {
            const double den = cos_[j] - s;
            if (std::abs(den) < 1e-12) {
                const double sp = std::sin(ps);
                acc += sp > 1e-300 ? dc / (-sp) : 0.0;
            } else {
                acc += (d[j] - c) / den;
            }
        }
        for (long j = hi; j < n; ++j) acc += (d[j] - c) / (cos_[j] - s);
        return acc * h_;
    }

    /// (1 / 2pi) * int G(z, beta, 0) P_rho(beta - phi) d beta, with P_rho the
    /// Poisson kernel, evaluated on the trigonometric interpolant.
    double equator_poisson(std::size_t iz, double phi, double rho) const
    {
        const std::size_t nh = nb_ / 2;
        const double* a = &fa_[iz * (nh + 1)];
        const double* b = &fb_[iz * (nh + 1)];
        double acc = a[0];
        double rn = 1.0;
        for (std::size_t n = 1; n <= nh; ++n) {
            rn *= rho;
            if (rn < 1e-18) break;
            const double np = static_cast<double>(n) * phi;
            acc += rn * (a[n] * std::cos(np) + b[n] * std::sin(np));
        }
        return acc;
    }

private:
    static constexpr long kPad = 3;

    std::size_t reflect_even(long j) const
    {
        const long n = static_cast<long>(ne_);
        while (j < 0 || j >= n) {
            if (j < 0) j = -j - 1;
            if (j >= n) j = 2 * n - 1 - j;
        }
        return static_cast<std::size_t>(j);
    }

    Axis z_axis_;
    std::size_t nz_, nb_, ne_;
    int k_, sigma_;
    bool extended_;
    double h_ = 0.0;
    std::vector<double> cos_, sin_;
    std::vector<double> g_, d_, eq_, fa_, fb_;
};

/// Slice transform value recovered from data at (z, beta, cos psi).
inline double slice_from_data(const SliceTable& table, double z, double beta, double psi)
{
    return table.slice(z, beta, psi);
}

inline double slice_from_data(const TransformGrid& t, double z, double beta, double psi, int sigma)
{
    return SliceTable(t, sigma).slice(z, beta, psi);
}

/// Poisson radius for the equator term at polar angle eta.
inline double equator_radius(double eta)
{
    const double s = std::sin(eta);
    if (s < 1e-300) return 0.0;
    return std::clamp((1.0 - std::abs(std::cos(eta))) / s, 0.0, 1.0);
}

/// Per-azimuth cache of cos(beta - phi) for the beta nodes.
struct AzimuthCache {
    double phi = 0.0;
    std::vector<double> cos_diff;

    AzimuthCache(const SliceTable& t, double phi_) : phi(phi_), cos_diff(t.nbeta())
    {
        for (std::size_t ib = 0; ib < t.nbeta(); ++ib) cos_diff[ib] = std::cos(t.beta_node(ib) - phi);
    }
};

/// Principal-value part of the sphere inversion at a z node (no equator term).
inline double chik_even_pv_at_node(const SliceTable& t, std::size_t iz, const AzimuthCache& az, double eta)
{
    const double ce = std::abs(std::cos(eta)), se = std::sin(eta);
    if (ce == 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t ib = 0; ib < t.nbeta(); ++ib) acc += t.psi_principal_value(iz, ib, se * az.cos_diff[ib]);
    return ce / (4.0 * kPi) * acc * t.beta_step();
}

/// Even part of chi_k f(z_node, a(phi, eta)) from the slice table.
inline double chik_even_at_node(const SliceTable& t, std::size_t iz, const AzimuthCache& az, double eta,
                                bool equator_terms = true)
{
    double v = chik_even_pv_at_node(t, iz, az, eta);
    if (equator_terms) v += t.equator_poisson(iz, az.phi, equator_radius(eta));
    return v;
}

namespace detail {

inline double lagrange_z(const SliceTable& t, double z, const std::function<double(std::size_t)>& at_node)
{
    const double u = t.z_axis().fractional_index(z);
    if (u < -1e-9 || u > static_cast<double>(t.nz() - 1) + 1e-9) throw ValidationError("z outside the data grid");
    const double r = std::round(u);
    if (std::abs(u - r) < 1e-9) return at_node(static_cast<std::size_t>(r));
    if (t.nz() < 4) throw ValidationError("off-node z lookup needs at least 4 z nodes");
    const long z0 = std::clamp<long>(static_cast<long>(std::floor(u)) - 1, 0, static_cast<long>(t.nz()) - 4);
    double w[4];
    cubic_weights(u - static_cast<double>(z0 + 1), w, nullptr);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) acc += w[a] * at_node(static_cast<std::size_t>(z0 + a));
    return acc;
}

} // namespace detail

/// Even part of chi_k f(z, a(phi, eta)) from data; cubic in z between nodes.
inline double recover_chik_even(const SliceTable& t, double z, double phi, double eta, const ReconOptions& opts)
{
    if (!t.extended()) throw ValidationError("the sphere inversion needs the psi symmetry extension");
    if (!(eta > 0.0 && eta < kPi)) throw ValidationError("recover_chik_even requires eta in (0, pi)");
    const AzimuthCache az(t, phi);
    return detail::lagrange_z(t, z, [&](std::size_t iz) { return chik_even_at_node(t, iz, az, eta, opts.equator_terms); });
}

inline double recover_chik_even(const TransformGrid& data, double z, double phi, double eta, const ReconOptions& opts)
{
    const SliceTable t(data, opts.sigma, opts.fd_psi_accuracy, opts.psi_extension);
    return recover_chik_even(t, z, phi, eta, opts);
}

/// Integral of F over [eta, pi] against sin^(k-1)(gamma - eta), with F known
/// on the nodal gamma grid: 3-point Gauss per cell on the local cubic
/// interpolant.
inline double gamma_tail_integral(std::span<const double> f, double eta, int k)
{
    const long m = static_cast<long>(f.size()) - 1;
    const double h = kPi / static_cast<double>(m);
    static const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    long first = static_cast<long>(std::floor(eta / h));
    first = std::clamp<long>(first, 0, m - 1);
    double acc = 0.0;
    for (long c = first; c < m; ++c) {
        const double a = std::max(eta, static_cast<double>(c) * h), b = static_cast<double>(c + 1) * h;
        if (b <= a) continue;
        const long s0 = std::clamp<long>(c - 1, 0, m - 3);
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (int q = 0; q < 3; ++q) {
            const double g = mid + half * gx[q];
            double w[4];
            detail::cubic_weights(g / h - static_cast<double>(s0 + 1), w, nullptr);
            double v = 0.0;
            for (int j = 0; j < 4; ++j) v += w[j] * f[static_cast<std::size_t>(s0 + j)];
            const double weight = k == 1 ? 1.0 : std::pow(std::sin(g - eta), k - 1);
            acc += gw[q] * half * weight * v;
        }
    }
    return acc;
}

inline double factorial(int n)
{
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

namespace detail {

/// Degree-`degree` Taylor polynomial of nodal samples about the nearer end node,
/// evaluated at z (one-sided stencils for the derivatives).
inline double end_taylor(const Axis& axis, std::span<const double> v, double z, int degree)
{
    const std::size_t n = v.size();
    const bool hi = z > axis.node(n / 2);
    const std::size_t end = hi ? n - 1 : 0;
    const double z0 = axis.node(end);
    double acc = v[end], fact = 1.0;
    if (degree <= 0) return acc;
    const std::size_t width = std::min<std::size_t>(n, static_cast<std::size_t>(degree) + 3);
    std::vector<double> xs(width), vs(width);
    for (std::size_t i = 0; i < width; ++i) {
        const std::size_t j = hi ? n - 1 - i : i;
        xs[i] = axis.node(j);
        vs[i] = v[j];
    }
    for (int m = 1; m <= degree; ++m) {
        const auto w = fd_weights(z0, xs, m);
        double d = 0.0;
        for (std::size_t i = 0; i < width; ++i) d += w[i] * vs[i];
        fact *= m;
        acc += d * std::pow(z - z0, m) / fact;
    }
    return acc;
}

} // namespace detail

/// Parity of the chi_0 part that order-k data determine.
inline Reflection chi0_parity(int k) { return k % 2 ? Reflection::odd : Reflection::even; }

/// Sinogram factor: R f*(eta, p) = factor * chi0 part at z = p / sin eta.
inline double chi0_radon_factor(int k) { return chi0_parity(k) == Reflection::odd ? -2.0 : 2.0; }

/// chi0_parity(k) part of chi_0 f(z, a(phi, eta)): half the difference (odd)
/// or sum (even) of the rays at eta and pi - eta.
inline double recover_chi0_part(const SliceTable& t, double z, double phi, double eta, const ReconOptions& opts)
{
    if (!t.extended()) throw ValidationError("the sphere inversion needs the psi symmetry extension");
    const double margin = opts.eta_margin();
    if (!(eta > margin && eta < kPi - margin)) throw ValidationError("eta lies in the excluded band near the poles");
    const int k = t.k();
    const FDSpec fd{k, opts.fd_z_accuracy, t.z_axis().step()};
    const int half = fd.central_half_width();
    const double u = t.z_axis().fractional_index(z);
    const long need_lo = static_cast<long>(std::floor(u)) - 1 - half;
    const long need_hi = static_cast<long>(std::ceil(u)) + 1 + half;
    if (need_lo < 0 || need_hi > static_cast<long>(t.nz()) - 1) {
        const long pad = std::max(-need_lo, need_hi - static_cast<long>(t.nz()) + 1);
        throw ValidationError("the d^k/dz^k stencil exits the data grid at z = " + std::to_string(z) + "; pad the z axis by " +
                              std::to_string(pad) + " node(s)");
    }
    const AzimuthCache az(t, phi);
    const auto w = central_weights(k, opts.fd_z_accuracy);
    const double scale = 1.0 / std::pow(t.z_axis().step(), k);
    const int ng = opts.gamma_nodes;
    auto at_node = [&](std::size_t iz) {
        std::vector<double> d(ng, 0.0);
        if (opts.mode == ReconMode::compositional) {
            // differentiate recovered chi_k values across z nodes
            for (int o = -half; o <= half; ++o) {
                const std::size_t jz = static_cast<std::size_t>(static_cast<long>(iz) + o);
                for (int m = 0; m < ng; ++m) {
                    const double gamma = kPi * m / (ng - 1);
                    d[m] += w[o + half] * scale * chik_even_at_node(t, jz, az, gamma, opts.equator_terms);
                }
            }
        } else {
            throw ValidationError("fused mode needs a z-differentiated slice table");
        }
        return gamma_tail_integral(d, eta, k) / (factorial(k - 1) * std::pow(std::sin(eta), k));
    };
    return detail::lagrange_z(t, z, at_node);
}

inline double recover_chi0_part(const TransformGrid& data, double z, double phi, double eta, const ReconOptions& opts)
{
    if (opts.mode == ReconMode::compositional) {
        const SliceTable t(data, opts.sigma, opts.fd_psi_accuracy, opts.psi_extension);
        return recover_chi0_part(t, z, phi, eta, opts);
    }
    // fused: the z-derivative acts on the data before any angular integral
    const TransformGrid dk = differentiate_z(data, data.k(), opts.fd_z_accuracy);
    const SliceTable t(dk, opts.sigma, opts.fd_psi_accuracy, opts.psi_extension);
    const double margin = opts.eta_margin();
    if (!(eta > margin && eta < kPi - margin)) throw ValidationError("eta lies in the excluded band near the poles");
    const AzimuthCache az(t, phi);
    const int ng = opts.gamma_nodes;
    const int k = data.k();
    return detail::lagrange_z(t, z, [&](std::size_t iz) {
        std::vector<double> d(ng);
        for (int m = 0; m < ng; ++m) d[m] = chik_even_at_node(t, iz, az, kPi * m / (ng - 1), opts.equator_terms);
        return gamma_tail_integral(d, eta, k) / (factorial(k - 1) * std::pow(std::sin(eta), k));
    });
}

/// R f*(eta, p) = -2 chi0o(p / sin eta, phi, eta) for the odd reflection and
/// +2 chi0e(...) for the even one; zero (and counted) when p / sin eta leaves
/// z_range. The line u cos eta + v sin eta = p leaves b(z) along a(phi, pi - eta)
/// into u > 0 and along a(phi, eta) into u < 0.
inline double radon_from_chi0(const std::function<double(double, double, double)>& chi0_part, double phi, double eta,
                              double p, Reflection parity, std::optional<Interval> z_range = std::nullopt,
                              std::size_t* out_of_range = nullptr)
{
    const double s = std::sin(eta);
    if (!(s > 0.0)) throw ValidationError("radon_from_chi0 requires eta in (0, pi)");
    const double z = p / s;
    if (z_range && (z < z_range->lo || z > z_range->hi)) {
        if (out_of_range) ++*out_of_range;
        return 0.0;
    }
    return (parity == Reflection::odd ? -2.0 : 2.0) * chi0_part(z, phi, eta);
}

/// f*(-r, x3) = f*(r, x3).
template <class F>
auto even_reflection(F fstar_half)
{
    return [f = std::move(fstar_half)](double r, double x3) { return f(std::abs(r), x3); };
}

/// f*(-r, x3) = -f*(r, x3).
template <class F>
auto odd_reflection(F fstar_half)
{
    return [f = std::move(fstar_half)](double r, double x3) { return r < 0.0 ? -f(-r, x3) : f(r, x3); };
}

/// Filtered inversion of a sinogram over (eta, p):
///   f*(r, x3) = 1/(2 pi^2) int_0^pi PV int dR/dp (eta, p) / (r cos eta + x3 sin eta - p) dp d eta,
/// optionally with a higher-order p-derivative and a different prefactor (fused form).
class RadonInverter {
public:
    RadonInverter(const SinogramGrid& sino, int fd_accuracy, int derivative_order = 1,
                  double prefactor = 1.0 / (2.0 * kPi * kPi))
        : eta_axis_(sino.eta_axis()), p_axis_(sino.p_axis()), prefactor_(prefactor), deriv_(sino.size())
    {
        const DiffOperator d(sino.np(), FDSpec{derivative_order, fd_accuracy, p_axis_.step()});
        for (std::size_t i = 0; i < sino.neta(); ++i)
            d.apply(sino.values().data() + i * sino.np(), 1, deriv_.data() + i * sino.np(), 1);
        cos_.resize(sino.neta());
        sin_.resize(sino.neta());
        active_.resize(sino.neta());
        for (std::size_t i = 0; i < sino.neta(); ++i) {
            cos_[i] = std::cos(eta_axis_.node(i));
            sin_[i] = std::sin(eta_axis_.node(i));
            const auto row = std::span<const double>(deriv_).subspan(i * sino.np(), sino.np());
            active_[i] = std::any_of(row.begin(), row.end(), [](double v) { return v != 0.0; });
        }
    }

    double operator()(double r, double x3) const
    {
        const std::size_t np = p_axis_.count;
        double acc = 0.0;
        for (std::size_t i = 0; i < cos_.size(); ++i) {
            if (!active_[i]) continue;
            const double s = r * cos_[i] + x3 * sin_[i];
            const auto row = std::span<const double>(deriv_).subspan(i * np, np);
            acc -= pv_sampled(p_axis_, row, s);
        }
        return prefactor_ * acc * eta_axis_.step();
    }

    std::span<const double> derivative() const { return deriv_; }

private:
    Axis eta_axis_, p_axis_;
    double prefactor_;
    std::vector<double> deriv_;
    std::vector<double> cos_, sin_;
    std::vector<char> active_;
};

inline double invert_radon_halfplane(const SinogramGrid& sino, double r, double x3, const ReconOptions& opts)
{
    return RadonInverter(sino, opts.fd_p_accuracy)(r, x3);
}

struct HalfPlaneStats {
    std::size_t samples = 0;
    std::size_t out_of_range = 0;   // sinogram samples whose z = p / sin(eta) left the data
    std::size_t excluded_rows = 0;  // eta rows inside the polar exclusion band
};

/// Sinogram of one half-plane built from the data.
///
/// compositional: -/+2 * chi0 part at p / sin eta, d^k/dz^k taken on z nodes.
/// fused:         -/+2 * Q(p / sin eta, eta) with Q the gamma integral of the
///                undifferentiated chi_k values; all k + 1 derivatives are
///                then taken in p (the closed-form filtered formula).
inline SinogramGrid halfplane_sinogram(const SliceTable& t, double phi, const ReconOptions& opts, double p_extent,
                                       HalfPlaneStats* stats = nullptr)
{
    const int k = t.k();
    const std::size_t nz = t.nz();
    const int ng = opts.gamma_nodes;
    const AzimuthCache az(t, phi);

    // chi_k even part on (z node, gamma node)
    std::vector<double> x(nz * ng);
    for (std::size_t iz = 0; iz < nz; ++iz)
        for (int m = 0; m < ng; ++m)
            x[iz * ng + m] = chik_even_at_node(t, iz, az, kPi * m / (ng - 1), opts.equator_terms);

    std::vector<double> y(nz * ng);
    if (opts.mode == ReconMode::compositional) {
        const DiffOperator dz(nz, FDSpec{k, opts.fd_z_accuracy, t.z_axis().step()});
        for (int m = 0; m < ng; ++m) dz.apply(x.data() + m, ng, y.data() + m, ng);
    } else {
        y = x;
    }

    SinogramGrid sino(static_cast<std::size_t>(opts.eta_nodes), static_cast<std::size_t>(opts.p_nodes), p_extent);
    const double margin = opts.eta_margin();
    const double zlo = t.z_axis().first_node(), zhi = t.z_axis().last_node();
    std::vector<double> chi0(nz);
    const double kfact = factorial(k - 1);
    const double factor = chi0_radon_factor(k);
    HalfPlaneStats local;
    for (std::size_t i = 0; i < sino.neta(); ++i) {
        const double eta = sino.eta_axis().node(i);
        local.samples += sino.np();
        if (!(eta > margin && eta < kPi - margin)) {
            ++local.excluded_rows;
            continue;
        }
        const double se = std::sin(eta);
        const double norm = opts.mode == ReconMode::compositional ? kfact * std::pow(se, k) : kfact;
        for (std::size_t iz = 0; iz < nz; ++iz)
            chi0[iz] = gamma_tail_integral(std::span<const double>(y).subspan(iz * ng, ng), eta, k) / norm;
        const bool fused = opts.mode == ReconMode::fused;
        for (std::size_t j = 0; j < sino.np(); ++j) {
            const double z = sino.p_axis().node(j) / se;
            if (z < zlo || z > zhi) {
                ++local.out_of_range;
                // fused: d^k/dz^k = 0 outside the data, as in the compositional path
                if (fused) sino.at(i, j) = factor * detail::end_taylor(t.z_axis(), chi0, z, k - 1);
                continue;
            }
            sino.at(i, j) = factor * interp_grid(t.z_axis(), chi0, z, InterpMethod::cubic, Extension::zero);
        }
    }
    if (stats) *stats = local;
    return sino;
}

/// Complete per-half-plane reconstructor.
class HalfPlaneReconstructor {
public:
    HalfPlaneReconstructor(const SliceTable& t, const ReconOptions& opts, double phi, double p_extent)
        : sino_(halfplane_sinogram(t, phi, opts, p_extent, &stats_)),
          inverter_(sino_, opts.fd_p_accuracy, opts.mode == ReconMode::compositional ? 1 : t.k() + 1)
    {
    }

    double operator()(double r, double x3) const { return inverter_(r, x3); }
    const SinogramGrid& sinogram() const { return sino_; }
    const HalfPlaneStats& stats() const { return stats_; }
    const RadonInverter& inverter() const { return inverter_; }

private:
    HalfPlaneStats stats_;
    SinogramGrid sino_;
    RadonInverter inverter_;
};

struct ReconReport {
    std::size_t azimuths = 0;
    std::size_t sinogram_samples = 0;
    std::size_t out_of_range_samples = 0;
    std::size_t excluded_eta_rows = 0;
    double p_extent = 0.0;
    std::vector<std::string> failures;
    bool partial = false;
};

struct ReconResult {
    VolumeGrid volume;
    ReconReport report;
};

/// Output voxels grouped by the azimuth of their vertical half-plane.
struct AzimuthGroup {
    double phi = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> columns; // (ix, iy)
};

inline std::vector<AzimuthGroup> group_by_azimuth(const VolumeGrid& v)
{
    std::map<double, std::vector<std::pair<std::size_t, std::size_t>>> groups;
    for (std::size_t ix = 0; ix < v.nx(); ++ix)
        for (std::size_t iy = 0; iy < v.ny(); ++iy) {
            const double x = v.axis(0).node(ix), y = v.axis(1).node(iy);
            const double phi = (x == 0.0 && y == 0.0) ? 0.0 : wrap_angle(std::atan2(y, x));
            groups[phi].emplace_back(ix, iy);
        }
    std::vector<AzimuthGroup> out;
    out.reserve(groups.size());
    for (auto& [phi, cols] : groups) out.push_back({phi, std::move(cols)});
    return out;
}

inline double default_p_extent(const VolumeGrid& v)
{
    double rmax = 0.0, zmax = 0.0;
    for (double x : {v.axis(0).first_node(), v.axis(0).last_node()})
        for (double y : {v.axis(1).first_node(), v.axis(1).last_node()}) rmax = std::max(rmax, std::hypot(x, y));
    zmax = std::max(std::abs(v.axis(2).first_node()), std::abs(v.axis(2).last_node()));
    return 1.05 * std::hypot(rmax, zmax);
}

/// Reconstruct f on the Cartesian lattice of `out`. Every distinct azimuth
/// gets its own half-plane sinogram, shared by all voxels in that half-plane.
inline ReconResult reconstruct_volume(const TransformGrid& data, VolumeGrid out, const ReconOptions& opts,
                                      const std::function<void(std::size_t, std::size_t)>& progress = {})
{
    opts.validate();
    if (!opts.psi_extension) throw ValidationError("reconstruction needs the psi symmetry extension");
    const SliceTable table(data, opts.sigma, opts.fd_psi_accuracy, true);
    const double p_extent = opts.p_extent > 0.0 ? opts.p_extent : default_p_extent(out);
    const auto groups = group_by_azimuth(out);
    std::vector<HalfPlaneStats> stats(groups.size());
    std::vector<std::string> failures(groups.size());
    std::size_t done = 0;
    std::mutex progress_mutex;
    parallel_for(
        groups.size(),
        [&](std::size_t gi) {
            const auto& grp = groups[gi];
            try {
                const HalfPlaneReconstructor rec(table, opts, grp.phi, p_extent);
                stats[gi] = rec.stats();
                for (const auto& [ix, iy] : grp.columns) {
                    const double r = std::hypot(out.axis(0).node(ix), out.axis(1).node(iy));
                    for (std::size_t iz = 0; iz < out.nz(); ++iz) out.at(ix, iy, iz) = rec(r, out.axis(2).node(iz));
                }
            } catch (const Error& e) {
                failures[gi] = "azimuth " + std::to_string(grp.phi) + " (columns starting at ix=" +
                               std::to_string(grp.columns.front().first) + ", iy=" +
                               std::to_string(grp.columns.front().second) + "): " + e.what();
            }
            if (progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                progress(++done, groups.size());
            }
        },
        opts.threads);
    ReconResult res{std::move(out), {}};
    res.report.azimuths = groups.size();
    res.report.p_extent = p_extent;
    for (const auto& s : stats) {
        res.report.sinogram_samples += s.samples;
        res.report.out_of_range_samples += s.out_of_range;
        res.report.excluded_eta_rows += s.excluded_rows;
    }
    for (auto& f : failures)
        if (!f.empty()) res.report.failures.push_back(std::move(f));
    res.report.partial = !res.report.failures.empty();
    return res;
}

// ---------------------------------------------------------------------------
// Inversion of the vertical slice transform for a callable Gamma(phi, t).

struct GindikinOptions {
    int phi_nodes = 512;
    int t_nodes = 1024;
    int fd_accuracy = 4;
    bool equator_terms = true;
};

/// Samples Gamma g on a (phi, t) lattice once; evaluates g at any direction.
///   g(w) = -sqrt(1 - w1^2 - w2^2) / (4 pi) int_0^{2pi} [ PV int_{-1}^{1} dGamma/dt (phi, t) / (t - s) dt
///          - Gamma(phi, 1) / (1 - s) - Gamma(phi, -1) / (1 + s) ] d phi,   s = w1 cos phi + w2 sin phi.
class GindikinInverter {
public:
    GindikinInverter(const std::function<double(double, double)>& gamma, const GindikinOptions& opts = {})
        : opts_(opts), phi_axis_(Axis::periodic_centered("phi", opts.phi_nodes, 0.0, kTwoPi)),
          t_axis_(Axis::centered("t", opts.t_nodes, -1.0, 1.0))
    {
        const std::size_t np = phi_axis_.count, nt = t_axis_.count;
        values_.resize(np * nt);
        deriv_.resize(np * nt);
        plus_.resize(np);
        minus_.resize(np);
        const DiffOperator d(nt, FDSpec{1, opts.fd_accuracy, t_axis_.step()});
        for (std::size_t i = 0; i < np; ++i) {
            const double phi = phi_axis_.node(i);
            for (std::size_t j = 0; j < nt; ++j) values_[i * nt + j] = gamma(phi, t_axis_.node(j));
            plus_[i] = gamma(phi, 1.0);
            minus_[i] = gamma(phi, -1.0);
            d.apply(values_.data() + i * nt, 1, deriv_.data() + i * nt, 1);
        }
    }

    double operator()(const UnitVec3& w) const
    {
        const double rho2 = w.x() * w.x() + w.y() * w.y();
        const std::size_t np = phi_axis_.count, nt = t_axis_.count;
        if (1.0 - rho2 < 1e-14) {
            // equator: the limit is Gamma(phi_w, 1)
            const double phi = wrap_angle(std::atan2(w.y(), w.x()));
            return interp_grid(phi_axis_, plus_, phi, InterpMethod::cubic);
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < np; ++i) {
            const double phi = phi_axis_.node(i);
            const double s = w.x() * std::cos(phi) + w.y() * std::sin(phi);
            double v = pv_sampled(t_axis_, std::span<const double>(deriv_).subspan(i * nt, nt), s);
            if (opts_.equator_terms) v -= plus_[i] / (1.0 - s) + minus_[i] / (1.0 + s);
            acc += v;
        }
        return -std::sqrt(1.0 - rho2) / (4.0 * kPi) * acc * phi_axis_.step();
    }

    /// Largest |Gamma(phi + pi, -t) - Gamma(phi, t)| relative to max |Gamma|.
    /// Any vertical slice transform satisfies this symmetry exactly.
    double symmetry_residual() const
    {
        const std::size_t np = phi_axis_.count, nt = t_axis_.count;
        if (np % 2) return 0.0;
        double worst = 0.0, peak = 0.0;
        for (std::size_t i = 0; i < np; ++i)
            for (std::size_t j = 0; j < nt; ++j) {
                peak = std::max(peak, std::abs(values_[i * nt + j]));
                worst = std::max(worst, std::abs(values_[((i + np / 2) % np) * nt + (nt - 1 - j)] - values_[i * nt + j]));
            }
        return peak > 0.0 ? worst / peak : 0.0;
    }

private:
    GindikinOptions opts_;
    Axis phi_axis_, t_axis_;
    std::vector<double> values_, deriv_, plus_, minus_;
};

inline double gindikin_invert(const std::function<double(double, double)>& gamma, const UnitVec3& omega,
                              const GindikinOptions& opts = {})
{
    return GindikinInverter(gamma, opts)(omega);
}

} // namespace conirad

#endif // CONIRAD_INVERSION_HPP
