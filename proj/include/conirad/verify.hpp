#ifndef CONIRAD_VERIFY_HPP
#define CONIRAD_VERIFY_HPP

// Identity suite: each check compares a computed quantity with an
// independent oracle (closed form, or a different quadrature path).

#include "config.hpp"
#include "gridio.hpp"
#include "inversion.hpp"
#include "report.hpp"

#include <cstdio>
#include <random>

namespace conirad {

inline Phantom default_bump_phantom() { return Phantom({Bump{{0.8, 0.0, 0.3}, 0.5, 1.0}}); }

inline std::string fmt(const char* f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---------------------------------------------------------------------------
// A1: which sin^sigma(psi) makes the slice identity hold.

struct SigmaCalibration {
    int sigma = 0;                      // 0 when neither or both exponents pass
    std::array<double, 2> max_error{};  // worst relative error for sigma = 1, 2
    double min_ratio = 0.0, max_ratio = 0.0; // (sigma=2 candidate) / (sigma=1 candidate) = 1 / sin(psi)
    std::size_t tuples = 0;
};

/// T_k against the circle mean of chi_k f(z, .) at random cones that meet f.
inline SigmaCalibration calibrate_sigma(const Phantom& f, int k, std::uint64_t seed, int tuples, int oracle_n,
                                        double tol = 1e-3)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uz(-1.0, 1.5), ub(0.0, kTwoPi), up(0.15, kPi / 2 - 0.15);
    const auto q = QuadratureSpec::gauss(oracle_n);
    const auto qa = QuadratureSpec::midpoint(oracle_n);
    SigmaCalibration cal;
    cal.min_ratio = 1e300;
    int found = 0, attempts = 0;
    while (found < tuples) {
        if (++attempts > 100000) throw NumericalError("calibrate_sigma: phantom too small to find cones that meet it");
        const ConeParams c(uz(rng), ub(rng), up(rng), k);
        const double t = conical_transform(f, c, q);
        if (std::abs(t) < 1e-4) continue;
        ++found;
        auto chik = [&](const UnitVec3& w) { return weighted_xray(f, c.z(), w, k, q); };
        const double slice = vertical_slice(chik, c.beta(), std::cos(c.psi()), qa, SliceNorm::mean);
        for (int s = 1; s <= 2; ++s) {
            const double cand = t / (kTwoPi * std::pow(std::sin(c.psi()), s));
            cal.max_error[s - 1] = std::max(cal.max_error[s - 1], relative_error(slice, cand));
        }
        const double ratio = 1.0 / std::sin(c.psi());
        cal.min_ratio = std::min(cal.min_ratio, ratio);
        cal.max_ratio = std::max(cal.max_ratio, ratio);
    }
    cal.tuples = static_cast<std::size_t>(found);
    const bool p1 = cal.max_error[0] <= tol, p2 = cal.max_error[1] <= tol;
    cal.sigma = (p1 != p2) ? (p1 ? 1 : 2) : 0;
    return cal;
}

inline Check check_sigma_calibration(const SigmaCalibration& cal, double tol = 1e-3)
{
    Check c;
    c.name = "A1 slice normalization (sigma)";
    c.value = cal.sigma;
    c.reference = 1;
    c.tolerance = tol;
    c.rel_error = cal.sigma ? cal.max_error[cal.sigma - 1] : std::min(cal.max_error[0], cal.max_error[1]);
    c.pass = cal.sigma != 0;
    c.note = "max rel. err sigma=1: " + fmt("%.2e", cal.max_error[0]) + ", sigma=2: " + fmt("%.2e", cal.max_error[1]) +
             "; exactly one passes: " + (cal.sigma ? "yes" : "no");
    return c;
}

// ---------------------------------------------------------------------------
// A2: Gindikin inversion round trips.

inline Check check_gindikin(std::uint64_t seed, int directions = 50, double tol = 0.02)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), uphi(0.0, kTwoPi);
    std::vector<UnitVec3> dirs;
    while (static_cast<int>(dirs.size()) < directions) {
        const double w3 = u(rng);
        if (std::abs(w3) < 0.2) continue;
        const double rho = std::sqrt(1.0 - w3 * w3), phi = uphi(rng);
        dirs.push_back(UnitVec3::normalized({rho * std::cos(phi), rho * std::sin(phi), w3}));
    }

    // g = w3^2, Gamma g(phi, t) = (1 - t^2) / 2 inside, g(+-e_phi) = 0 at |t| = 1
    const GindikinInverter inv_sq([](double, double t) { return std::abs(t) < 1.0 ? 0.5 * (1.0 - t * t) : 0.0; });
    double worst_sq = 0.0;
    for (const auto& w : dirs) worst_sq = std::max(worst_sq, relative_error(inv_sq(w), w.z() * w.z()));

    // even bump pair on the sphere, Gamma by quadrature
    const Vec3 c0 = UnitVec3::normalized({0.6, 0.3, 0.74}).vec();
    auto bump = [c0](const UnitVec3& w) {
        auto one = [&](const Vec3& c) {
            const Vec3 d = w.vec() - c;
            const double q = dot(d, d) / 0.64;
            return q < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - q)) : 0.0;
        };
        return one(c0) + one({c0.x, c0.y, -c0.z});
    };
    const auto qs = QuadratureSpec::midpoint(256);
    const GindikinInverter inv_bump([&](double phi, double t) { return vertical_slice(bump, phi, t, qs); });
    double worst_bump = 0.0;
    for (const auto& w : dirs) worst_bump = std::max(worst_bump, std::abs(inv_bump(w) - bump(w)) / 1.0);

    Check c;
    c.name = "A2 Gindikin round trip";
    c.value = std::max(worst_sq, worst_bump);
    c.reference = 0.0;
    c.rel_error = c.value;
    c.tolerance = tol;
    c.pass = worst_sq <= tol && worst_bump <= tol;
    c.note = "w3^2 max rel. err " + fmt("%.2e", worst_sq) + "; bump max err/peak " + fmt("%.2e", worst_bump) +
             "; symmetry residual " + fmt("%.1e", inv_bump.symmetry_residual());
    return c;
}

// ---------------------------------------------------------------------------
// A3: the slice transform annihilates odd functions.

inline Check check_odd_annihilation(std::uint64_t seed, double tol = 1e-10)
{
    const std::vector<SphereFunction> odd = {
        [](const UnitVec3& w) { return w.z(); },
        [](const UnitVec3& w) { return w.z() * w.z() * w.z(); },
        [](const UnitVec3& w) { return w.x() * w.z(); },
        [](const UnitVec3& w) { return std::sin(3.0 * w.z()) * std::exp(w.x()); },
        [](const UnitVec3& w) { return w.z() * std::exp(-4.0 * ((w.x() - 0.5) * (w.x() - 0.5) + w.y() * w.y())); },
    };
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uphi(0.0, kTwoPi), ut(-0.999, 0.999);
    double worst = 0.0;
    for (const auto& g : odd)
        for (int i = 0; i < 20; ++i) {
            const double phi = uphi(rng), t = ut(rng);
            for (int n : {64, 257, 1024}) worst = std::max(worst, std::abs(vertical_slice(g, phi, t, QuadratureSpec::midpoint(n))));
        }
    return {"A3 odd annihilation", worst, 0.0, worst, tol, worst <= tol, "5 odd functions, 20 circles each"};
}

// ---------------------------------------------------------------------------
// A4: the fractional relation between chi_0 and chi_k (k = 1).

struct FractionalSample {
    double relation = 0.0; // int_{-inf}^{w3} d/dz chi_1 f(z, (w1, w2, s)) ds
    double chi0 = 0.0;     // chi_0 f(z, w)
};

/// d/dz chi_1 f along the half-line s < w3, with s = w3 - u / (1 - u).
inline double fractional_relation(const Phantom& f, double z, const UnitVec3& w, const QuadratureSpec& q, double dz = 1e-3)
{
    auto dchi = [&](double s) {
        const Vec3 d{w.x(), w.y(), s};
        auto at = [&](double zz) { return weighted_xray(f, zz, d, 1, q); };
        return (8.0 * (at(z + dz) - at(z - dz)) - (at(z + 2 * dz) - at(z - 2 * dz))) / (12.0 * dz);
    };
    auto integrand = [&](double u) {
        const double one = 1.0 - u;
        return dchi(w.z() - u / one) / (one * one);
    };
    return integrate_1d(integrand, 0.0, 1.0 - 1e-9, QuadratureSpec::gauss(160));
}

inline Check check_fractional_relation(std::uint64_t seed, int tuples, double tol = 0.01)
{
    const Phantom f({}, {Gaussian{{0.5, 0.2, 0.1}, 0.4, 1.0}});
    const auto q = QuadratureSpec::gauss(96);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uz(-0.8, 1.0), u3(-0.9, 0.9), uphi(-0.5, 0.9);
    double worst_even = 0.0, worst_full = 0.0, worst_printed = 0.0;
    int found = 0;
    while (found < tuples) {
        const double z = uz(rng), w3 = u3(rng), phi = uphi(rng), rho = std::sqrt(1.0 - w3 * w3);
        const auto w = UnitVec3::normalized({rho * std::cos(phi), rho * std::sin(phi), w3});
        const double c_up = weighted_xray(f, z, w, 0, q), c_dn = weighted_xray(f, z, w.reflected(), 0, q);
        const double even = 0.5 * (c_up + c_dn), odd = 0.5 * (c_up - c_dn);
        if (std::abs(even) < 0.05 || std::abs(odd) < 0.02) continue;
        ++found;
        const double l_up = fractional_relation(f, z, w, q), l_dn = fractional_relation(f, z, w.reflected(), q);
        worst_full = std::max(worst_full, relative_error(l_up, c_up));
        worst_even = std::max(worst_even, relative_error(0.5 * (l_up + l_dn), even));
        // relation fed with the even part of chi_1, as displayed: returns the odd part of chi_0
        worst_printed = std::max(worst_printed, relative_error(0.5 * (l_up - l_dn), odd));
    }
    Check c;
    c.name = "A4 fractional chi0/chi1 relation";
    c.value = worst_even;
    c.rel_error = worst_even;
    c.tolerance = tol;
    c.pass = worst_even <= tol && worst_full <= tol;
    c.note = "(chi0 f)_e: " + fmt("%.2e", worst_even) + ", chi0 f: " + fmt("%.2e", worst_full) +
             "; with (chi1 f)_e as input the relation gives (chi0 f)_o to " + fmt("%.2e", worst_printed);
    return c;
}

// ---------------------------------------------------------------------------
// A5: V-line transform is twice the even part of chi_0.

inline Check check_vline(const Phantom& f, std::uint64_t seed, int tuples, double tol = 1e-8)
{
    const auto q = QuadratureSpec::gauss(256);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uz(-1.0, 1.5), uphi(-0.6, 0.6), ueta(0.2, kPi - 0.2);
    double worst = 0.0;
    int found = 0;
    while (found < tuples) {
        const double z = uz(rng), phi = uphi(rng), eta = ueta(rng);
        const double v = vline_transform(f, z, phi, eta, q);
        if (std::abs(v) < 1e-3) continue;
        ++found;
        const double a = weighted_xray(f, z, unit_from_angles(phi, eta), 0, q);
        const double b = weighted_xray(f, z, unit_from_angles(phi, eta).reflected(), 0, q);
        worst = std::max(worst, relative_error(a + b, v));
    }
    return {"A5 V-line identity", worst, 0.0, worst, tol, worst <= tol, "two-ray oracle"};
}

// ---------------------------------------------------------------------------
// A6: Radon data of the reflected half-plane trace from ray integrals.

inline Check check_radon_reduction(const Phantom& f, std::uint64_t seed, int tuples, double tol = 0.05)
{
    const auto q = QuadratureSpec::gauss(256);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uphi(-0.5, 0.5), ueta(0.3, kPi - 0.3), up(-1.5, 1.5);
    double worst_even = 0.0, worst_odd = 0.0;
    int found = 0;
    while (found < tuples) {
        const double phi = uphi(rng), eta = ueta(rng), p = up(rng);
        const double re = radon2d_phantom(f, phi, eta, p, q, Reflection::even);
        const double ro = radon2d_phantom(f, phi, eta, p, q, Reflection::odd);
        if (std::abs(re) < 1e-2 || std::abs(ro) < 1e-2) continue;
        ++found;
        const double z = p / std::sin(eta);
        const double up_ray = weighted_xray(f, z, unit_from_angles(phi, eta), 0, q);
        const double dn_ray = weighted_xray(f, z, unit_from_angles(phi, kPi - eta), 0, q);
        worst_even = std::max(worst_even, relative_error(up_ray + dn_ray, re));
        worst_odd = std::max(worst_odd, relative_error(-(up_ray - dn_ray), ro));
    }
    const double worst = std::max(worst_even, worst_odd);
    return {"A6 Radon reduction z = p/sin(eta)", worst, 0.0, worst, tol, worst <= tol,
            "even reflection vs 2 chi0_e: " + fmt("%.1e", worst_even) + "; odd reflection vs -2 chi0_o: " +
                fmt("%.1e", worst_odd)};
}

// ---------------------------------------------------------------------------
// A7: filtered inversion of an analytic Gaussian sinogram.

struct RadonPatchResult {
    double rel_l2 = 0.0;
    double far_value = 0.0;
};

inline RadonPatchResult radon_gaussian_patch(int eta_nodes = 180, int p_nodes = 257, double p_extent = 4.5, int accuracy = 4)
{
    SinogramGrid sino(static_cast<std::size_t>(eta_nodes), static_cast<std::size_t>(p_nodes), p_extent);
    for (std::size_t i = 0; i < sino.neta(); ++i)
        for (std::size_t j = 0; j < sino.np(); ++j) {
            const double p = sino.p_axis().node(j);
            sino.at(i, j) = std::sqrt(kPi) * std::exp(-p * p);
        }
    const RadonInverter inv(sino, accuracy);
    const Axis patch = Axis::centered("u", 64, -2.0, 2.0);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 64; ++i)
        for (std::size_t j = 0; j < 64; ++j) {
            const double r = patch.node(i), x3 = patch.node(j);
            const double ref = std::exp(-r * r - x3 * x3), d = inv(r, x3) - ref;
            num += d * d;
            den += ref * ref;
        }
    return {std::sqrt(num / den), std::abs(inv(3.9, 0.0))};
}

inline Check check_radon_inversion(double tol = 0.05)
{
    const auto r = radon_gaussian_patch();
    return {"A7 2D Radon inversion (Gaussian)", r.rel_l2, 0.0, r.rel_l2, tol, r.rel_l2 <= tol,
            "180x257 sinogram, 64x64 patch; |f| at r=3.9: " + fmt("%.1e", r.far_value)};
}

// ---------------------------------------------------------------------------
// A9: cone point-set symmetry.

inline Check check_cone_symmetry(const Phantom& f, std::uint64_t seed, int tuples, double tol = 1e-6)
{
    const auto q = QuadratureSpec::gauss(256);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uz(-1.0, 1.5), ub(0.0, kTwoPi), up(0.1, kPi / 2 - 0.05);
    double worst = 0.0;
    int found = 0;
    while (found < tuples) {
        const ConeParams c(uz(rng), ub(rng), up(rng), 1);
        const double a = conical_transform(f, c, q);
        if (std::abs(a) < 1e-4) continue;
        ++found;
        worst = std::max(worst, relative_error(conical_transform(f, cone_symmetry_params(c), q), a));
    }
    return {"A9 cone symmetry", worst, 0.0, worst, tol, worst <= tol, "T(z,b,p) vs T(z,b+pi,pi-p)"};
}

// ---------------------------------------------------------------------------
// A10: grid file round trip and named corruption errors.

inline Check check_grid_format(std::uint64_t seed)
{
    TransformGrid t(Axis::centered("z", 6, -1.0, 2.0), 8, 5, 2);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : t.values()) v = u(rng);
    t.values()[3] = -0.0;
    t.values()[4] = 1e-310;
    const std::string bytes = encode_grid(t.to_grid());
    const Grid back = decode_grid(bytes);
    bool ok = bytes.size() == grid_header_bytes(3) + t.size() * 8 && back.kind == GridKind::transform && back.k == 2 &&
              back.axes == t.to_grid().axes &&
              std::memcmp(back.values.data(), t.values().data(), t.size() * sizeof(double)) == 0;

    auto fault_of = [](const std::string& b) -> std::optional<GridFileFault> {
        try {
            decode_grid(b);
        } catch (const GridFileError& e) {
            return e.fault();
        }
        return std::nullopt;
    };
    std::string magic = bytes;
    magic[0] = 'X';
    std::string version = bytes;
    version[4] = 2;
    const std::string header = bytes.substr(0, 30);
    const std::string payload = bytes.substr(0, bytes.size() - 5);
    std::string flags = bytes;
    flags[kGridPreambleBytes + 32] = 7;
    int named = 0;
    named += fault_of(magic) == GridFileFault::bad_magic;
    named += fault_of(version) == GridFileFault::version_mismatch;
    named += fault_of(header) == GridFileFault::truncated_header;
    named += fault_of(payload) == GridFileFault::truncated_payload;
    named += fault_of(flags) == GridFileFault::invalid_header;
    ok = ok && named == 5;
    return {"A10 grid file format", static_cast<double>(named), 5.0, ok ? 0.0 : 1.0, 0.0, ok,
            "bit-exact round trip; corruption cases with named errors: " + std::to_string(named) + "/5"};
}

// ---------------------------------------------------------------------------

/// Identity suite used by `conirad verify`: A1-A7, A9, A10.
inline Report run_identity_suite(const RunConfig& cfg, const std::function<void(const Check&)>& on_check = {})
{
    Stopwatch clock;
    Report r;
    r.command = "verify";
    r.config_hash = config_hash(cfg);
    const Phantom f = cfg.phantom.empty() ? default_bump_phantom() : cfg.phantom;
    const auto seed = cfg.verify.seed;
    auto add = [&](Check c) {
        if (on_check) on_check(c);
        r.add(std::move(c));
    };
    const SigmaCalibration cal = calibrate_sigma(f, cfg.data_grid.k, seed, 20, cfg.verify.oracle_n);
    add(check_sigma_calibration(cal));
    r.details["sigma"] = cal.sigma;
    add(check_gindikin(seed + 1));
    add(check_odd_annihilation(seed + 2));
    add(check_fractional_relation(seed + 3, cfg.verify.tuples));
    add(check_vline(f, seed + 4, cfg.verify.tuples));
    add(check_radon_reduction(f, seed + 5, cfg.verify.tuples));
    add(check_radon_inversion());
    add(check_cone_symmetry(f, seed + 6, 20));
    add(check_grid_format(seed + 7));
    r.runtime_seconds = clock.seconds();
    r.timestamp = utc_timestamp();
    return r;
}

} // namespace conirad

#endif // CONIRAD_VERIFY_HPP
