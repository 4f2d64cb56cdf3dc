#ifndef CONIRAD_GRID_HPP
#define CONIRAD_GRID_HPP

#include "axis.hpp"
#include "core.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace conirad {

enum class GridKind : std::uint32_t { transform = 0, volume = 1, sphere = 2, sinogram = 3 };

inline const char* to_string(GridKind k)
{
    switch (k) {
    case GridKind::transform: return "transform";
    case GridKind::volume: return "volume";
    case GridKind::sphere: return "sphere";
    case GridKind::sinogram: return "sinogram";
    }
    return "unknown";
}

/// Row-major sampled array over a list of axes, first axis slowest.
/// This is the untyped form shared by the file format and the CSV export.
struct Grid {
    GridKind kind = GridKind::transform;
    std::uint32_t k = 0;
    std::vector<Axis> axes;
    std::vector<double> values;

    std::size_t expected_size() const
    {
        std::size_t n = axes.empty() ? 0 : 1;
        for (const auto& a : axes) n *= a.count;
        return n;
    }

    std::vector<std::size_t> strides() const
    {
        std::vector<std::size_t> s(axes.size(), 1);
        for (std::size_t d = axes.size(); d-- > 1;) s[d - 1] = s[d] * axes[d].count;
        return s;
    }

    std::size_t axis_index(const std::string& name) const
    {
        for (std::size_t d = 0; d < axes.size(); ++d)
            if (axes[d].name == name) return d;
        throw ValidationError("grid has no axis named '" + name + "'");
    }

    void validate() const
    {
        if (axes.empty()) throw ValidationError("grid has no axes");
        for (const auto& a : axes) a.validate();
        if (values.size() != expected_size()) throw ValidationError("grid value count does not match its axes");
    }
};

/// Common storage for the typed 2D/3D grids below.
template <std::size_t Rank>
class GridBase {
public:
    const Axis& axis(std::size_t d) const { return axes_[d]; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    std::size_t size() const { return values_.size(); }

protected:
    GridBase() = default;
    GridBase(std::array<Axis, Rank> axes) : axes_(std::move(axes))
    {
        std::size_t n = 1;
        for (const auto& a : axes_) {
            a.validate();
            n *= a.count;
        }
        values_.assign(n, 0.0);
    }

    Grid to_grid_impl(GridKind kind, std::uint32_t k) const
    {
        return {kind, k, std::vector<Axis>(axes_.begin(), axes_.end()), values_};
    }

    void load_values(const Grid& g)
    {
        if (g.axes.size() != Rank) throw ValidationError("grid rank mismatch");
        if (g.values.size() != values_.size()) throw ValidationError("grid value count does not match its axes");
        values_ = g.values;
    }

    std::array<Axis, Rank> axes_;
    std::vector<double> values_;
};

/// Sampled T_k data over (z, beta, psi). psi nodes stay strictly inside (0, pi/2);
/// beta is periodic on [0, 2pi).
class TransformGrid : public GridBase<3> {
public:
    TransformGrid(Axis z, std::size_t beta_count, std::size_t psi_count, int k)
        : GridBase<3>({std::move(z), Axis::periodic_centered("beta", beta_count, 0.0, kTwoPi),
                       Axis::centered("psi", psi_count, 0.0, kPi / 2)}),
          k_(k)
    {
        axes_[0].name = "z";
        check();
    }

    static TransformGrid from_grid(const Grid& g)
    {
        if (g.kind != GridKind::transform) throw ValidationError("expected a transform grid");
        g.validate();
        if (g.axes.size() != 3) throw ValidationError("transform grid must have rank 3");
        TransformGrid t(g.axes, static_cast<int>(g.k));
        t.load_values(g);
        for (double v : t.values_)
            if (!std::isfinite(v)) throw ValidationError("transform grid contains non-finite values");
        return t;
    }

    Grid to_grid() const { return to_grid_impl(GridKind::transform, static_cast<std::uint32_t>(k_)); }

    int k() const { return k_; }
    const Axis& z_axis() const { return axes_[0]; }
    const Axis& beta_axis() const { return axes_[1]; }
    const Axis& psi_axis() const { return axes_[2]; }
    std::size_t nz() const { return axes_[0].count; }
    std::size_t nbeta() const { return axes_[1].count; }
    std::size_t npsi() const { return axes_[2].count; }

    std::size_t index(std::size_t iz, std::size_t ib, std::size_t ip) const { return (iz * nbeta() + ib) * npsi() + ip; }
    double& at(std::size_t iz, std::size_t ib, std::size_t ip) { return values_[index(iz, ib, ip)]; }
    double at(std::size_t iz, std::size_t ib, std::size_t ip) const { return values_[index(iz, ib, ip)]; }

private:
    TransformGrid(const std::vector<Axis>& axes, int k) : GridBase<3>({axes[0], axes[1], axes[2]}), k_(k) { check(); }

    void check() const
    {
        const auto& b = axes_[1];
        const auto& p = axes_[2];
        if (k_ < 1) throw ValidationError("transform grid weight index k must be >= 1");
        if (axes_[0].periodic) throw ValidationError("z axis cannot be periodic");
        if (!b.periodic || std::abs(b.min) > 1e-12 || std::abs(b.max - kTwoPi) > 1e-12)
            throw ValidationError("beta axis must be periodic on [0, 2pi)");
        if (p.periodic || !(p.first_node() > 0.0) || !(p.last_node() < kPi / 2))
            throw ValidationError("psi nodes must lie strictly inside (0, pi/2)");
    }

    int k_;
};

/// Reconstructed values on a Cartesian (x, y, z) lattice.
class VolumeGrid : public GridBase<3> {
public:
    VolumeGrid(Axis x, Axis y, Axis z) : GridBase<3>({std::move(x), std::move(y), std::move(z)}) {}

    static VolumeGrid from_grid(const Grid& g)
    {
        if (g.kind != GridKind::volume) throw ValidationError("expected a volume grid");
        g.validate();
        if (g.axes.size() != 3) throw ValidationError("volume grid must have rank 3");
        VolumeGrid v(g.axes[0], g.axes[1], g.axes[2]);
        v.load_values(g);
        return v;
    }

    Grid to_grid() const { return to_grid_impl(GridKind::volume, 0); }

    std::size_t nx() const { return axes_[0].count; }
    std::size_t ny() const { return axes_[1].count; }
    std::size_t nz() const { return axes_[2].count; }
    std::size_t index(std::size_t ix, std::size_t iy, std::size_t iz) const { return (ix * ny() + iy) * nz() + iz; }
    double& at(std::size_t ix, std::size_t iy, std::size_t iz) { return values_[index(ix, iy, iz)]; }
    double at(std::size_t ix, std::size_t iy, std::size_t iz) const { return values_[index(ix, iy, iz)]; }
    Point3 point(std::size_t ix, std::size_t iy, std::size_t iz) const
    {
        return {axes_[0].node(ix), axes_[1].node(iy), axes_[2].node(iz)};
    }
};

/// Samples of a sphere function over (phi, eta); poles excluded, phi periodic.
class SphereGrid : public GridBase<2> {
public:
    SphereGrid(std::size_t phi_count, std::size_t eta_count)
        : GridBase<2>({Axis::periodic_centered("phi", phi_count, 0.0, kTwoPi), Axis::centered("eta", eta_count, 0.0, kPi)})
    {
    }

    static SphereGrid from_grid(const Grid& g)
    {
        if (g.kind != GridKind::sphere || g.axes.size() != 2) throw ValidationError("expected a rank-2 sphere grid");
        g.validate();
        SphereGrid s(g.axes[0].count, g.axes[1].count);
        if (!(s.axes_[0] == g.axes[0]) || !(s.axes_[1] == g.axes[1]))
            throw ValidationError("sphere grid axes must be periodic phi on [0, 2pi) and centered eta on (0, pi)");
        s.load_values(g);
        return s;
    }

    Grid to_grid() const { return to_grid_impl(GridKind::sphere, 0); }

    std::size_t nphi() const { return axes_[0].count; }
    std::size_t neta() const { return axes_[1].count; }
    double& at(std::size_t i, std::size_t j) { return values_[i * neta() + j]; }
    double at(std::size_t i, std::size_t j) const { return values_[i * neta() + j]; }
};

/// 2D Radon samples over (eta, p) for one half-plane azimuth.
class SinogramGrid : public GridBase<2> {
public:
    SinogramGrid(std::size_t eta_count, std::size_t p_count, double p_extent)
        : GridBase<2>({Axis::centered("eta", eta_count, 0.0, kPi), Axis::centered("p", p_count, -p_extent, p_extent)})
    {
    }

    static SinogramGrid from_grid(const Grid& g)
    {
        if (g.kind != GridKind::sinogram || g.axes.size() != 2) throw ValidationError("expected a rank-2 sinogram grid");
        g.validate();
        SinogramGrid s(g.axes[0].count, g.axes[1].count, g.axes[1].max);
        s.load_values(g);
        return s;
    }

    Grid to_grid() const { return to_grid_impl(GridKind::sinogram, 0); }

    const Axis& eta_axis() const { return axes_[0]; }
    const Axis& p_axis() const { return axes_[1]; }
    std::size_t neta() const { return axes_[0].count; }
    std::size_t np() const { return axes_[1].count; }
    double& at(std::size_t i, std::size_t j) { return values_[i * np() + j]; }
    double at(std::size_t i, std::size_t j) const { return values_[i * np() + j]; }
    std::span<const double> row(std::size_t i) const { return values().subspan(i * np(), np()); }
};

} // namespace conirad

#endif // CONIRAD_GRID_HPP
