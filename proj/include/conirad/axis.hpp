#ifndef CONIRAD_AXIS_HPP
#define CONIRAD_AXIS_HPP

#include "core.hpp"

#include <cstdint>
#include <string>

namespace conirad {

/// Uniform sampling axis. Periodic axes have period (max - min) and
/// `count` nodes per period; cell-centered axes put node i at the middle of
/// the i-th of `count` equal cells.
struct Axis {
    std::string name;
    std::size_t count = 0;
    double min = 0.0;
    double max = 0.0;
    bool periodic = false;
    bool cell_centered = true;

    static Axis centered(std::string name, std::size_t count, double lo, double hi)
    {
        return {std::move(name), count, lo, hi, false, true};
    }
    static Axis periodic_centered(std::string name, std::size_t count, double lo, double hi)
    {
        return {std::move(name), count, lo, hi, true, true};
    }
    static Axis nodal(std::string name, std::size_t count, double lo, double hi)
    {
        return {std::move(name), count, lo, hi, false, false};
    }

    double length() const { return max - min; }

    double step() const
    {
        if (periodic || cell_centered) return length() / static_cast<double>(count);
        return count > 1 ? length() / static_cast<double>(count - 1) : 0.0;
    }

    double node(std::size_t i) const
    {
        const double h = step();
        return cell_centered ? min + (static_cast<double>(i) + 0.5) * h : min + static_cast<double>(i) * h;
    }

    /// Position of x in index units (node i sits at i).
    double fractional_index(double x) const { return (x - node(0)) / step(); }

    double first_node() const { return node(0); }
    double last_node() const { return node(count - 1); }

    void validate() const
    {
        if (count == 0) throw ValidationError("axis '" + name + "' is empty");
        if (!std::isfinite(min) || !std::isfinite(max) || !(max > min))
            throw ValidationError("axis '" + name + "' needs finite min < max");
        if (!cell_centered && !periodic && count < 2)
            throw ValidationError("nodal axis '" + name + "' needs at least two nodes");
    }

    bool operator==(const Axis&) const = default;
};

} // namespace conirad

#endif // CONIRAD_AXIS_HPP
