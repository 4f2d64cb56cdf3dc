#ifndef CONIRAD_CONFIG_HPP
#define CONIRAD_CONFIG_HPP

// JSON run configuration. Unknown keys are rejected at every level and the
// parsed result carries every default explicitly (see to_json).

#include "forward.hpp"
#include "inversion.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace conirad {

using json = nlohmann::json;

struct VolumeSpec {
    std::array<double, 3> min{-1.6, -1.6, -1.6};
    std::array<double, 3> max{1.6, 1.6, 1.6};
    std::array<std::size_t, 3> count{32, 32, 32};

    VolumeGrid make() const
    {
        return VolumeGrid(Axis::centered("x", count[0], min[0], max[0]), Axis::centered("y", count[1], min[1], max[1]),
                          Axis::centered("z", count[2], min[2], max[2]));
    }
};

struct VerifySpec {
    std::uint64_t seed = 20240611;
    int oracle_n = 2048;
    int tuples = 10;
};

struct OutputSpec {
    std::string data;
    std::string volume;
    std::string report;
};

struct RunConfig {
    Phantom phantom;
    TransformGridSpec data_grid;
    VolumeSpec volume;
    QuadratureSpec simulation = QuadratureSpec::gauss(32);
    ReconOptions recon;
    bool sigma_auto = false;
    VerifySpec verify;
    OutputSpec output;
    unsigned threads = 0;
};

namespace detail {

/// Reads members of one JSON object and remembers which keys were used.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where))
    {
        if (!j_.is_object()) throw ValidationError(where_ + ": expected a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key)
    {
        used_.insert(key);
        return j_.at(key);
    }

    template <class T>
    T get(const std::string& key, T fallback)
    {
        if (!j_.contains(key)) return fallback;
        used_.insert(key);
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ValidationError(where_ + "." + key + ": wrong type");
        }
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ValidationError(where_ + ": unknown key '" + it.key() + "'");
    }

    const std::string& where() const { return where_; }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> used_;
};

inline Point3 point_from(const json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 3) throw ValidationError(where + ": expected [x, y, z]");
    try {
        return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    } catch (const json::exception&) {
        throw ValidationError(where + ": coordinates must be numbers");
    }
}

inline Rule rule_from(const std::string& s, const std::string& where)
{
    if (s == "midpoint") return Rule::midpoint;
    if (s == "simpson") return Rule::simpson;
    if (s == "gauss_legendre") return Rule::gauss_legendre;
    throw ValidationError(where + ": unknown quadrature rule '" + s + "'");
}

inline const char* rule_name(Rule r)
{
    switch (r) {
    case Rule::midpoint: return "midpoint";
    case Rule::simpson: return "simpson";
    case Rule::gauss_legendre: return "gauss_legendre";
    }
    return "?";
}

} // namespace detail

inline ReconMode mode_from_string(const std::string& s)
{
    if (s == "compositional") return ReconMode::compositional;
    if (s == "fused") return ReconMode::fused;
    throw ValidationError("unknown reconstruction mode '" + s + "' (expected compositional or fused)");
}

inline RunConfig parse_config(const json& j)
{
    using detail::ObjectReader;
    RunConfig c;
    ObjectReader top(j, "config");

    if (top.has("phantom")) {
        ObjectReader ph(top.raw("phantom"), "phantom");
        std::vector<Bump> bumps;
        std::vector<Gaussian> gaussians;
        if (ph.has("bumps")) {
            const json& arr = ph.raw("bumps");
            if (!arr.is_array()) throw ValidationError("phantom.bumps: expected an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                ObjectReader b(arr[i], "phantom.bumps[" + std::to_string(i) + "]");
                Bump bump;
                bump.center = detail::point_from(b.raw("center"), b.where() + ".center");
                bump.radius = b.get("radius", 1.0);
                bump.amplitude = b.get("amplitude", 1.0);
                b.finish();
                bumps.push_back(bump);
            }
        }
        if (ph.has("gaussians")) {
            const json& arr = ph.raw("gaussians");
            if (!arr.is_array()) throw ValidationError("phantom.gaussians: expected an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                ObjectReader g(arr[i], "phantom.gaussians[" + std::to_string(i) + "]");
                Gaussian gs;
                gs.center = detail::point_from(g.raw("center"), g.where() + ".center");
                gs.width = g.get("width", 1.0);
                gs.amplitude = g.get("amplitude", 1.0);
                g.finish();
                gaussians.push_back(gs);
            }
        }
        ph.finish();
        c.phantom = Phantom(std::move(bumps), std::move(gaussians));
    }

    if (top.has("data_grid")) {
        ObjectReader d(top.raw("data_grid"), "data_grid");
        const double zmin = d.get("z_min", c.data_grid.z.min), zmax = d.get("z_max", c.data_grid.z.max);
        const auto nz = d.get<std::size_t>("z_count", c.data_grid.z.count);
        c.data_grid.z = Axis::centered("z", nz, zmin, zmax);
        c.data_grid.beta_count = d.get("beta_count", c.data_grid.beta_count);
        c.data_grid.psi_count = d.get("psi_count", c.data_grid.psi_count);
        c.data_grid.k = d.get("k", c.data_grid.k);
        d.finish();
    }
    c.data_grid.make(); // validates

    if (top.has("volume")) {
        ObjectReader v(top.raw("volume"), "volume");
        c.volume.min = v.get("min", c.volume.min);
        c.volume.max = v.get("max", c.volume.max);
        c.volume.count = v.get("count", c.volume.count);
        v.finish();
    }
    c.volume.make();

    if (top.has("simulation")) {
        ObjectReader s(top.raw("simulation"), "simulation");
        c.simulation.rule = detail::rule_from(s.get<std::string>("rule", detail::rule_name(c.simulation.rule)), "simulation.rule");
        c.simulation.n = s.get("n", c.simulation.n);
        c.simulation.adaptive = s.get("adaptive", c.simulation.adaptive);
        c.simulation.rel_tol = s.get("rel_tol", c.simulation.rel_tol);
        s.finish();
    }
    c.simulation.validate();

    if (top.has("reconstruction")) {
        ObjectReader r(top.raw("reconstruction"), "reconstruction");
        auto& o = c.recon;
        if (r.has("sigma")) {
            const json& s = r.raw("sigma");
            if (s.is_string() && s.get<std::string>() == "auto") c.sigma_auto = true;
            else if (s.is_number_integer()) o.sigma = s.get<int>();
            else throw ValidationError("reconstruction.sigma: expected 1, 2 or \"auto\"");
        }
        o.mode = mode_from_string(r.get<std::string>("mode", to_string(o.mode)));
        o.fd_z_accuracy = r.get("fd_z_accuracy", o.fd_z_accuracy);
        o.fd_psi_accuracy = r.get("fd_psi_accuracy", o.fd_psi_accuracy);
        o.fd_p_accuracy = r.get("fd_p_accuracy", o.fd_p_accuracy);
        o.gamma_nodes = r.get("gamma_nodes", o.gamma_nodes);
        o.eta_nodes = r.get("eta_nodes", o.eta_nodes);
        o.p_nodes = r.get("p_nodes", o.p_nodes);
        o.p_extent = r.get("p_extent", o.p_extent);
        o.eta_margin_cells = r.get("eta_margin_cells", o.eta_margin_cells);
        o.psi_extension = r.get("psi_extension", o.psi_extension);
        o.equator_terms = r.get("equator_terms", o.equator_terms);
        r.finish();
    }
    c.recon.validate();

    if (top.has("verify")) {
        ObjectReader v(top.raw("verify"), "verify");
        c.verify.seed = v.get("seed", c.verify.seed);
        c.verify.oracle_n = v.get("oracle_n", c.verify.oracle_n);
        c.verify.tuples = v.get("tuples", c.verify.tuples);
        v.finish();
        if (c.verify.oracle_n < 2 || c.verify.tuples < 1) throw ValidationError("verify: oracle_n >= 2 and tuples >= 1 required");
    }

    if (top.has("output")) {
        ObjectReader o(top.raw("output"), "output");
        c.output.data = o.get("data", c.output.data);
        c.output.volume = o.get("volume", c.output.volume);
        c.output.report = o.get("report", c.output.report);
        o.finish();
    }
    c.threads = top.get("threads", c.threads);
    c.recon.threads = c.threads;
    top.finish();
    return c;
}

inline json to_json(const RunConfig& c)
{
    json bumps = json::array(), gaussians = json::array();
    for (const auto& b : c.phantom.bumps())
        bumps.push_back({{"center", {b.center.x, b.center.y, b.center.z}}, {"radius", b.radius}, {"amplitude", b.amplitude}});
    for (const auto& g : c.phantom.gaussians())
        gaussians.push_back({{"center", {g.center.x, g.center.y, g.center.z}}, {"width", g.width}, {"amplitude", g.amplitude}});
    const auto& o = c.recon;
    json sigma = c.sigma_auto ? json("auto") : json(o.sigma);
    return {
        {"phantom", {{"bumps", bumps}, {"gaussians", gaussians}}},
        {"data_grid",
         {{"z_min", c.data_grid.z.min}, {"z_max", c.data_grid.z.max}, {"z_count", c.data_grid.z.count},
          {"beta_count", c.data_grid.beta_count}, {"psi_count", c.data_grid.psi_count}, {"k", c.data_grid.k}}},
        {"volume", {{"min", c.volume.min}, {"max", c.volume.max}, {"count", c.volume.count}}},
        {"simulation",
         {{"rule", detail::rule_name(c.simulation.rule)}, {"n", c.simulation.n}, {"adaptive", c.simulation.adaptive},
          {"rel_tol", c.simulation.rel_tol}}},
        {"reconstruction",
         {{"sigma", sigma}, {"mode", to_string(o.mode)}, {"fd_z_accuracy", o.fd_z_accuracy},
          {"fd_psi_accuracy", o.fd_psi_accuracy}, {"fd_p_accuracy", o.fd_p_accuracy}, {"gamma_nodes", o.gamma_nodes},
          {"eta_nodes", o.eta_nodes}, {"p_nodes", o.p_nodes}, {"p_extent", o.p_extent},
          {"eta_margin_cells", o.eta_margin_cells}, {"psi_extension", o.psi_extension},
          {"equator_terms", o.equator_terms}}},
        {"verify", {{"seed", c.verify.seed}, {"oracle_n", c.verify.oracle_n}, {"tuples", c.verify.tuples}}},
        {"output", {{"data", c.output.data}, {"volume", c.output.volume}, {"report", c.output.report}}},
        {"threads", c.threads},
    };
}

inline std::string canonical_dump(const RunConfig& c) { return to_json(c).dump(); }

/// 64-bit FNV-1a of the canonical dump, as 16 hex digits.
inline std::string config_hash(const RunConfig& c)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : canonical_dump(c)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

} // namespace conirad

#endif // CONIRAD_CONFIG_HPP
