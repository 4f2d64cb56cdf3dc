#ifndef CONIRAD_REPORT_HPP
#define CONIRAD_REPORT_HPP

#include "grid.hpp"
#include "phantom.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace conirad {

struct Check {
    std::string name;
    double value = 0.0;
    double reference = 0.0;
    double rel_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

inline nlohmann::json to_json(const Check& c)
{
    return {{"name", c.name},           {"value", c.value}, {"reference", c.reference}, {"rel_error", c.rel_error},
            {"tolerance", c.tolerance}, {"pass", c.pass},   {"note", c.note}};
}

inline Check check_from_json(const nlohmann::json& j)
{
    return {j.at("name").get<std::string>(), j.at("value").get<double>(),     j.at("reference").get<double>(),
            j.at("rel_error").get<double>(), j.at("tolerance").get<double>(), j.at("pass").get<bool>(),
            j.value("note", std::string())};
}

/// Results of one command. `timestamp` is kept apart from everything that is
/// a function of the configuration.
struct Report {
    std::string command;
    std::string config_hash;
    std::vector<Check> checks;
    nlohmann::json details = nlohmann::json::object();
    double runtime_seconds = 0.0;
    std::string timestamp;

    bool all_pass() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
    }

    void add(Check c) { checks.push_back(std::move(c)); }
};

inline std::string utc_timestamp()
{
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json to_json(const Report& r)
{
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) checks.push_back(to_json(c));
    return {{"command", r.command},
            {"config_hash", r.config_hash},
            {"checks", checks},
            {"all_pass", r.all_pass()},
            {"details", r.details},
            {"runtime_seconds", r.runtime_seconds},
            {"volatile", {{"timestamp", r.timestamp}}}};
}

inline Report report_from_json(const nlohmann::json& j)
{
    Report r;
    r.command = j.at("command").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& c : j.at("checks")) r.checks.push_back(check_from_json(c));
    r.details = j.value("details", nlohmann::json::object());
    r.runtime_seconds = j.value("runtime_seconds", 0.0);
    if (j.contains("volatile")) r.timestamp = j["volatile"].value("timestamp", std::string());
    return r;
}

/// Plain-text table with the same content as the JSON form.
inline std::string to_text(const Report& r)
{
    std::ostringstream os;
    os << "command: " << r.command << "\nconfig hash: " << r.config_hash << "\n";
    char line[512];
    std::snprintf(line, sizeof line, "%-40s %14s %14s %11s %10s  %s\n", "check", "value", "reference", "rel.error",
                  "tolerance", "result");
    os << line;
    for (const auto& c : r.checks) {
        std::snprintf(line, sizeof line, "%-40s %14.6e %14.6e %11.3e %10.2e  %s", c.name.c_str(), c.value, c.reference,
                      c.rel_error, c.tolerance, c.pass ? "PASS" : "FAIL");
        os << line;
        if (!c.note.empty()) os << "  (" << c.note << ")";
        os << "\n";
    }
    std::snprintf(line, sizeof line, "runtime: %.2f s\n", r.runtime_seconds);
    os << line;
    return os.str();
}

inline void write_report(const std::string& path, const Report& r)
{
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open report '" + path + "' for writing");
    out << to_json(r).dump(2) << "\n";
}

inline double relative_error(double value, double reference)
{
    const double d = std::abs(value - reference);
    return reference != 0.0 ? d / std::abs(reference) : d;
}

struct VolumeError {
    double rel_l2 = 0.0;
    double linf = 0.0;          // max |vol - f|
    double linf_rel_peak = 0.0; // linf / max |f|
    std::size_t voxels = 0;
};

/// Errors of `vol` against f over the voxels inside f's support bounding box.
inline VolumeError rel_l2_error(const VolumeGrid& vol, const Phantom& f)
{
    const auto [lo, hi] = f.support_box();
    double num = 0.0, den = 0.0, peak = 0.0;
    VolumeError e;
    for (std::size_t ix = 0; ix < vol.nx(); ++ix)
        for (std::size_t iy = 0; iy < vol.ny(); ++iy)
            for (std::size_t iz = 0; iz < vol.nz(); ++iz) {
                const Point3 p = vol.point(ix, iy, iz);
                if (p.x < lo.x || p.x > hi.x || p.y < lo.y || p.y > hi.y || p.z < lo.z || p.z > hi.z) continue;
                const double ref = f(p), d = vol.at(ix, iy, iz) - ref;
                num += d * d;
                den += ref * ref;
                peak = std::max(peak, std::abs(ref));
                e.linf = std::max(e.linf, std::abs(d));
                ++e.voxels;
            }
    if (!(den > 0.0)) throw ValidationError("reference phantom has zero norm on the comparison voxels");
    e.rel_l2 = std::sqrt(num / den);
    e.linf_rel_peak = e.linf / peak;
    return e;
}

/// Wall-clock seconds since construction.
class Stopwatch {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

} // namespace conirad

#endif // CONIRAD_REPORT_HPP
