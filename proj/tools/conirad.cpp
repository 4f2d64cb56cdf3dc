// conirad: simulate conical transform data, reconstruct, verify, score, export.
//
// Exit codes: 0 success, 2 validation failure, 3 numerical failure.

#include "conirad/conirad.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace conirad;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

void log(const std::string& msg) { std::cerr << "conirad: " << msg << "\n"; }

void write_sidecar(const std::string& data_path, const Report& r)
{
    write_report(data_path + ".report.json", r);
}

int cmd_simulate(const std::string& config_path, const std::string& out)
{
    Stopwatch clock;
    const RunConfig cfg = load_config(config_path);
    const TransformGrid t = simulate_grid(cfg.phantom, cfg.data_grid, cfg.simulation, cfg.threads);
    write_grid(out, t.to_grid());
    Report r;
    r.command = "simulate";
    r.config_hash = config_hash(cfg);
    r.details = {{"shape", {t.nz(), t.nbeta(), t.npsi()}}, {"k", t.k()}};
    r.runtime_seconds = clock.seconds();
    r.timestamp = utc_timestamp();
    write_sidecar(out, r);
    log("wrote " + out + " (" + std::to_string(t.size()) + " samples, " + fmt("%.1f s", r.runtime_seconds) + ")");
    return 0;
}

int cmd_reconstruct(const std::string& data_path, const std::string& config_path, const std::string& out,
                    const std::string& mode, const std::string& sigma)
{
    Stopwatch clock;
    RunConfig cfg = load_config(config_path);
    if (!mode.empty()) cfg.recon.mode = mode_from_string(mode);
    if (sigma == "auto") cfg.sigma_auto = true;
    else if (sigma == "1" || sigma == "2") {
        cfg.sigma_auto = false;
        cfg.recon.sigma = std::stoi(sigma);
    } else if (!sigma.empty()) throw ValidationError("--sigma must be 1, 2 or auto");

    const TransformGrid data = TransformGrid::from_grid(read_grid(data_path));
    if (cfg.sigma_auto) {
        if (cfg.phantom.empty()) throw ValidationError("--sigma auto calibrates on the config phantom, which is empty");
        const auto cal = calibrate_sigma(cfg.phantom, data.k(), cfg.verify.seed, 20, cfg.verify.oracle_n);
        if (cal.sigma == 0) throw NumericalError("sigma calibration is ambiguous");
        cfg.recon.sigma = cal.sigma;
        log("calibrated sigma = " + std::to_string(cal.sigma));
    }
    std::size_t last = 0;
    auto progress = [&](std::size_t done, std::size_t total) {
        const std::size_t pct = 100 * done / total;
        if (pct >= last + 10 || done == total) {
            last = pct;
            log("reconstruct: " + std::to_string(pct) + "% of " + std::to_string(total) + " half-planes");
        }
    };
    const ReconResult res = reconstruct_volume(data, cfg.volume.make(), cfg.recon, progress);
    write_grid(out, res.volume.to_grid());

    Report r;
    r.command = "reconstruct";
    r.config_hash = config_hash(cfg);
    r.details = {{"mode", to_string(cfg.recon.mode)},
                 {"sigma", cfg.recon.sigma},
                 {"azimuths", res.report.azimuths},
                 {"p_extent", res.report.p_extent},
                 {"sinogram_samples", res.report.sinogram_samples},
                 {"out_of_range_samples", res.report.out_of_range_samples},
                 {"excluded_eta_rows", res.report.excluded_eta_rows},
                 {"partial", res.report.partial},
                 {"failures", res.report.failures}};
    if (!cfg.phantom.empty()) {
        const VolumeError e = rel_l2_error(res.volume, cfg.phantom);
        r.details["rel_l2"] = e.rel_l2;
        r.details["linf_rel_peak"] = e.linf_rel_peak;
    }
    r.runtime_seconds = clock.seconds();
    r.timestamp = utc_timestamp();
    write_sidecar(out, r);
    log("wrote " + out + fmt(" (%.1f s)", r.runtime_seconds));
    if (res.report.partial) {
        for (const auto& f : res.report.failures) log("failed: " + f);
        log("volume is partial");
        return kExitNumerical;
    }
    return 0;
}

int cmd_verify(const std::string& config_path, const std::string& out)
{
    const RunConfig cfg = load_config(config_path);
    const Report r = run_identity_suite(cfg, [](const Check& c) {
        log(std::string(c.pass ? "PASS " : "FAIL ") + c.name + (c.note.empty() ? "" : " (" + c.note + ")"));
    });
    write_report(out, r);
    std::cerr << to_text(r);
    log("sigma calibration: sigma = " + r.details.value("sigma", json(0)).dump());
    return r.all_pass() ? 0 : kExitNumerical;
}

int cmd_metrics(const std::string& volume_path, const std::string& config_path, const std::string& out)
{
    const RunConfig cfg = load_config(config_path);
    if (cfg.phantom.empty()) throw ValidationError("metrics needs a phantom in the config");
    const VolumeGrid v = VolumeGrid::from_grid(read_grid(volume_path));
    const VolumeError e = rel_l2_error(v, cfg.phantom);
    Report r;
    r.command = "metrics";
    r.config_hash = config_hash(cfg);
    r.add({"relative L2 error (support box)", e.rel_l2, 0.0, e.rel_l2, 0.2, e.rel_l2 <= 0.2, ""});
    r.add({"Linf error / peak (support box)", e.linf_rel_peak, 0.0, e.linf_rel_peak, 0.3, e.linf_rel_peak <= 0.3, ""});
    r.details = {{"voxels", e.voxels}, {"linf", e.linf}};
    r.timestamp = utc_timestamp();
    std::cerr << to_text(r);
    if (!out.empty()) write_report(out, r);
    return 0;
}

int cmd_slice(const std::string& in, const std::string& axis, std::size_t index, const std::string& out)
{
    const Grid g = read_grid(in);
    g.validate();
    const std::size_t d = g.axis_index(axis);
    if (index >= g.axes[d].count)
        throw ValidationError("index " + std::to_string(index) + " out of range for axis '" + axis + "' (" +
                              std::to_string(g.axes[d].count) + " nodes)");
    std::ofstream os(out);
    if (!os) throw ValidationError("cannot open '" + out + "' for writing");
    os.precision(17);
    for (std::size_t a = 0; a < g.axes.size(); ++a)
        if (a != d) os << g.axes[a].name << ",";
    os << "value\n";
    const auto strides = g.strides();
    std::vector<std::size_t> idx(g.axes.size(), 0);
    idx[d] = index;
    while (true) {
        std::size_t flat = 0;
        for (std::size_t a = 0; a < g.axes.size(); ++a) flat += idx[a] * strides[a];
        for (std::size_t a = 0; a < g.axes.size(); ++a)
            if (a != d) os << g.axes[a].node(idx[a]) << ",";
        os << g.values[flat] << "\n";
        // advance the free indices, last axis fastest
        std::size_t a = g.axes.size();
        while (a-- > 0) {
            if (a == d) continue;
            if (++idx[a] < g.axes[a].count) break;
            idx[a] = 0;
        }
        if (a == static_cast<std::size_t>(-1)) break;
    }
    if (!os) throw ValidationError("write to '" + out + "' failed");
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Weighted conical Radon transform: simulation and reconstruction"};
    app.require_subcommand(1);

    std::string config, out, data, volume, in, axis, mode, sigma;
    std::size_t index = 0;

    auto* sim = app.add_subcommand("simulate", "Phantom to transform data grid");
    sim->add_option("--config", config, "run configuration (JSON)")->required();
    sim->add_option("--out", out, "output grid file")->required();

    auto* rec = app.add_subcommand("reconstruct", "Transform data grid to volume");
    rec->add_option("--data", data, "transform data grid")->required();
    rec->add_option("--config", config, "run configuration (JSON)")->required();
    rec->add_option("--out", out, "output volume grid")->required();
    rec->add_option("--mode", mode, "compositional | fused")->check(CLI::IsMember({"compositional", "fused"}));
    rec->add_option("--sigma", sigma, "1 | 2 | auto")->check(CLI::IsMember({"1", "2", "auto"}));

    auto* ver = app.add_subcommand("verify", "Run the identity suite");
    ver->add_option("--config", config, "run configuration (JSON)")->required();
    ver->add_option("--out", out, "report (JSON)")->required();

    auto* met = app.add_subcommand("metrics", "Error of a volume against the config phantom");
    met->add_option("--volume", volume, "volume grid")->required();
    met->add_option("--config", config, "run configuration (JSON)")->required();
    met->add_option("--out", out, "report (JSON)");

    auto* sl = app.add_subcommand("slice", "Export one grid slice as CSV");
    sl->add_option("--in", in, "grid file")->required();
    sl->add_option("--axis", axis, "axis name to fix")->required();
    sl->add_option("--index", index, "node index along that axis")->required();
    sl->add_option("--out", out, "CSV file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, std::cerr, std::cerr);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*sim) return cmd_simulate(config, out);
        if (*rec) return cmd_reconstruct(data, config, out, mode, sigma);
        if (*ver) return cmd_verify(config, out);
        if (*met) return cmd_metrics(volume, config, out);
        if (*sl) return cmd_slice(in, axis, index, out);
    } catch (const NumericalError& e) {
        log(std::string("numerical failure: ") + e.what());
        return kExitNumerical;
    } catch (const Error& e) {
        log(std::string("error: ") + e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        log(std::string("error: ") + e.what());
        return kExitValidation;
    }
    return 0;
}
