#include "conirad/config.hpp"
#include "conirad/gridio.hpp"
#include "conirad/report.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace conirad;

namespace {

std::optional<GridFileFault> fault_of(const std::string& bytes)
{
    try {
        decode_grid(bytes);
    } catch (const GridFileError& e) {
        return e.fault();
    }
    return std::nullopt;
}

TransformGrid sample_grid()
{
    TransformGrid t(Axis::centered("z", 5, -1.0, 1.5), 6, 4, 2);
    double v = -3.0;
    for (double& x : t.values()) x = (v += 0.37);
    t.values()[2] = -0.0;
    t.values()[7] = std::numeric_limits<double>::denorm_min();
    return t;
}

const char* kMinimalConfig = R"({
  "phantom": {"bumps": [{"center": [0.8, 0.0, 0.3], "radius": 0.5, "amplitude": 1.0}]},
  "data_grid": {"z_min": -4, "z_max": 4, "z_count": 16, "beta_count": 8, "psi_count": 8, "k": 1}
})";

} // namespace

TEST(GridIo, BitExactRoundTrip)
{
    const TransformGrid t = sample_grid();
    const std::string bytes = encode_grid(t.to_grid());
    EXPECT_EQ(bytes.size(), grid_header_bytes(3) + t.size() * sizeof(double));
    EXPECT_EQ(bytes.substr(0, 4), "CRTG");
    const Grid back = decode_grid(bytes);
    EXPECT_EQ(back.kind, GridKind::transform);
    EXPECT_EQ(back.k, 2u);
    EXPECT_EQ(back.axes, t.to_grid().axes);
    EXPECT_EQ(std::memcmp(back.values.data(), t.values().data(), t.size() * sizeof(double)), 0);
    EXPECT_TRUE(std::signbit(back.values[2]));
    EXPECT_EQ(encode_grid(back), bytes);
}

TEST(GridIo, FileRoundTrip)
{
    const auto path = (std::filesystem::temp_directory_path() / "conirad_gridio_test.crtg").string();
    const TransformGrid t = sample_grid();
    write_grid(path, t.to_grid());
    const TransformGrid back = TransformGrid::from_grid(read_grid(path));
    EXPECT_EQ(std::memcmp(back.values().data(), t.values().data(), t.size() * sizeof(double)), 0);
    std::filesystem::remove(path);
    try {
        read_grid(path);
        FAIL() << "expected GridFileError";
    } catch (const GridFileError& e) {
        EXPECT_EQ(e.fault(), GridFileFault::io);
    }
}

TEST(GridIo, NamedCorruptions)
{
    const std::string bytes = encode_grid(sample_grid().to_grid());
    std::string magic = bytes;
    magic[1] = 'x';
    EXPECT_EQ(fault_of(magic), GridFileFault::bad_magic);
    std::string version = bytes;
    version[4] = 9;
    EXPECT_EQ(fault_of(version), GridFileFault::version_mismatch);
    EXPECT_EQ(fault_of(bytes.substr(0, 10)), GridFileFault::truncated_header);
    EXPECT_EQ(fault_of(bytes.substr(0, grid_header_bytes(3) - 1)), GridFileFault::truncated_header);
    EXPECT_EQ(fault_of(bytes.substr(0, bytes.size() - 1)), GridFileFault::truncated_payload);
    EXPECT_EQ(fault_of(bytes + "extra"), GridFileFault::invalid_header);
    EXPECT_EQ(fault_of(""), GridFileFault::truncated_header);
}

TEST(GridIo, KindMismatchOnLoad)
{
    const Grid g = decode_grid(encode_grid(sample_grid().to_grid()));
    EXPECT_THROW(VolumeGrid::from_grid(g), ValidationError);
    Grid bad = g;
    bad.values[0] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(TransformGrid::from_grid(bad), ValidationError);
}

TEST(Config, ParsesAndDefaults)
{
    const RunConfig c = parse_config(json::parse(kMinimalConfig));
    EXPECT_EQ(c.phantom.bumps().size(), 1u);
    EXPECT_EQ(c.data_grid.z.count, 16u);
    EXPECT_EQ(c.data_grid.beta_count, 8u);
    EXPECT_EQ(c.recon.sigma, 1);
    EXPECT_EQ(c.recon.mode, ReconMode::compositional);
    EXPECT_FALSE(c.sigma_auto);
}

TEST(Config, RejectsUnknownKeysAndBadValues)
{
    auto j = json::parse(kMinimalConfig);
    j["data_grid"]["z_cnt"] = 3;
    EXPECT_THROW(parse_config(j), ValidationError);
    j = json::parse(kMinimalConfig);
    j["reconstruction"] = {{"sigma", 3}};
    EXPECT_THROW(parse_config(j), ValidationError);
    j = json::parse(kMinimalConfig);
    j["reconstruction"] = {{"mode", "magic"}};
    EXPECT_THROW(parse_config(j), ValidationError);
    j = json::parse(kMinimalConfig);
    j["phantom"]["bumps"][0]["radius"] = -1.0;
    EXPECT_THROW(parse_config(j), ValidationError);
    j = json::parse(kMinimalConfig);
    j["data_grid"]["k"] = "one";
    EXPECT_THROW(parse_config(j), ValidationError);
    EXPECT_THROW(parse_config(json::array()), ValidationError);
}

TEST(Config, SigmaAuto)
{
    auto j = json::parse(kMinimalConfig);
    j["reconstruction"] = {{"sigma", "auto"}};
    EXPECT_TRUE(parse_config(j).sigma_auto);
}

TEST(Config, HashIsStableAndSensitive)
{
    const RunConfig a = parse_config(json::parse(kMinimalConfig));
    const RunConfig b = parse_config(to_json(a));
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    auto j = json::parse(kMinimalConfig);
    j["data_grid"]["z_count"] = 17;
    EXPECT_NE(config_hash(parse_config(j)), config_hash(a));
}

TEST(Config, LoadFromFile)
{
    const auto path = (std::filesystem::temp_directory_path() / "conirad_config_test.json").string();
    {
        std::ofstream os(path);
        os << "{ not json";
    }
    EXPECT_THROW(load_config(path), ValidationError);
    {
        std::ofstream os(path);
        os << kMinimalConfig;
    }
    EXPECT_EQ(load_config(path).data_grid.z.count, 16u);
    std::filesystem::remove(path);
    EXPECT_THROW(load_config(path), ValidationError);
}

TEST(Report, JsonRoundTripKeepsTimestampApart)
{
    Report r;
    r.command = "verify";
    r.config_hash = "0123456789abcdef";
    r.add({"a", 1.0, 1.0, 0.0, 1e-3, true, "note"});
    r.add({"b", 2.0, 1.0, 1.0, 1e-3, false, ""});
    r.details = {{"sigma", 1}};
    r.timestamp = "2026-01-01T00:00:00Z";
    const json j = to_json(r);
    EXPECT_FALSE(j["all_pass"].get<bool>());
    EXPECT_EQ(j["volatile"]["timestamp"], r.timestamp);
    EXPECT_FALSE(j.contains("timestamp"));
    const Report back = report_from_json(j);
    EXPECT_EQ(back.checks.size(), 2u);
    EXPECT_EQ(back.checks[0].note, "note");
    EXPECT_EQ(back.timestamp, r.timestamp);
    const std::string text = to_text(r);
    EXPECT_NE(text.find("PASS"), std::string::npos);
    EXPECT_NE(text.find("FAIL"), std::string::npos);
}

TEST(Report, RelL2ErrorOnSupportBox)
{
    const Phantom f({Bump{{0, 0, 0}, 0.5, 1.0}});
    VolumeGrid v(Axis::centered("x", 8, -1, 1), Axis::centered("y", 8, -1, 1), Axis::centered("z", 8, -1, 1));
    for (std::size_t ix = 0; ix < 8; ++ix)
        for (std::size_t iy = 0; iy < 8; ++iy)
            for (std::size_t iz = 0; iz < 8; ++iz) v.at(ix, iy, iz) = 1.1 * f(v.point(ix, iy, iz));
    const VolumeError e = rel_l2_error(v, f);
    EXPECT_NEAR(e.rel_l2, 0.1, 1e-12);
    EXPECT_EQ(e.voxels, 64u); // 4 nodes per axis inside [-0.5, 0.5]
    EXPECT_NEAR(e.linf_rel_peak, 0.1, 1e-12);
    EXPECT_THROW(rel_l2_error(v, Phantom({Bump{{5, 5, 5}, 0.1, 1.0}})), ValidationError);
}

TEST(Report, RelativeError)
{
    EXPECT_NEAR(relative_error(1.1, 1.0), 0.1, 1e-15);
    EXPECT_NEAR(relative_error(-2.0, -1.0), 1.0, 0.0);
    EXPECT_EQ(relative_error(0.5, 0.0), 0.5);
}
