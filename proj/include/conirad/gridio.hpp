#ifndef CONIRAD_GRIDIO_HPP
#define CONIRAD_GRIDIO_HPP

// Binary grid files.
//
//   "CRTG" | u32 version = 1 | u32 kind | u32 k | u32 rank
//   rank x { char name[8] (space padded) | u64 count | f64 min | f64 max | u8 periodic | u8 cell_centered }
//   f64 payload, row-major, first axis slowest
//
// All fields little-endian.

#include "grid.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace conirad {

inline constexpr char kGridMagic[4] = {'C', 'R', 'T', 'G'};
inline constexpr std::uint32_t kGridVersion = 1;
inline constexpr std::size_t kGridPreambleBytes = 20;
inline constexpr std::size_t kAxisRecordBytes = 34;
inline constexpr std::uint32_t kMaxGridRank = 8;

/// Distinct, named failures of read_grid.
enum class GridFileFault { bad_magic, version_mismatch, truncated_header, truncated_payload, invalid_header, io };

inline const char* to_string(GridFileFault f)
{
    switch (f) {
    case GridFileFault::bad_magic: return "bad magic";
    case GridFileFault::version_mismatch: return "version mismatch";
    case GridFileFault::truncated_header: return "truncated header";
    case GridFileFault::truncated_payload: return "truncated payload";
    case GridFileFault::invalid_header: return "invalid header";
    case GridFileFault::io: return "i/o error";
    }
    return "unknown";
}

class GridFileError : public Error {
public:
    GridFileError(GridFileFault fault, const std::string& detail)
        : Error(ErrorKind::format, std::string(to_string(fault)) + ": " + detail), fault_(fault)
    {
    }
    GridFileFault fault() const { return fault_; }

private:
    GridFileFault fault_;
};

inline std::size_t grid_header_bytes(std::size_t rank) { return kGridPreambleBytes + kAxisRecordBytes * rank; }

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::string& out, T v)
{
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(const char* p)
{
    unsigned char b[sizeof(T)];
    std::memcpy(b, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

} // namespace detail

inline std::string encode_grid(const Grid& g)
{
    g.validate();
    std::string out;
    out.reserve(grid_header_bytes(g.axes.size()) + 8 * g.values.size());
    out.append(kGridMagic, 4);
    detail::put_le<std::uint32_t>(out, kGridVersion);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.kind));
    detail::put_le<std::uint32_t>(out, g.k);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.axes.size()));
    for (const auto& a : g.axes) {
        if (a.name.size() > 8) throw ValidationError("axis name '" + a.name + "' longer than 8 bytes");
        std::string name = a.name;
        name.resize(8, ' ');
        out += name;
        detail::put_le<std::uint64_t>(out, a.count);
        detail::put_le<double>(out, a.min);
        detail::put_le<double>(out, a.max);
        out.push_back(static_cast<char>(a.periodic ? 1 : 0));
        out.push_back(static_cast<char>(a.cell_centered ? 1 : 0));
    }
    for (double v : g.values) detail::put_le<double>(out, v);
    return out;
}

inline Grid decode_grid(const std::string& bytes)
{
    using F = GridFileFault;
    if (bytes.size() < 4) throw GridFileError(F::truncated_header, "file shorter than the magic number");
    if (std::memcmp(bytes.data(), kGridMagic, 4) != 0) throw GridFileError(F::bad_magic, "expected \"CRTG\"");
    if (bytes.size() < kGridPreambleBytes) throw GridFileError(F::truncated_header, "incomplete preamble");
    const char* p = bytes.data();
    const auto version = detail::get_le<std::uint32_t>(p + 4);
    if (version != kGridVersion)
        throw GridFileError(F::version_mismatch, "file version " + std::to_string(version) + ", reader version " +
                                                     std::to_string(kGridVersion));
    Grid g;
    const auto kind = detail::get_le<std::uint32_t>(p + 8);
    if (kind > 3) throw GridFileError(F::invalid_header, "unknown grid kind " + std::to_string(kind));
    g.kind = static_cast<GridKind>(kind);
    g.k = detail::get_le<std::uint32_t>(p + 12);
    const auto rank = detail::get_le<std::uint32_t>(p + 16);
    if (rank == 0 || rank > kMaxGridRank) throw GridFileError(F::invalid_header, "rank " + std::to_string(rank));
    if (bytes.size() < grid_header_bytes(rank)) throw GridFileError(F::truncated_header, "incomplete axis records");
    std::size_t expected = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
        const char* a = p + kGridPreambleBytes + kAxisRecordBytes * d;
        Axis ax;
        ax.name.assign(a, 8);
        ax.name.erase(ax.name.find_last_not_of(' ') + 1);
        const auto count = detail::get_le<std::uint64_t>(a + 8);
        ax.count = static_cast<std::size_t>(count);
        ax.min = detail::get_le<double>(a + 16);
        ax.max = detail::get_le<double>(a + 24);
        const auto periodic = static_cast<unsigned char>(a[32]), centered = static_cast<unsigned char>(a[33]);
        if (periodic > 1 || centered > 1) throw GridFileError(F::invalid_header, "axis flags must be 0 or 1");
        ax.periodic = periodic == 1;
        ax.cell_centered = centered == 1;
        try {
            ax.validate();
        } catch (const ValidationError& e) {
            throw GridFileError(F::invalid_header, e.what());
        }
        if (count > (std::uint64_t{1} << 40) || expected > (std::size_t{1} << 40) / std::max<std::size_t>(1, ax.count))
            throw GridFileError(F::invalid_header, "axis counts overflow");
        expected *= ax.count;
        g.axes.push_back(std::move(ax));
    }
    const std::size_t header = grid_header_bytes(rank);
    const std::size_t payload = bytes.size() - header;
    if (payload < expected * 8)
        throw GridFileError(F::truncated_payload, "expected " + std::to_string(expected * 8) + " payload bytes, found " +
                                                      std::to_string(payload));
    if (payload > expected * 8)
        throw GridFileError(F::invalid_header, "payload longer than the axes describe");
    g.values.resize(expected);
    for (std::size_t i = 0; i < expected; ++i) g.values[i] = detail::get_le<double>(p + header + 8 * i);
    return g;
}

inline void write_grid(const std::string& path, const Grid& g)
{
    const std::string bytes = encode_grid(g);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw GridFileError(GridFileFault::io, "cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw GridFileError(GridFileFault::io, "write to '" + path + "' failed");
}

inline Grid read_grid(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GridFileError(GridFileFault::io, "cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_grid(bytes);
}

} // namespace conirad

#endif // CONIRAD_GRIDIO_HPP
