#ifndef CSIDECOMP_CSI_IO_HPP
#define CSIDECOMP_CSI_IO_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csidecomp/csi.hpp"

namespace csid {

// Binary CSI layout, all little-endian:
//   "CSI1" | u32 m | u32 n | u8 direction | f64 snr_db (NaN = absent)
//   | m*n entries, column-major, each f64 re then f64 im
inline constexpr std::array<char, 4> kCsiMagic{'C', 'S', 'I', '1'};
inline constexpr std::size_t kCsiHeaderBytes = 4 + 4 + 4 + 1 + 8;
// 2^32 entries (64 GiB of payload) is far beyond anything this tool handles.
inline constexpr std::uint64_t kMaxCsiEntries = std::uint64_t{1} << 32;

namespace io_detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
    }
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xffu));
    }
}

inline std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
        v = (v << 8) | p[i];
    }
    return v;
}

inline double get_f64(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) {
        bits = (bits << 8) | p[i];
    }
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

inline std::vector<unsigned char> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_all(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorKind::Io, "short write to '" + path + "'");
}

} // namespace io_detail

inline std::vector<unsigned char> encode_csi(const CsiMatrix& csi) {
    require(csi.m() <= std::numeric_limits<std::uint32_t>::max() && csi.n() <= std::numeric_limits<std::uint32_t>::max(),
            ErrorKind::DimensionOverflow, "matrix dimensions do not fit the u32 header fields");
    std::vector<unsigned char> out;
    out.reserve(kCsiHeaderBytes + 16 * csi.m() * csi.n());
    out.insert(out.end(), kCsiMagic.begin(), kCsiMagic.end());
    io_detail::put_u32(out, static_cast<std::uint32_t>(csi.m()));
    io_detail::put_u32(out, static_cast<std::uint32_t>(csi.n()));
    out.push_back(static_cast<unsigned char>(csi.direction()));
    io_detail::put_f64(out, csi.snr_db().value_or(std::numeric_limits<double>::quiet_NaN()));
    for (std::size_t j = 0; j < csi.n(); ++j) {
        for (std::size_t i = 0; i < csi.m(); ++i) {
            io_detail::put_f64(out, csi(i, j).real());
            io_detail::put_f64(out, csi(i, j).imag());
        }
    }
    return out;
}

inline CsiMatrix decode_csi(const std::vector<unsigned char>& bytes) {
    require(bytes.size() >= kCsiHeaderBytes, ErrorKind::TruncatedHeader,
            "need " + std::to_string(kCsiHeaderBytes) + " header bytes, have " + std::to_string(bytes.size()));
    require(std::equal(kCsiMagic.begin(), kCsiMagic.end(), bytes.begin()), ErrorKind::BadMagic,
            "expected 'CSI1' file signature");
    const std::uint32_t m = io_detail::get_u32(&bytes[4]);
    const std::uint32_t n = io_detail::get_u32(&bytes[8]);
    const unsigned char direction = bytes[12];
    const double snr = io_detail::get_f64(&bytes[13]);

    require(m >= 1 && n >= 1, ErrorKind::DimensionOverflow, "zero dimension in header");
    const std::uint64_t entries = std::uint64_t{m} * std::uint64_t{n};
    require(entries <= kMaxCsiEntries, ErrorKind::DimensionOverflow,
            std::to_string(m) + " x " + std::to_string(n) + " exceeds the supported entry count");
    require(direction <= 1, ErrorKind::Parse, "direction byte must be 0 or 1");
    const std::uint64_t payload = entries * 16;
    require(bytes.size() - kCsiHeaderBytes >= payload, ErrorKind::TruncatedPayload,
            "expected " + std::to_string(payload) + " payload bytes, have " +
                std::to_string(bytes.size() - kCsiHeaderBytes));

    Eigen::MatrixXcd data(m, n);
    const unsigned char* p = bytes.data() + kCsiHeaderBytes;
    for (std::uint32_t j = 0; j < n; ++j) {
        for (std::uint32_t i = 0; i < m; ++i) {
            data(i, j) = Complex(io_detail::get_f64(p), io_detail::get_f64(p + 8));
            p += 16;
        }
    }
    std::optional<double> snr_db;
    if (!std::isnan(snr)) {
        snr_db = snr;
    }
    return CsiMatrix(std::move(data), static_cast<Direction>(direction), snr_db);
}

inline void write_csi_file(const CsiMatrix& csi, const std::string& path) {
    io_detail::write_all(path, encode_csi(csi));
}

inline CsiMatrix read_csi_file(const std::string& path) { return decode_csi(io_detail::read_all(path)); }

/// CSV interchange: header re_1,im_1,...,re_N,im_N and one row per snapshot.
inline CsiMatrix read_csi_csv(std::istream& in, Direction direction = Direction::Uplink,
                              std::optional<double> snr_db = std::nullopt) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::TruncatedHeader, "CSV has no header row");
    std::size_t columns = 0;
    {
        std::stringstream header(line);
        std::string field;
        while (std::getline(header, field, ',')) {
            while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) {
                field.pop_back();
            }
            const std::string expected =
                (columns % 2 == 0 ? "re_" : "im_") + std::to_string(columns / 2 + 1);
            require(field == expected, ErrorKind::Parse, "CSV header field '" + field + "', expected '" + expected + "'");
            ++columns;
        }
    }
    require(columns >= 2 && columns % 2 == 0, ErrorKind::Parse, "CSV header needs re/im column pairs");

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        std::stringstream row(line);
        std::string field;
        std::vector<double> values;
        values.reserve(columns);
        while (std::getline(row, field, ',')) {
            while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) {
                field.pop_back();
            }
            std::size_t used = 0;
            try {
                values.push_back(std::stod(field, &used));
            } catch (const std::exception&) {
                used = 0;
            }
            require(used > 0 && used == field.size(), ErrorKind::Parse,
                    "line " + std::to_string(line_no) + ": '" + field + "' is not a number");
        }
        require(values.size() == columns, ErrorKind::Parse,
                "line " + std::to_string(line_no) + " has " + std::to_string(values.size()) + " fields");
        rows.push_back(std::move(values));
    }
    require(!rows.empty(), ErrorKind::TruncatedPayload, "CSV has no data rows");

    Eigen::MatrixXcd data(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns / 2));
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t j = 0; j < columns / 2; ++j) {
            data(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
                Complex(rows[t][2 * j], rows[t][2 * j + 1]);
        }
    }
    return CsiMatrix(std::move(data), direction, snr_db);
}

inline CsiMatrix read_csi_csv_file(const std::string& path, Direction direction = Direction::Uplink,
                                   std::optional<double> snr_db = std::nullopt) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
    return read_csi_csv(in, direction, snr_db);
}

inline void write_csi_csv(const CsiMatrix& csi, std::ostream& out) {
    for (std::size_t j = 0; j < csi.n(); ++j) {
        out << (j ? "," : "") << "re_" << j + 1 << ",im_" << j + 1;
    }
    out << '\n' << std::setprecision(17);
    for (std::size_t t = 0; t < csi.m(); ++t) {
        for (std::size_t j = 0; j < csi.n(); ++j) {
            out << (j ? "," : "") << csi(t, j).real() << ',' << csi(t, j).imag();
        }
        out << '\n';
    }
}

inline nlohmann::json geometry_to_json(const NodeGeometry& geom) {
    nlohmann::json positions = nlohmann::json::array();
    for (const auto& p : geom.positions()) {
        positions.push_back({p.x(), p.y(), p.z()});
    }
    return {{"nodes", geom.size()}, {"positions", positions}};
}

inline NodeGeometry geometry_from_json(const nlohmann::json& j) {
    require(j.contains("positions") && j.at("positions").is_array(), ErrorKind::Parse,
            "geometry JSON needs a 'positions' array");
    std::vector<Eigen::Vector3d> positions;
    for (const auto& p : j.at("positions")) {
        require(p.is_array() && (p.size() == 2 || p.size() == 3), ErrorKind::Parse,
                "each position must have 2 or 3 coordinates");
        positions.emplace_back(p[0].get<double>(), p[1].get<double>(), p.size() == 3 ? p[2].get<double>() : 0.0);
    }
    return NodeGeometry(std::move(positions));
}

inline void write_geometry_file(const NodeGeometry& geom, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path + "' for writing");
    out << geometry_to_json(geom).dump(2) << '\n';
}

inline NodeGeometry read_geometry_file(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, "geometry file '" + path + "': " + e.what());
    }
    return geometry_from_json(j);
}

} // namespace csid

#endif
