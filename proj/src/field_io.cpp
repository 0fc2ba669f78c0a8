#include "tat/field_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace tat {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::vector<unsigned char> to_le_bytes(const double* data, std::size_t n) {
    std::vector<unsigned char> bytes(n * sizeof(double));
    std::memcpy(bytes.data(), data, bytes.size());
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t k = 0; k < n; ++k) std::reverse(bytes.begin() + 8 * k, bytes.begin() + 8 * k + 8);
    }
    return bytes;
}

void from_le_bytes(std::vector<unsigned char> bytes, double* out) {
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t k = 0; k < bytes.size() / 8; ++k)
            std::reverse(bytes.begin() + 8 * k, bytes.begin() + 8 * k + 8);
    }
    std::memcpy(out, bytes.data(), bytes.size());
}

void write_bytes(const fs::path& file, const std::vector<unsigned char>& bytes) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

std::vector<unsigned char> read_bytes(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_json(const fs::path& file, const json& j) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << j.dump(2) << '\n';
}

json read_sidecar(const fs::path& stem) {
    const fs::path file = with_suffix(stem, ".json");
    std::ifstream in(file);
    if (!in) throw std::runtime_error("missing metadata file " + file.string());
    json j = json::parse(in);
    if (j.value("format", "") != "tat-field") throw std::runtime_error(file.string() + " is not a field sidecar");
    if (j.value("format_version", -1) != kFormatVersion)
        throw std::runtime_error(file.string() + ": format_version " + j.value("format_version", json()).dump() +
                                 " does not match " + std::to_string(kFormatVersion));
    return j;
}

std::vector<unsigned char> read_checked(const fs::path& stem, const json& sidecar, std::size_t count) {
    auto bytes = read_bytes(with_suffix(stem, ".bin"));
    if (bytes.size() != count * sizeof(double))
        throw std::runtime_error(stem.string() + ".bin has " + std::to_string(bytes.size()) + " bytes, expected " +
                                 std::to_string(count * sizeof(double)));
    if (sha256_hex(bytes) != sidecar.at("sha256").get<std::string>())
        throw std::runtime_error(stem.string() + ".bin fails its checksum");
    return bytes;
}

}  // namespace

std::string sha256_hex(std::span<const unsigned char> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    std::ostringstream hex;
    for (unsigned k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
    return hex.str();
}

std::string sha256_file(const fs::path& file) { return sha256_hex(read_bytes(file)); }

void write_field(const fs::path& stem, const GridSpec& grid, const Field& values, const std::string& kind,
                 const json& meta) {
    if (values.rows() != grid.nx() || values.cols() != grid.ny())
        throw std::invalid_argument("field does not match its grid");
    // Column-major (i fastest) storage already is x-fastest row-major order.
    const auto bytes = to_le_bytes(values.data(), std::size_t(values.size()));
    write_bytes(with_suffix(stem, ".bin"), bytes);
    json j = {{"format", "tat-field"},
              {"format_version", kFormatVersion},
              {"kind", kind},
              {"layout", "float64 little-endian, row-major, x1 fastest"},
              {"shape", {grid.ny(), grid.nx()}},
              {"grid", to_json(grid)},
              {"sha256", sha256_hex(bytes)},
              {"meta", meta}};
    write_json(with_suffix(stem, ".json"), j);
}

FieldFile read_field(const fs::path& stem) {
    const json j = read_sidecar(stem);
    FieldFile f;
    f.grid = grid_from_json(j.at("grid"));
    f.kind = j.at("kind").get<std::string>();
    f.meta = j.value("meta", json::object());
    f.values = f.grid.make_array<double>();
    from_le_bytes(read_checked(stem, j, std::size_t(f.values.size())), f.values.data());
    return f;
}

void write_matrix(const fs::path& stem, const Eigen::MatrixXd& values, const std::string& kind, const json& meta) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = values;
    const auto bytes = to_le_bytes(rm.data(), std::size_t(rm.size()));
    write_bytes(with_suffix(stem, ".bin"), bytes);
    json j = {{"format", "tat-field"},
              {"format_version", kFormatVersion},
              {"kind", kind},
              {"layout", "float64 little-endian, row-major"},
              {"shape", {values.rows(), values.cols()}},
              {"sha256", sha256_hex(bytes)},
              {"meta", meta}};
    write_json(with_suffix(stem, ".json"), j);
}

Eigen::MatrixXd read_matrix(const fs::path& stem, json* metaOut, std::string* kindOut) {
    const json j = read_sidecar(stem);
    const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
    if (shape.size() != 2) throw std::runtime_error(stem.string() + ": matrix shape must have two entries");
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(shape[0], shape[1]);
    from_le_bytes(read_checked(stem, j, std::size_t(rm.size())), rm.data());
    if (metaOut) *metaOut = j.value("meta", json::object());
    if (kindOut) *kindOut = j.at("kind").get<std::string>();
    return rm;
}

json to_json(const GridSpec& grid) {
    return {{"origin", {grid.origin.x(), grid.origin.y()}},
            {"spacing", {grid.spacing.x(), grid.spacing.y()}},
            {"dims", {grid.dims.x(), grid.dims.y()}},
            {"dimension", GridSpec::dimension}};
}

GridSpec grid_from_json(const json& j) {
    GridSpec g;
    const auto o = j.at("origin").get<std::vector<double>>();
    const auto s = j.at("spacing").get<std::vector<double>>();
    const auto d = j.at("dims").get<std::vector<int>>();
    if (o.size() != 2 || s.size() != 2 || d.size() != 2)
        throw std::invalid_argument("grid origin, spacing and dims need two entries each");
    if (j.contains("dimension") && j.at("dimension").get<int>() != GridSpec::dimension)
        throw std::invalid_argument("only dimension 2 grids are supported");
    g.origin = Point(o[0], o[1]);
    g.spacing = Eigen::Vector2d(s[0], s[1]);
    g.dims = Index2(d[0], d[1]);
    g.validate();
    return g;
}

json to_json(const Shape& shape) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Disk>) {
                return {{"shape", "disk"}, {"center", {s.center.x(), s.center.y()}}, {"radius", s.radius}};
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                return {{"shape", "ellipse"}, {"center", {s.center.x(), s.center.y()}}, {"semi_axes", {s.a, s.b}}};
            } else {
                json v = json::array();
                for (const Point& p : s.vertices) v.push_back({p.x(), p.y()});
                return {{"shape", "polygon"}, {"vertices", v}, {"corner_radius", s.cornerRadius}};
            }
        },
        shape);
}

Shape shape_from_json(const json& j) {
    const std::string kind = j.at("shape").get<std::string>();
    auto point = [](const json& p) {
        const auto v = p.get<std::vector<double>>();
        if (v.size() != 2) throw std::invalid_argument("points need two coordinates");
        return Point(v[0], v[1]);
    };
    if (kind == "disk") return Disk{point(j.at("center")), j.at("radius").get<double>()};
    if (kind == "ellipse") {
        const auto ab = j.at("semi_axes").get<std::vector<double>>();
        if (ab.size() != 2) throw std::invalid_argument("ellipse semi_axes need two entries");
        return Ellipse{point(j.at("center")), ab[0], ab[1]};
    }
    if (kind == "polygon") {
        RoundedPolygon poly;
        for (const json& v : j.at("vertices")) poly.vertices.push_back(point(v));
        poly.cornerRadius = j.at("corner_radius").get<double>();
        return poly;
    }
    throw std::invalid_argument("unknown region shape '" + kind + "'");
}

json to_json(const std::vector<Arc>& arcs) {
    json out = json::array();
    for (const Arc& a : arcs) out.push_back({a.lo, a.hi});
    return out;
}

std::vector<Arc> arcs_from_json(const json& j) {
    std::vector<Arc> arcs;
    for (const json& a : j) {
        const auto v = a.get<std::vector<double>>();
        if (v.size() != 2) throw std::invalid_argument("patch arcs are [lo, hi] pairs");
        arcs.push_back({v[0], v[1]});
    }
    return arcs;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace tat
