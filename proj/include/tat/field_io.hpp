#ifndef TAT_FIELD_IO_HPP
#define TAT_FIELD_IO_HPP

#include <filesystem>
#include <span>
#include <string>

#include "json.hpp"

#include "tat/patch.hpp"
#include "tat/speed.hpp"

namespace tat {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

// Field files: <stem>.bin holds little-endian float64 values, row-major with
// x1 varying fastest (one row per x2 node); <stem>.json is the sidecar with
// the grid, value kind, SHA-256 of the .bin bytes and free-form metadata.

struct FieldFile {
    GridSpec grid;
    std::string kind;
    Field values;
    json meta;
};

void write_field(const fs::path& stem, const GridSpec& grid, const Field& values, const std::string& kind,
                 const json& meta = json::object());

/// Throws std::runtime_error on a missing file, checksum mismatch or
/// format_version mismatch.
FieldFile read_field(const fs::path& stem);

/// Raw matrix variant of the same format (rows x cols, row-major).
void write_matrix(const fs::path& stem, const Eigen::MatrixXd& values, const std::string& kind,
                  const json& meta = json::object());
Eigen::MatrixXd read_matrix(const fs::path& stem, json* metaOut = nullptr, std::string* kindOut = nullptr);

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_file(const fs::path& file);

json to_json(const GridSpec& grid);
GridSpec grid_from_json(const json& j);
json to_json(const Shape& shape);
Shape shape_from_json(const json& j);
json to_json(const std::vector<Arc>& arcs);
std::vector<Arc> arcs_from_json(const json& j);

/// JSON cannot carry infinities; they become null.
json finite_or_null(double v);

inline fs::path with_suffix(const fs::path& stem, const char* suffix) {
    fs::path p = stem;
    p += suffix;
    return p;
}

}  // namespace tat

#endif  // TAT_FIELD_IO_HPP
