#pragma once

// Geometry-aware measurements over binary segmentation masks, derived
// clinical metrics, and the per-patient measurement table.
//
// Mask container formats (both self-describing):
//   binary: "EVMK" magic, u32 LE version (1), 3x u64 LE dims, 3x f64 LE
//           spacing (mm), voxels bit-packed LSB-first, x fastest.
//   text:   "EVMASK-TEXT 1" line, "dims X Y Z", "spacing SX SY SZ", then
//           product(dims) many '0'/'1' characters, whitespace ignored.

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "evistat/errors.hpp"

namespace evistat::meas {

struct Mask {
  std::array<std::size_t, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm per voxel
  std::vector<bool> voxels;                      // x fastest, then y, then z

  std::size_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + dims[0] * (y + dims[1] * z);
  }

  void validate() const {
    if (voxels.size() != voxel_count())
      throw InvalidMask("mask: voxel storage does not match dims");
    for (double s : spacing)
      if (!(s > 0.0) || !std::isfinite(s)) throw InvalidMask("mask: spacing must be positive");
  }
};

// Voxel count times voxel volume, in millilitres (mm^3 / 1000).
inline double mask_volume(const Mask& mask) {
  mask.validate();
  std::size_t count = 0;
  for (bool v : mask.voxels) count += v ? 1 : 0;
  return static_cast<double>(count) * mask.spacing[0] * mask.spacing[1] * mask.spacing[2] /
         1000.0;
}

inline double mask_mass(const Mask& mask, double density_g_per_ml = 1.05) {
  if (!(density_g_per_ml > 0.0) || !std::isfinite(density_g_per_ml))
    throw DomainError("mass: density must be positive");
  return mask_volume(mask) * density_g_per_ml;
}

// ---------------------------------------------------------------------------
// Mask files

namespace detail {

constexpr char kMagic[4] = {'E', 'V', 'M', 'K'};
constexpr std::uint32_t kVersion = 1;

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}

struct ByteReader {
  const std::string& data;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > data.size()) throw InvalidMask("mask: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace detail

enum class MaskFormat { binary, text };

inline void save_mask(const Mask& mask, const std::filesystem::path& path,
                      MaskFormat format = MaskFormat::binary) {
  mask.validate();
  std::string out;
  if (format == MaskFormat::binary) {
    out.append(detail::kMagic, 4);
    detail::put_u32(out, detail::kVersion);
    for (std::size_t d : mask.dims) detail::put_u64(out, d);
    for (double s : mask.spacing) detail::put_f64(out, s);
    std::uint8_t byte = 0;
    int bit = 0;
    for (bool v : mask.voxels) {
      if (v) byte |= static_cast<std::uint8_t>(1u << bit);
      if (++bit == 8) {
        out.push_back(static_cast<char>(byte));
        byte = 0;
        bit = 0;
      }
    }
    if (bit != 0) out.push_back(static_cast<char>(byte));
  } else {
    std::ostringstream os;
    os << "EVMASK-TEXT 1\n";
    os << "dims " << mask.dims[0] << " " << mask.dims[1] << " " << mask.dims[2] << "\n";
    os << "spacing " << mask.spacing[0] << " " << mask.spacing[1] << " " << mask.spacing[2]
       << "\n";
    std::size_t i = 0;
    for (std::size_t z = 0; z < mask.dims[2]; ++z)
      for (std::size_t y = 0; y < mask.dims[1]; ++y) {
        for (std::size_t x = 0; x < mask.dims[0]; ++x) os << (mask.voxels[i++] ? '1' : '0');
        os << "\n";
      }
    out = os.str();
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << out;
  f.flush();
  if (!f) throw IoError("write failed for " + path.string());
}

inline Mask load_mask(const std::filesystem::path& path) {
  const std::string data = detail::slurp(path);
  Mask mask;
  if (data.size() >= 4 && std::memcmp(data.data(), detail::kMagic, 4) == 0) {
    detail::ByteReader r{data, 4};
    const std::uint32_t version = r.u32();
    if (version != detail::kVersion)
      throw InvalidMask("mask: unsupported version " + std::to_string(version));
    for (auto& d : mask.dims) d = static_cast<std::size_t>(r.u64());
    for (auto& s : mask.spacing) s = r.f64();
    const std::size_t n = mask.voxel_count();
    const std::size_t bytes = (n + 7) / 8;
    r.need(bytes);
    if (r.pos + bytes != data.size()) throw InvalidMask("mask: trailing bytes");
    mask.voxels.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      mask.voxels[i] =
          (static_cast<unsigned char>(data[r.pos + i / 8]) >> (i % 8)) & 1u;
  } else if (data.rfind("EVMASK-TEXT", 0) == 0) {
    std::istringstream in(data);
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (version != 1) throw InvalidMask("mask: unsupported text version");
    std::string key;
    in >> key;
    if (key != "dims") throw InvalidMask("mask: expected dims line");
    for (auto& d : mask.dims) in >> d;
    in >> key;
    if (key != "spacing") throw InvalidMask("mask: expected spacing line");
    for (auto& s : mask.spacing) in >> s;
    if (!in) throw InvalidMask("mask: malformed header");
    const std::size_t n = mask.voxel_count();
    mask.voxels.reserve(n);
    char c;
    while (in >> c) {
      if (c == '0')
        mask.voxels.push_back(false);
      else if (c == '1')
        mask.voxels.push_back(true);
      else
        throw InvalidMask(std::string("mask: unexpected character '") + c + "'");
    }
    if (mask.voxels.size() != n) throw InvalidMask("mask: voxel count does not match dims");
  } else {
    throw InvalidMask("mask: unrecognized file format");
  }
  mask.validate();
  return mask;
}

// ---------------------------------------------------------------------------
// Derived clinical metrics

enum class MetricName {
  volume_ml,
  mass_g,
  ejection_fraction,
  esv_edv_ratio,
  mass_to_volume,
  bsa_indexed_volume,
  subregion_fraction,
};

inline std::string to_string(MetricName m) {
  switch (m) {
    case MetricName::volume_ml: return "volume_ml";
    case MetricName::mass_g: return "mass_g";
    case MetricName::ejection_fraction: return "ejection_fraction";
    case MetricName::esv_edv_ratio: return "esv_edv_ratio";
    case MetricName::mass_to_volume: return "mass_to_volume";
    case MetricName::bsa_indexed_volume: return "bsa_indexed_volume";
    case MetricName::subregion_fraction: return "subregion_fraction";
  }
  return "volume_ml";
}

inline MetricName metric_name_from_string(const std::string& s) {
  for (MetricName m : {MetricName::volume_ml, MetricName::mass_g, MetricName::ejection_fraction,
                       MetricName::esv_edv_ratio, MetricName::mass_to_volume,
                       MetricName::bsa_indexed_volume, MetricName::subregion_fraction}) {
    if (s == to_string(m)) return m;
  }
  throw SchemaError("metric: unknown metric name '" + s + "'");
}

struct MetricSpec {
  MetricName name = MetricName::volume_ml;
  std::map<std::string, double> parameters;  // e.g. density_g_per_ml, height_cm
};

namespace detail {

struct MetricInputs {
  const std::map<std::string, double>& inputs;
  const std::map<std::string, double>& parameters;

  double get(const std::string& key) const {
    if (const auto it = inputs.find(key); it != inputs.end()) return checked(it->second, key);
    if (const auto it = parameters.find(key); it != parameters.end())
      return checked(it->second, key);
    throw MissingInput("metric: missing input '" + key + "'");
  }

  std::optional<double> get_opt(const std::string& key) const {
    if (const auto it = inputs.find(key); it != inputs.end()) return checked(it->second, key);
    if (const auto it = parameters.find(key); it != parameters.end())
      return checked(it->second, key);
    return std::nullopt;
  }

  static double checked(double v, const std::string& key) {
    if (!std::isfinite(v)) throw DomainError("metric: non-finite input '" + key + "'");
    return v;
  }
};

// QC gate on ventricular volumes: both finite (checked on read), EDV > 0,
// 0 <= ESV <= EDV.  Violations raise typed errors rather than producing an
// ejection fraction outside [0, 100].
inline void check_ventricular(double edv, double esv) {
  if (edv == 0.0) throw DivisionByZero("metric: edv is zero");
  if (edv < 0.0) throw DomainError("metric: edv must be positive");
  if (esv < 0.0) throw DomainError("metric: esv must be nonnegative");
  if (esv > edv) throw DomainError("metric: esv exceeds edv");
}

}  // namespace detail

inline double derived_metric(const MetricSpec& spec, const std::map<std::string, double>& inputs) {
  const detail::MetricInputs in{inputs, spec.parameters};
  switch (spec.name) {
    case MetricName::volume_ml: return in.get("volume_ml");
    case MetricName::mass_g: {
      const double density = in.get_opt("density_g_per_ml").value_or(1.05);
      if (!(density > 0.0)) throw DomainError("metric: density must be positive");
      return in.get("volume_ml") * density;
    }
    case MetricName::ejection_fraction: {
      const double edv = in.get("edv");
      const double esv = in.get("esv");
      detail::check_ventricular(edv, esv);
      return (edv - esv) / edv * 100.0;
    }
    case MetricName::esv_edv_ratio: {
      const double edv = in.get("edv");
      const double esv = in.get("esv");
      detail::check_ventricular(edv, esv);
      return esv / edv;
    }
    case MetricName::mass_to_volume: {
      const double edv = in.get("edv");
      const double mass = in.get("mass_g");
      if (edv == 0.0) throw DivisionByZero("metric: edv is zero");
      if (edv < 0.0) throw DomainError("metric: edv must be positive");
      if (mass < 0.0) throw DomainError("metric: mass must be nonnegative");
      return mass / edv;
    }
    case MetricName::bsa_indexed_volume: {
      const double height = in.get("height_cm");
      const double weight = in.get("weight_kg");
      if (!(height > 0.0) || !(weight > 0.0))
        throw DomainError("metric: height and weight must be positive");
      const double bsa = std::sqrt(height * weight / 3600.0);
      if (bsa == 0.0) throw DivisionByZero("metric: bsa is zero");
      return in.get("volume_ml") / bsa;
    }
    case MetricName::subregion_fraction: {
      const double whole = in.get("whole_volume");
      const double sub = in.get("subregion_volume");
      if (whole == 0.0) throw DivisionByZero("metric: whole volume is zero");
      if (whole < 0.0) throw DomainError("metric: whole volume must be positive");
      if (sub < 0.0) throw DomainError("metric: subregion volume must be nonnegative");
      if (sub > whole) throw DomainError("metric: subregion exceeds the whole");
      return sub / whole;
    }
  }
  throw DomainError("metric: unknown metric");
}

// Body surface area (Mosteller), m^2.
inline double body_surface_area(double height_cm, double weight_kg) {
  if (!(height_cm > 0.0) || !(weight_kg > 0.0))
    throw DomainError("bsa: height and weight must be positive");
  return std::sqrt(height_cm * weight_kg / 3600.0);
}

// ---------------------------------------------------------------------------
// Per-patient measurement table
//
// Delimited text: header `patient_id,group,<columns...>`, one row per
// patient.  Cells that parse fully as numbers are numeric; empty cells are
// missing; everything else is a string (categorical metadata).

using Cell = std::variant<std::monostate, double, std::string>;

struct MeasurementTable {
  std::vector<std::string> columns;  // everything after patient_id, group
  struct Row {
    std::string patient_id;
    std::string group;
    std::vector<Cell> values;
  };
  std::vector<Row> rows;

  std::optional<std::size_t> column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    return std::nullopt;
  }

  // A column is numeric when every present cell is a number.
  bool is_numeric_column(std::size_t idx) const {
    bool any = false;
    for (const auto& row : rows) {
      const Cell& c = row.values[idx];
      if (std::holds_alternative<std::string>(c)) return false;
      if (std::holds_alternative<double>(c)) any = true;
    }
    return any;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(trim(field));
  return out;
}

inline Cell parse_cell(const std::string& text) {
  if (text.empty()) return std::monostate{};
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() + text.size() && std::isfinite(v)) return v;
  return text;
}

}  // namespace detail

inline MeasurementTable load_measurement_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.filename().string() + ": empty table");
  auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header[0] != "patient_id" || header[1] != "group")
    throw SchemaError(path.filename().string() + ": header must start patient_id,group");
  MeasurementTable table;
  table.columns.assign(header.begin() + 2, header.end());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw SchemaError(path.filename().string() + ": row " + std::to_string(lineno) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(header.size()));
    MeasurementTable::Row row;
    row.patient_id = fields[0];
    row.group = fields[1];
    for (std::size_t i = 2; i < fields.size(); ++i) row.values.push_back(detail::parse_cell(fields[i]));
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline void save_measurement_table(const MeasurementTable& table,
                                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const auto check = [](const std::string& s) {
    if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos)
      throw DomainError("table: field contains a delimiter: '" + s + "'");
    return s;
  };
  out << "patient_id,group";
  for (const auto& c : table.columns) out << "," << check(c);
  out << "\n";
  std::ostringstream num;
  num.precision(12);
  for (const auto& row : table.rows) {
    if (row.values.size() != table.columns.size())
      throw LengthMismatch("table: row width differs from header");
    out << check(row.patient_id) << "," << check(row.group);
    for (const auto& cell : row.values) {
      out << ",";
      if (std::holds_alternative<double>(cell)) {
        num.str("");
        num << std::get<double>(cell);
        out << num.str();
      } else if (std::holds_alternative<std::string>(cell)) {
        out << check(std::get<std::string>(cell));
      }
    }
    out << "\n";
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace evistat::meas
