#pragma once

/**
 * @file result_table.hpp
 * @brief Tabular experiment output with CSV (RFC 4180) and JSON writers.
 */

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace molrecon::cli {

inline constexpr const char* kToolName = "molrecon";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

struct Column {
  std::string name;
  std::string unit;  ///< empty for dimensionless or text columns

  std::string header() const { return unit.empty() ? name : name + " [" + unit + "]"; }
};

using Cell = std::variant<std::monostate, double, std::string>;

struct Row {
  std::vector<Cell> cells;
  bool ok = true;
  std::string error;
};

struct ResultTable {
  std::vector<Column> schema;
  std::vector<Row> rows;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  bool any_failed() const {
    for (const auto& r : rows) {
      if (!r.ok) return true;
    }
    return false;
  }

  Row& add_row() {
    rows.emplace_back();
    rows.back().cells.resize(schema.size());
    return rows.back();
  }
};

/// Shortest round-trip text for a double (17 significant digits).
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return std::isnan(*d) ? std::string{} : format_double(*d);
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return {};
}

/// Header row with units, one line per row, CRLF line endings, trailing status column.
inline void write_csv(std::ostream& out, const ResultTable& table) {
  for (const auto& col : table.schema) out << csv_escape(col.header()) << ',';
  out << "status\r\n";
  for (const auto& row : table.rows) {
    for (const auto& cell : row.cells) out << csv_escape(cell_text(cell)) << ',';
    out << csv_escape(row.ok ? "ok" : row.error) << "\r\n";
  }
}

inline nlohmann::ordered_json to_json(const ResultTable& table) {
  nlohmann::ordered_json doc;
  doc["meta"] = table.meta;
  auto& schema = doc["schema"] = nlohmann::ordered_json::array();
  for (const auto& col : table.schema) schema.push_back({{"name", col.name}, {"unit", col.unit}});
  auto& rows = doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& cell : row.cells) {
      if (const auto* d = std::get_if<double>(&cell)) {
        cells.push_back(std::isfinite(*d) ? nlohmann::ordered_json(*d) : nlohmann::ordered_json(nullptr));
      } else if (const auto* s = std::get_if<std::string>(&cell)) {
        cells.push_back(*s);
      } else {
        cells.push_back(nullptr);
      }
    }
    rows.push_back({{"cells", cells}, {"status", row.ok ? "ok" : row.error}});
  }
  return doc;
}

/// 64-bit FNV-1a, used to fingerprint the resolved configuration.
inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace molrecon::cli
