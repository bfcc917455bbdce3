#pragma once

// Deterministic artifact output: RFC 4180 CSV, key-sorted JSON and
// content-addressed manifests.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fourns {

/// Shortest text that round-trips a double ("%.17g" fallback), "inf"/"nan" spelled out.
std::string format_number(double x);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> fields);
  std::size_t rows() const { return rows_.size(); }
  /// CRLF line endings, as RFC 4180 prescribes.
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Two-space indented JSON with sorted keys and a trailing newline.
std::string json_text(const nlohmann::json& value);

/// Hex SHA-1 of "blob <size>\0<content>", as git hash-object computes it.
std::string git_blob_sha1(std::string_view content);

/// Writes through a temporary file and renames; throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace fourns
