#pragma once

// Artifact emission: CSV tables, two-column plot data, the JSON manifest and
// the human-readable summary. All numbers are printed as shortest round-trip
// decimals with '.' separators and LF line endings, so identical values give
// identical bytes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "exfact/config.hpp"
#include "exfact/error.hpp"

namespace exfact {

class IoError : public Error {
 public:
  using Error::Error;
};

std::string format_number(double v);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
};

/// RFC 4180 quoting: cells with ',', '"', CR or LF are quoted, quotes doubled.
std::string to_csv(const Table& t);

struct FileRecord {
  std::string path;    // relative to the output directory
  std::string sha256;  // lowercase hex
  std::uintmax_t bytes = 0;
};

struct Headline {
  std::string key;
  nlohmann::ordered_json value;
  std::string provenance;  // where the tolerance or reference behind the value comes from
};

struct RunManifest {
  std::string software = "exfactlab";
  std::string version;
  ExperimentKind kind = ExperimentKind::solve;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<Headline> headline;
  std::vector<FileRecord> files;
  std::vector<std::pair<std::string, double>> timings;  // seconds; written to timings.json, not the manifest
  int exit_code = 0;
  std::string status = "ok";

  void add(const std::string& key, nlohmann::ordered_json value, std::string provenance = {});
  const Headline* find(const std::string& key) const;
};

std::string sha256_hex(const std::string& bytes);

/// Writes `content` to dir/name and records its digest in the manifest.
void write_artifact(RunManifest& m, const std::filesystem::path& dir, const std::string& name, const std::string& content);

/// Two-column "x y" plot data with a '#' header line.
std::string plot_data(const std::string& x_name, const std::string& y_name, const std::vector<double>& x,
                      const std::vector<double>& y);

nlohmann::ordered_json manifest_json(const RunManifest& m);

/// summary.txt (text) or summary.csv (csv); recorded in the manifest.
void emit_report(RunManifest& m, const std::filesystem::path& dir, ReportFormat format);

/// manifest.json (no timings) and timings.json.
void write_manifest(const RunManifest& m, const std::filesystem::path& dir);

}  // namespace exfact
