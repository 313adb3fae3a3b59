#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"

namespace gclab {

inline constexpr const char* kVersion = "0.3.0";

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(const std::string& bytes);

/// RFC-4180 style CSV with a fixed header; numbers are written with %.17g.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<double>& values);
  /// Mixed row: preformatted cells (quoted when needed).
  void row_text(const std::vector<std::string>& cells);
  std::string str() const { return out_; }

  static std::string number(double v);

 private:
  std::size_t columns_;
  std::string out_;
};

/// Collects verdicts, constants and output files of one subcommand run and writes manifest.json.
class Manifest {
 public:
  Manifest(std::string subcommand, const ScenarioConfig& config, std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  /// Writes `bytes` to dir/name and records its hash.
  void write_file(const std::string& name, const std::string& bytes);
  void verdict(const std::string& name, bool pass);
  void constant(const std::string& name, const Json& value);
  void seed(const std::string& name, std::uint64_t value);
  bool all_pass() const;
  /// Writes manifest.json (files sorted by name) and returns its path.
  std::filesystem::path finish();

 private:
  std::string subcommand_;
  Json config_;
  std::filesystem::path dir_;
  Json verdicts_ = Json::object();
  Json constants_ = Json::object();
  Json seeds_ = Json::object();
  std::vector<std::pair<std::string, std::string>> files_;
};

/// Loads a manifest; throws ConfigError naming a missing or malformed file.
Json read_manifest(const std::filesystem::path& path);

}  // namespace gclab
