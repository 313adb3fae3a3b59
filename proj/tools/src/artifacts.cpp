#include "artifacts.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace gclab {

std::string sha256_bytes(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("cannot allocate a SHA-256 context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, md.data(), &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "missing artifact");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_bytes(bytes);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row_text(header); }

std::string CsvWriter::number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(number(v));
  row_text(cells);
}

void CsvWriter::row_text(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("CSV row width does not match the header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out_ += ',';
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\r\n") != std::string::npos) {
      out_ += '"';
      for (char ch : c) {
        if (ch == '"') out_ += '"';
        out_ += ch;
      }
      out_ += '"';
    } else {
      out_ += c;
    }
  }
  out_ += "\r\n";
}

Manifest::Manifest(std::string subcommand, const ScenarioConfig& config, std::filesystem::path dir)
    : subcommand_(std::move(subcommand)), config_(config.echo), dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

void Manifest::write_file(const std::string& name, const std::string& bytes) {
  const auto path = dir_ / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  files_.erase(std::remove_if(files_.begin(), files_.end(), [&](const auto& f) { return f.first == name; }),
               files_.end());
  files_.emplace_back(name, sha256_bytes(bytes));
}

void Manifest::verdict(const std::string& name, bool pass) { verdicts_[name] = pass; }

void Manifest::constant(const std::string& name, const Json& value) { constants_[name] = value; }

void Manifest::seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }

bool Manifest::all_pass() const {
  for (const auto& v : verdicts_) {
    if (!v.get<bool>()) return false;
  }
  return true;
}

std::filesystem::path Manifest::finish() {
  std::sort(files_.begin(), files_.end());
  Json doc;
  doc["manifest_version"] = 1;
  doc["tool"] = "gclab";
  doc["version"] = kVersion;
  doc["subcommand"] = subcommand_;
  doc["config"] = config_;
  doc["seeds"] = seeds_;
  doc["verdicts"] = verdicts_;
  doc["pass"] = all_pass();
  doc["constants"] = constants_;
  Json files = Json::array();
  for (const auto& [name, hash] : files_) files.push_back({{"path", name}, {"sha256", hash}});
  doc["files"] = files;
  const auto path = dir_ / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  return path;
}

Json read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "missing manifest");
  try {
    Json doc = Json::parse(in);
    if (!doc.contains("manifest_version") || !doc.contains("files")) {
      throw ConfigError(path.string(), "not a gclab manifest");
    }
    return doc;
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string(), std::string("malformed manifest: ") + e.what());
  }
}

}  // namespace gclab
