#pragma once

// Output artifacts: every file of a run goes through one ArtifactWriter,
// which records its SHA-256 and size for the manifest.

#include "laxflow/cli/config.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <mutex>

namespace laxflow::cli {

namespace fs = std::filesystem;

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes `data` to a temporary sibling and renames it into place.
inline void write_atomically(const fs::path& path, std::string_view data) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw InvalidArgument("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// Row-oriented CSV text with 17 significant digits.
class CsvTable {
 public:
  explicit CsvTable(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      text_ += first ? "" : ",";
      text_ += h;
      first = false;
    }
    text_ += '\n';
  }

  class Row {
   public:
    explicit Row(std::string& text) : text_(text) {}
    Row(const Row&) = delete;
    ~Row() { text_ += '\n'; }

    Row& operator<<(double v) { return put(format_double(v)); }
    Row& operator<<(Eigen::Index v) { return put(std::to_string(v)); }
    Row& operator<<(int v) { return put(std::to_string(v)); }
    Row& operator<<(std::size_t v) { return put(std::to_string(v)); }
    Row& operator<<(bool v) { return put(v ? "true" : "false"); }
    Row& operator<<(std::string_view v) { return put(v); }

   private:
    Row& put(std::string_view s) {
      if (!first_) text_ += ',';
      text_ += s;
      first_ = false;
      return *this;
    }
    std::string& text_;
    bool first_ = true;
  };

  Row row() { return Row(text_); }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct ArtifactRecord {
  std::string name;
  std::string sha256;
  std::size_t bytes = 0;
};

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("out", "cannot create '" + dir_.string() + "': " + ec.message());
  }

  const fs::path& dir() const { return dir_; }

  void write(const std::string& name, std::string_view data) {
    std::lock_guard lock(mutex_);
    write_atomically(dir_ / name, data);
    records_.push_back({name, sha256_hex(data), data.size()});
  }

  void write(const std::string& name, const CsvTable& table) { write(name, table.text()); }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  /// Inventory sorted by file name.
  std::vector<ArtifactRecord> records() const {
    std::lock_guard lock(mutex_);
    auto out = records_;
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return out;
  }

 private:
  fs::path dir_;
  mutable std::mutex mutex_;
  std::vector<ArtifactRecord> records_;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};

/// Run manifest; `finish` writes manifest.json last, atomically.
struct Manifest {
  json config;
  std::optional<KappaZero> kappa0;
  std::size_t decompositions = 0;
  std::size_t cache_hits = 0;
  json wall_seconds = json::object();
  std::vector<CheckResult> checks;
  json extra = json::object();

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }

  void check(std::string name, double value, double threshold, bool pass) {
    checks.push_back({std::move(name), pass, value, threshold});
  }

  json to_json(const ArtifactWriter& writer) const {
    json j;
    j["schema"] = "laxflow.manifest/1";
    j["version"] = std::string(kVersion);
    j["config"] = config;
    if (kappa0) {
      j["kappa0"] = {{"value", kappa0->value}, {"method", std::string(to_string(kappa0->method))}};
    } else {
      j["kappa0"] = nullptr;
    }
    j["decompositions"] = decompositions;
    j["cache_hits"] = cache_hits;
    j["wall_seconds"] = wall_seconds;
    json cs = json::array();
    for (const auto& c : checks)
      cs.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold}});
    j["checks"] = cs;
    j["all_pass"] = all_pass();
    json files = json::array();
    for (const auto& r : writer.records())
      files.push_back({{"name", r.name}, {"sha256", r.sha256}, {"bytes", r.bytes}});
    j["files"] = files;
    for (const auto& [k, v] : extra.items()) j[k] = v;
    return j;
  }

  void finish(const ArtifactWriter& writer) const {
    write_atomically(writer.dir() / "manifest.json", to_json(writer).dump(2) + "\n");
  }
};

/// Compares the recorded digests of a manifest with the files beside it.
inline std::vector<std::string> verify_manifest(const fs::path& manifest_path) {
  const json m = load_json_file(manifest_path.string());
  std::vector<std::string> mismatches;
  for (const auto& f : m.at("files")) {
    const fs::path p = manifest_path.parent_path() / f.at("name").get<std::string>();
    if (!fs::exists(p) || sha256_hex(read_file(p)) != f.at("sha256").get<std::string>())
      mismatches.push_back(f.at("name").get<std::string>());
  }
  return mismatches;
}

}  // namespace laxflow::cli
