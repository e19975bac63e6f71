#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include "json.hpp"

#include "isd/errors.hpp"

namespace isd {

/// Invalid or unknown configuration entry; `field()` is "section.key".
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// INI configuration with typed, range-checked reads. Every read records the
/// value it resolved to (default or given), which yields the canonical text
/// echoed into run summaries. Keys nobody read are rejected by finish().
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  /// "section.key=value"; replaces or adds a scalar entry.
  void set(const std::string& assignment);

  double real(const std::string& field, double fallback, double lo, double hi);
  std::uint64_t integer(const std::string& field, std::uint64_t fallback, std::uint64_t lo, std::uint64_t hi);
  bool flag(const std::string& field, bool fallback);
  std::string choice(const std::string& field, const std::string& fallback,
                     const std::vector<std::string>& allowed);
  std::string text(const std::string& field, const std::string& fallback);
  std::vector<double> reals(const std::string& field, const std::vector<double>& fallback, double lo, double hi);
  std::vector<std::string> words(const std::string& field, const std::vector<std::string>& fallback);
  bool has(const std::string& field) const;

  /// Throws ConfigError for the first entry that no read consumed.
  void finish() const;

  /// Resolved entries as INI text, sections in first-read order.
  std::string canonical_text() const;
  nlohmann::ordered_json resolved_json() const;
  /// Git blob SHA-1 of canonical_text().
  std::string content_hash() const;

 private:
  std::optional<std::string> raw(const std::string& field) const;
  std::optional<std::string> lookup(const std::string& field);
  void record(const std::string& field, std::string value);

  boost::property_tree::ptree tree_;
  std::string origin_;
  std::set<std::string> consumed_;
  std::vector<std::pair<std::string, std::string>> resolved_;
};

std::string git_blob_sha1(const std::string& content);

}  // namespace isd
