#include "isd/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "isd/csv.hpp"

namespace isd {

namespace pt = boost::property_tree;

namespace {

std::pair<std::string, std::string> split_field(const std::string& field) {
  const auto dot = field.find('.');
  if (dot == std::string::npos) return {"", field};
  return {field.substr(0, dot), field.substr(dot + 1)};
}

double parse_real(const std::string& field, const std::string& s) {
  const std::string t = boost::trim_copy(s);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size() || !std::isfinite(v)) {
    throw ConfigError(field, "expected a finite number, got '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  if (boost::trim_copy(s).empty()) return items;
  boost::split(items, s, boost::is_any_of(","));
  for (auto& item : items) boost::trim(item);
  return items;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  try {
    pt::read_ini(in, cfg.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin, fmt::format("line {}: {}", e.line(), e.message()));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path.string());
}

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(assignment, "override must look like section.key=value");
  const std::string field = boost::trim_copy(assignment.substr(0, eq));
  const auto [section, key] = split_field(field);
  if (section.empty() || key.empty() || key.find('.') != std::string::npos) {
    throw ConfigError(field, "override must name section.key");
  }
  tree_.put(pt::ptree::path_type(section + '\x1f' + key, '\x1f'), boost::trim_copy(assignment.substr(eq + 1)));
}

std::optional<std::string> Config::raw(const std::string& field) const {
  const auto [section, key] = split_field(field);
  const auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\x1f'));
  if (!sec) return std::nullopt;
  const auto value = sec->get_optional<std::string>(pt::ptree::path_type(key, '\x1f'));
  if (!value) return std::nullopt;
  return *value;
}

bool Config::has(const std::string& field) const { return raw(field).has_value(); }

// A key that was asked for is known even if its value is then rejected.
std::optional<std::string> Config::lookup(const std::string& field) {
  consumed_.insert(field);
  return raw(field);
}

void Config::record(const std::string& field, std::string value) {
  consumed_.insert(field);
  for (auto& [f, v] : resolved_) {
    if (f == field) {
      v = std::move(value);
      return;
    }
  }
  resolved_.emplace_back(field, std::move(value));
}

double Config::real(const std::string& field, double fallback, double lo, double hi) {
  const auto r = lookup(field);
  const double v = r ? parse_real(field, *r) : fallback;
  if (v < lo || v > hi) {
    throw ConfigError(field, fmt::format("must lie in [{}, {}], got {}", lo, hi, csv::number(v)));
  }
  record(field, csv::number(v));
  return v;
}

std::uint64_t Config::integer(const std::string& field, std::uint64_t fallback, std::uint64_t lo,
                              std::uint64_t hi) {
  const auto r = lookup(field);
  std::uint64_t v = fallback;
  if (r) {
    const std::string t = boost::trim_copy(*r);
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || end != t.data() + t.size()) {
      throw ConfigError(field, "expected a nonnegative integer, got '" + *r + "'");
    }
  }
  if (v < lo || v > hi) throw ConfigError(field, fmt::format("must lie in [{}, {}], got {}", lo, hi, v));
  record(field, std::to_string(v));
  return v;
}

bool Config::flag(const std::string& field, bool fallback) {
  const auto r = lookup(field);
  bool v = fallback;
  if (r) {
    const std::string t = boost::to_lower_copy(boost::trim_copy(*r));
    if (t == "true" || t == "1" || t == "yes") {
      v = true;
    } else if (t == "false" || t == "0" || t == "no") {
      v = false;
    } else {
      throw ConfigError(field, "expected true or false, got '" + *r + "'");
    }
  }
  record(field, v ? "true" : "false");
  return v;
}

std::string Config::choice(const std::string& field, const std::string& fallback,
                           const std::vector<std::string>& allowed) {
  const auto r = lookup(field);
  const std::string v = r ? boost::trim_copy(*r) : fallback;
  if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
    throw ConfigError(field, fmt::format("must be one of {}, got '{}'", boost::join(allowed, "|"), v));
  }
  record(field, v);
  return v;
}

std::string Config::text(const std::string& field, const std::string& fallback) {
  const auto r = lookup(field);
  std::string v = r ? boost::trim_copy(*r) : fallback;
  record(field, v);
  return v;
}

std::vector<double> Config::reals(const std::string& field, const std::vector<double>& fallback, double lo,
                                  double hi) {
  const auto r = lookup(field);
  std::vector<double> v = fallback;
  if (r) {
    v.clear();
    for (const auto& item : split_list(*r)) v.push_back(parse_real(field, item));
  }
  if (v.empty()) throw ConfigError(field, "list must not be empty");
  std::vector<std::string> shown;
  for (double x : v) {
    if (x < lo || x > hi) {
      throw ConfigError(field, fmt::format("entries must lie in [{}, {}], got {}", lo, hi, csv::number(x)));
    }
    shown.push_back(csv::number(x));
  }
  record(field, boost::join(shown, ","));
  return v;
}

std::vector<std::string> Config::words(const std::string& field, const std::vector<std::string>& fallback) {
  const auto r = lookup(field);
  std::vector<std::string> v = r ? split_list(*r) : fallback;
  if (v.empty()) throw ConfigError(field, "list must not be empty");
  record(field, boost::join(v, ","));
  return v;
}

void Config::finish() const {
  for (const auto& [section, body] : tree_) {
    if (body.empty()) throw ConfigError(section, "key outside any section");
    for (const auto& [key, value] : body) {
      const std::string field = section + "." + key;
      if (!consumed_.contains(field)) throw ConfigError(field, "unknown key in " + origin_);
    }
  }
}

std::string Config::canonical_text() const {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
  for (const auto& [field, value] : resolved_) {
    const auto [section, key] = split_field(field);
    if (!sections.contains(section)) order.push_back(section);
    sections[section].emplace_back(key, value);
  }
  std::string out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0) out += '\n';
    out += '[' + order[i] + "]\n";
    for (const auto& [key, value] : sections[order[i]]) out += key + " = " + value + '\n';
  }
  return out;
}

nlohmann::ordered_json Config::resolved_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [field, value] : resolved_) {
    const auto [section, key] = split_field(field);
    j[section][key] = value;
  }
  return j;
}

std::string Config::content_hash() const { return git_blob_sha1(canonical_text()); }

std::string git_blob_sha1(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw Error("SHA-1 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace isd
