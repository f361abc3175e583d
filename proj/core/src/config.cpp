#include "recnn/config.hpp"

#include <charconv>
#include <cmath>

#include <boost/algorithm/string.hpp>

#include "recnn/error.hpp"

namespace recnn {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  if (parts.size() == 1 && parts[0].empty()) parts.clear();
  return parts;
}

namespace {

std::optional<double> parse_double(const std::string& s) {
  const std::string t = boost::trim_copy(s);
  if (t.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<std::size_t> parse_size(const std::string& s) {
  const std::string t = boost::trim_copy(s);
  std::size_t v = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size()) return std::nullopt;
  return v;
}

}  // namespace

bool ConfigSection::has(const std::string& key) const { return raw(key).has_value(); }

std::optional<std::string> ConfigSection::raw(const std::string& key) const {
  auto child = tree_->get_child_optional(boost::property_tree::ptree::path_type(key, '\0'));
  if (!child) return std::nullopt;
  return boost::trim_copy(child->data());
}

void ConfigSection::fail(const std::string& key, const std::string& what) const {
  throw ValidationError("[" + name_ + "] " + key + ": " + what);
}

std::string ConfigSection::get_string(const std::string& key) const {
  auto v = raw(key);
  if (!v) fail(key, "missing required key");
  return *v;
}

std::string ConfigSection::get_string(const std::string& key, const std::string& fallback) const {
  return raw(key).value_or(fallback);
}

std::size_t ConfigSection::get_size(const std::string& key) const {
  auto v = parse_size(get_string(key));
  if (!v) fail(key, "expected a non-negative integer");
  return *v;
}

std::size_t ConfigSection::get_size(const std::string& key, std::size_t fallback) const {
  return has(key) ? get_size(key) : fallback;
}

double ConfigSection::get_double(const std::string& key) const {
  auto v = parse_double(get_string(key));
  if (!v) fail(key, "expected a finite number");
  return *v;
}

double ConfigSection::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool ConfigSection::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = boost::to_lower_copy(get_string(key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(key, "expected a boolean");
}

std::vector<double> ConfigSection::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& part : split_list(get_string(key))) {
    auto v = parse_double(part);
    if (!v) fail(key, "malformed number '" + part + "'");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::size_t> ConfigSection::get_sizes(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& part : split_list(get_string(key))) {
    auto v = parse_size(part);
    if (!v) fail(key, "malformed integer '" + part + "'");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::size_t> ConfigSection::get_sizes(const std::string& key,
                                                  const std::vector<std::size_t>& fallback) const {
  return has(key) ? get_sizes(key) : fallback;
}

}  // namespace recnn
