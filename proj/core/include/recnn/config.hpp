#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace recnn {

/// Typed, error-reporting view over one section of a key = value file.
/// Missing required keys and malformed values raise ValidationError naming
/// the section and key.
class ConfigSection {
 public:
  ConfigSection(const boost::property_tree::ptree& tree, std::string name)
      : tree_(&tree), name_(std::move(name)) {}

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::size_t get_size(const std::string& key) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list.
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::size_t> get_sizes(const std::string& key) const;
  std::vector<std::size_t> get_sizes(const std::string& key,
                                     const std::vector<std::size_t>& fallback) const;

 private:
  std::optional<std::string> raw(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  const boost::property_tree::ptree* tree_;
  std::string name_;
};

std::vector<std::string> split_list(const std::string& text);

}  // namespace recnn
