#pragma once

#include <filesystem>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pcqkit {

/// Layered key/value configuration. Keys are "section.name"; every key has a
/// documented default, a config file (INI sections) overrides defaults, and
/// explicit set() calls (command-line flags) override the file.
class Config {
 public:
  struct Entry {
    std::string value;
    std::string doc;
  };

  static Config defaults();

  /// INI: "[section]" headers, "name = value" lines, '#' or ';' comments.
  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;

  const std::map<std::string, Entry>& entries() const { return entries_; }

  /// "key=value" lines, sorted, restricted to the given sections (all when empty).
  std::string canonical(std::initializer_list<std::string_view> sections = {}) const;
  /// First 16 hex digits of SHA-256 over canonical(sections).
  std::string hash(std::initializer_list<std::string_view> sections = {}) const;

  /// Hash of everything that influences feature values.
  std::string extraction_hash() const;

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace pcqkit
