#pragma once

#include <map>
#include <string>
#include <vector>

namespace evseg {

// Plain-text key/value configuration with [section] headers. Keys are stored
// flattened as "section.key"; '#' and ';' start comments. Later assignments
// (including CLI overrides) win.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text);

  void set(const std::string& key, const std::string& value) { map_[key] = value; }
  bool has(const std::string& key) const { return map_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // comma-separated lists
  std::vector<int> get_int_list(const std::string& key,
                                const std::vector<int>& fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;

  const std::map<std::string, std::string>& entries() const { return map_; }

 private:
  std::map<std::string, std::string> map_;
};

}  // namespace evseg
