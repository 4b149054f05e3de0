#pragma once

#include <map>
#include <string>

#include "rendersynth/pyramid_aug.hpp"

namespace rendersynth {

/// Flat key/value view of a TOML-style config file: "[section]" headers plus
/// "key = value" lines, comments with '#'. Keys are returned as
/// "section.key". Values stay as raw strings; typed access validates.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_string(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Loads handmade-stage distribution parameters, rejecting unknown keys.
HandmadeConfig load_handmade_config(const std::string& path);

/// The calibrated defaults in the file format load_handmade_config reads.
std::string default_handmade_config_text();

}  // namespace rendersynth
