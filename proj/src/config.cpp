#include "rendersynth/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace rendersynth {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument("config: bad section at line " +
                                                          std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " +
                                  std::to_string(line_no));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config: empty key or value at line " + std::to_string(line_no));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.values_.count(full))
      throw std::invalid_argument("config: duplicate key " + full);
    cfg.values_[full] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_string(text.str());
}

double KeyValueConfig::get_double(const std::string& key) const {
  const std::string& raw = values_.at(key);
  size_t used = 0;
  const double v = std::stod(raw, &used);
  if (used != raw.size()) throw std::invalid_argument("config: " + key + " is not a number");
  return v;
}

int KeyValueConfig::get_int(const std::string& key) const {
  const std::string& raw = values_.at(key);
  size_t used = 0;
  const int v = std::stoi(raw, &used);
  if (used != raw.size()) throw std::invalid_argument("config: " + key + " is not an integer");
  return v;
}

bool KeyValueConfig::get_bool(const std::string& key) const {
  const std::string& raw = values_.at(key);
  if (raw == "true") return true;
  if (raw == "false") return false;
  throw std::invalid_argument("config: " + key + " must be true or false");
}

std::string KeyValueConfig::get_string(const std::string& key) const { return values_.at(key); }

HandmadeConfig load_handmade_config(const std::string& path) {
  const KeyValueConfig cfg = KeyValueConfig::parse_file(path);
  HandmadeConfig hm;

  std::map<std::string, std::function<void()>> schema{
      {"version", [&] { (void)cfg.get_int("version"); }},
      {"stages.blur", [&] { hm.blur = cfg.get_bool("stages.blur"); }},
      {"stages.lighting", [&] { hm.lighting = cfg.get_bool("stages.lighting"); }},
      {"stages.background", [&] { hm.background = cfg.get_bool("stages.background"); }},
      {"stages.noise", [&] { hm.noise = cfg.get_bool("stages.noise"); }},
      {"stages.spotlights", [&] { hm.spotlights = cfg.get_bool("stages.spotlights"); }},
      {"blur.sigma_min", [&] { hm.blur_sigma_min = cfg.get_double("blur.sigma_min"); }},
      {"blur.sigma_max", [&] { hm.blur_sigma_max = cfg.get_double("blur.sigma_max"); }},
      {"lighting.scale_center_min",
       [&] { hm.light_scale_center_min = cfg.get_double("lighting.scale_center_min"); }},
      {"lighting.scale_center_max",
       [&] { hm.light_scale_center_max = cfg.get_double("lighting.scale_center_max"); }},
      {"lighting.scale_amp", [&] { hm.light_scale_amp = cfg.get_double("lighting.scale_amp"); }},
      {"lighting.shift_amp", [&] { hm.light_shift_amp = cfg.get_double("lighting.shift_amp"); }},
      {"lighting.pyramid_decay",
       [&] { hm.light_pyramid_decay = cfg.get_double("lighting.pyramid_decay"); }},
      {"background.amp_min", [&] { hm.bg_amp_min = cfg.get_double("background.amp_min"); }},
      {"background.amp_max", [&] { hm.bg_amp_max = cfg.get_double("background.amp_max"); }},
      {"background.offset_min",
       [&] { hm.bg_offset_min = cfg.get_double("background.offset_min"); }},
      {"background.offset_max",
       [&] { hm.bg_offset_max = cfg.get_double("background.offset_max"); }},
      {"background.pyramid_decay",
       [&] { hm.bg_pyramid_decay = cfg.get_double("background.pyramid_decay"); }},
      {"noise.amp", [&] { hm.noise_amp = cfg.get_double("noise.amp"); }},
      {"spotlights.count_mean",
       [&] { hm.spotlight_count_mean = cfg.get_double("spotlights.count_mean"); }},
      {"spotlights.count_max",
       [&] { hm.spotlight_count_max = cfg.get_int("spotlights.count_max"); }},
      {"spotlights.amp_min", [&] { hm.spotlight_amp_min = cfg.get_double("spotlights.amp_min"); }},
      {"spotlights.amp_max", [&] { hm.spotlight_amp_max = cfg.get_double("spotlights.amp_max"); }},
      {"spotlights.sigma_min",
       [&] { hm.spotlight_sigma_min = cfg.get_double("spotlights.sigma_min"); }},
      {"spotlights.sigma_max",
       [&] { hm.spotlight_sigma_max = cfg.get_double("spotlights.sigma_max"); }},
  };

  for (const auto& [key, raw] : cfg.values()) {
    (void)raw;
    const auto it = schema.find(key);
    if (it == schema.end()) throw std::invalid_argument("config: unknown key " + key);
    it->second();
  }

  if (hm.blur_sigma_min < 0.0 || hm.blur_sigma_max < hm.blur_sigma_min)
    throw std::invalid_argument("config: invalid blur sigma range");
  if (hm.spotlight_count_max < 0)
    throw std::invalid_argument("config: spotlight count_max must be >= 0");
  return hm;
}

std::string default_handmade_config_text() {
  const HandmadeConfig hm;
  std::ostringstream out;
  out << "version = 1\n\n";
  out << "[stages]\n";
  out << "blur = " << (hm.blur ? "true" : "false") << "\n";
  out << "lighting = " << (hm.lighting ? "true" : "false") << "\n";
  out << "background = " << (hm.background ? "true" : "false") << "\n";
  out << "noise = " << (hm.noise ? "true" : "false") << "\n";
  out << "spotlights = " << (hm.spotlights ? "true" : "false") << "\n\n";
  out << "[blur]\n";
  out << "sigma_min = " << hm.blur_sigma_min << "\n";
  out << "sigma_max = " << hm.blur_sigma_max << "\n\n";
  out << "[lighting]\n";
  out << "scale_center_min = " << hm.light_scale_center_min << "\n";
  out << "scale_center_max = " << hm.light_scale_center_max << "\n";
  out << "scale_amp = " << hm.light_scale_amp << "\n";
  out << "shift_amp = " << hm.light_shift_amp << "\n";
  out << "pyramid_decay = " << hm.light_pyramid_decay << "\n\n";
  out << "[background]\n";
  out << "amp_min = " << hm.bg_amp_min << "\n";
  out << "amp_max = " << hm.bg_amp_max << "\n";
  out << "offset_min = " << hm.bg_offset_min << "\n";
  out << "offset_max = " << hm.bg_offset_max << "\n";
  out << "pyramid_decay = " << hm.bg_pyramid_decay << "\n\n";
  out << "[noise]\n";
  out << "amp = " << hm.noise_amp << "\n\n";
  out << "[spotlights]\n";
  out << "count_mean = " << hm.spotlight_count_mean << "\n";
  out << "count_max = " << hm.spotlight_count_max << "\n";
  out << "amp_min = " << hm.spotlight_amp_min << "\n";
  out << "amp_max = " << hm.spotlight_amp_max << "\n";
  out << "sigma_min = " << hm.spotlight_sigma_min << "\n";
  out << "sigma_max = " << hm.spotlight_sigma_max << "\n";
  return out.str();
}

}  // namespace rendersynth
