#include "rsn/arch/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace rsn {

std::string_view fusion_name(FusionMode m) {
  switch (m) {
    case FusionMode::rsn: return "rsn";
    case FusionMode::baseline1: return "baseline1";
    case FusionMode::baseline2: return "baseline2";
  }
  return "?";
}

FusionMode parse_fusion(std::string_view s) {
  if (s == "rsn") return FusionMode::rsn;
  if (s == "baseline1") return FusionMode::baseline1;
  if (s == "baseline2") return FusionMode::baseline2;
  throw ConfigError("unknown fusion mode '" + std::string(s) + "' (expected rsn, baseline1 or baseline2)");
}

void RSBConfig::validate() const {
  if (branches < 1 || branches > 6) throw ConfigError("RSB: branches must lie in [1, 6], got " + std::to_string(branches));
  if (branch_width < 1) throw ConfigError("RSB: branch width must be positive");
  if (in_channels < 1 || out_channels < 1) throw ConfigError("RSB: channel counts must be positive");
  if (in_channels % branches != 0) {
    throw ConfigError("RSB: in_channels " + std::to_string(in_channels) + " is not divisible by " +
                      std::to_string(branches) + " branches");
  }
  if (stride != 1 && stride != 2) throw ConfigError("RSB: stride must be 1 or 2");
  if (stride == 2 && !first_in_level) throw ConfigError("RSB: stride 2 is only allowed on the first block of a level");
}

int NetworkConfig::branch_width(int level) const {
  const double w = width_multiplier * channels.at(level) / 4.0;
  return std::max(1, static_cast<int>(std::lround(w)));
}

RSBConfig NetworkConfig::block(int level, int index, int in_channels) const {
  RSBConfig b;
  b.in_channels = in_channels;
  b.out_channels = level_out(level);
  b.branches = branches;
  b.branch_width = branch_width(level);
  b.stride = (index == 0 && level > 0) ? 2 : 1;
  b.fusion = fusion;
  b.expansion = expansion;
  b.batchnorm = batchnorm;
  b.first_in_level = index == 0;
  return b;
}

void NetworkConfig::validate() const {
  auto fail = [&](const std::string& msg) { throw ConfigError("config '" + name + "': " + msg); };
  if (stages < 1) fail("stages must be >= 1");
  for (int l = 0; l < kLevels; ++l) {
    if (blocks[l] < 1) fail("blocks per level must be >= 1");
    if (channels[l] < 1) fail("level channels must be positive");
    if (level_out(l) % branches != 0) {
      fail("level " + std::to_string(l + 1) + " width " + std::to_string(level_out(l)) + " is not divisible by " +
           std::to_string(branches) + " branches");
    }
  }
  if (expansion < 1) fail("expansion must be >= 1");
  if (stem_channels < 1 || stem_channels % branches != 0) {
    fail("stem_channels must be positive and divisible by the branch count");
  }
  if (head_channels < 1) fail("head_channels must be positive");
  if (keypoints < 1) fail("keypoints must be positive");
  if (input_h < 32 || input_w < 32 || input_h % 32 != 0 || input_w % 32 != 0) {
    fail("input size " + std::to_string(input_h) + "x" + std::to_string(input_w) +
         " must be a positive multiple of 32 in both axes");
  }
  if (branches < 1 || branches > 6) fail("branches must lie in [1, 6]");
  if (!(width_multiplier > 0) || !std::isfinite(width_multiplier)) fail("width_multiplier must be positive");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

int to_int(const std::string& v, const std::string& key) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
  return out;
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  }
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': '" + v + "' is not a boolean");
}

std::array<int, kLevels> to_levels(const std::string& v, const std::string& key) {
  std::array<int, kLevels> out{};
  std::stringstream ss(v);
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= kLevels) throw ConfigError("key '" + key + "': expected exactly 4 comma-separated values");
    out[i++] = to_int(trim(item), key);
  }
  if (i != kLevels) throw ConfigError("key '" + key + "': expected exactly 4 comma-separated values");
  return out;
}

std::string join(const std::array<int, kLevels>& a) {
  std::string s;
  for (int i = 0; i < kLevels; ++i) s += (i ? "," : "") + std::to_string(a[i]);
  return s;
}

}  // namespace

NetworkConfig parse_config(std::istream& in, const std::string& source) {
  NetworkConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    try {
      if (key == "name") cfg.name = val;
      else if (key == "stages") cfg.stages = to_int(val, key);
      else if (key == "blocks") cfg.blocks = to_levels(val, key);
      else if (key == "channels") cfg.channels = to_levels(val, key);
      else if (key == "expansion") cfg.expansion = to_int(val, key);
      else if (key == "stem_channels") cfg.stem_channels = to_int(val, key);
      else if (key == "head_channels") cfg.head_channels = to_int(val, key);
      else if (key == "keypoints") cfg.keypoints = to_int(val, key);
      else if (key == "input") {
        const auto x = val.find('x');
        if (x == std::string::npos) throw ConfigError("key 'input': expected HxW");
        cfg.input_h = to_int(trim(val.substr(0, x)), key);
        cfg.input_w = to_int(trim(val.substr(x + 1)), key);
      } else if (key == "branches") cfg.branches = to_int(val, key);
      else if (key == "fusion") cfg.fusion = parse_fusion(val);
      else if (key == "prm") cfg.prm = to_bool(val, key);
      else if (key == "width_multiplier") cfg.width_multiplier = to_double(val, key);
      else if (key == "batchnorm") cfg.batchnorm = to_bool(val, key);
      else throw ConfigError("unknown key '" + key + "'");
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

NetworkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_config(in, path.string());
}

void write_config(std::ostream& out, const NetworkConfig& cfg) {
  char m[32];
  const auto res = std::to_chars(m, m + sizeof m, cfg.width_multiplier);
  *res.ptr = '\0';
  out << "name = " << cfg.name << "\n"
      << "stages = " << cfg.stages << "\n"
      << "blocks = " << join(cfg.blocks) << "\n"
      << "channels = " << join(cfg.channels) << "\n"
      << "expansion = " << cfg.expansion << "\n"
      << "stem_channels = " << cfg.stem_channels << "\n"
      << "head_channels = " << cfg.head_channels << "\n"
      << "keypoints = " << cfg.keypoints << "\n"
      << "input = " << cfg.input_h << "x" << cfg.input_w << "\n"
      << "branches = " << cfg.branches << "\n"
      << "fusion = " << fusion_name(cfg.fusion) << "\n"
      << "prm = " << (cfg.prm ? "true" : "false") << "\n"
      << "width_multiplier = " << m << "\n"
      << "batchnorm = " << (cfg.batchnorm ? "true" : "false") << "\n";
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"rsn18", "rsn50", "rsn50x2", "rsn50x4", "rsn-tiny"};
  return names;
}

NetworkConfig preset(std::string_view name) {
  NetworkConfig c;
  c.name = std::string(name);
  // Width multipliers come from `rsn calibrate` against the published
  // parameter totals at 256x192.
  if (name == "rsn18") {
    c.blocks = {2, 2, 2, 2};
    c.head_channels = 128;
    c.width_multiplier = 1.65;
  } else if (name == "rsn50" || name == "rsn50x2" || name == "rsn50x4") {
    c.blocks = {3, 4, 6, 3};
    c.expansion = 4;
    c.head_channels = 256;
    c.width_multiplier = 1.355;
    if (name == "rsn50x2") {
      c.stages = 2;
      c.width_multiplier = 1.4;
    } else if (name == "rsn50x4") {
      c.stages = 4;
      c.width_multiplier = 1.43;
      c.prm = true;
    }
  } else if (name == "rsn-tiny") {
    c.stages = 2;
    c.blocks = {1, 1, 1, 1};
    c.channels = {16, 32, 64, 128};
    c.stem_channels = 16;
    c.head_channels = 32;
    c.input_h = 128;
    c.input_w = 96;
    c.prm = true;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  c.validate();
  return c;
}

NetworkConfig resolve_config(const std::string& name_or_path) {
  std::string stem = name_or_path;
  if (stem.ends_with(".cfg")) stem.resize(stem.size() - 4);
  if (std::filesystem::exists(name_or_path)) return load_config(name_or_path);
  if (std::find(preset_names().begin(), preset_names().end(), stem) != preset_names().end()) return preset(stem);
  throw ConfigError("'" + name_or_path + "' is neither a config file nor a preset name");
}

}  // namespace rsn
