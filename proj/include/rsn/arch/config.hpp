#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rsn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FusionMode { rsn, baseline1, baseline2 };

std::string_view fusion_name(FusionMode m);
FusionMode parse_fusion(std::string_view s);

struct RSBConfig {
  int in_channels = 64;
  int out_channels = 64;
  int branches = 4;
  int branch_width = 16;
  int stride = 1;
  FusionMode fusion = FusionMode::rsn;
  int expansion = 1;  // out_channels = planes * expansion; informational for the builder
  bool batchnorm = true;
  bool first_in_level = true;

  void validate() const;
};

inline constexpr int kLevels = 4;

struct NetworkConfig {
  std::string name = "custom";
  int stages = 1;
  std::array<int, kLevels> blocks{2, 2, 2, 2};
  std::array<int, kLevels> channels{64, 128, 256, 512};  // planes per level
  int expansion = 1;
  int stem_channels = 64;
  int head_channels = 128;  // width of the top-down path
  int keypoints = 17;
  int input_h = 256;
  int input_w = 192;
  int branches = 4;
  FusionMode fusion = FusionMode::rsn;
  bool prm = false;  // PRM in the last stage
  double width_multiplier = 1.0;
  bool batchnorm = true;

  void validate() const;
  int level_out(int level) const { return channels.at(level) * expansion; }
  /// Per-branch width of the RSBs on `level`: round(m * planes / 4), at least 1.
  int branch_width(int level) const;
  int heatmap_h() const { return input_h / 4; }
  int heatmap_w() const { return input_w / 4; }
  /// Block configuration for block `index` of `level` with the given input width.
  RSBConfig block(int level, int index, int in_channels) const;
};

NetworkConfig parse_config(std::istream& in, const std::string& source = "<stream>");
NetworkConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const NetworkConfig& cfg);

/// Built-in presets: rsn18, rsn50, rsn50x2, rsn50x4, rsn-tiny.
const std::vector<std::string>& preset_names();
NetworkConfig preset(std::string_view name);
/// A preset name or a path to a config file. A trailing ".cfg" on a preset
/// name is accepted.
NetworkConfig resolve_config(const std::string& name_or_path);

}  // namespace rsn
