#include "rsn/analysis/templates.hpp"

#include <stdexcept>

#include "rsn/arch/blocks.hpp"

namespace rsn {

namespace {

constexpr int kTemplateChannels = 64;

Ref conv3(ArchBuilder& b, Ref x, const std::string& name) {
  return b.relu(b.conv(x, ConvSpec{.out = x.channels, .kernel = 3}, name));
}

BlockTemplate resnet_template() {
  SymbolicBuilder b;
  Ref x = b.input("x", kTemplateChannels);
  Ref h = b.relu(b.conv(x, ConvSpec{.out = kTemplateChannels / 4, .kernel = 1}, "conv1"));
  h = conv3(b, h, "conv2");
  Ref out = b.conv(h, ConvSpec{.out = kTemplateChannels, .kernel = 1}, "conv3");
  const int w = kTemplateChannels / 4;
  for (int i = 0; i < 4; ++i) b.tag(b.slice(out, i * w, w), "y" + std::to_string(i + 1));
  return {"ResNet", std::move(b.graph()), 4};
}

BlockTemplate osnet_template() {
  SymbolicBuilder b;
  Ref x = b.input("x", kTemplateChannels);
  const int w = kTemplateChannels / 4;
  Ref h = b.relu(b.conv(x, ConvSpec{.out = w, .kernel = 1}, "conv1"));
  for (int i = 0; i < 4; ++i) {
    Ref s = h;
    for (int j = 0; j <= i; ++j) s = conv3(b, s, "stream" + std::to_string(i + 1) + ".c" + std::to_string(j + 1));
    b.tag(s, "y" + std::to_string(i + 1));
  }
  return {"OSNet", std::move(b.graph()), 4};
}

BlockTemplate res2net_template() {
  SymbolicBuilder b;
  Ref x = b.input("x", kTemplateChannels);
  Ref h = b.relu(b.conv(x, ConvSpec{.out = kTemplateChannels, .kernel = 1}, "conv1"));
  const int w = kTemplateChannels / 4;
  Ref prev{};
  for (int i = 0; i < 4; ++i) {
    Ref xi = b.slice(h, i * w, w);
    Ref yi = xi;
    if (i == 1) yi = conv3(b, xi, "k2");
    if (i >= 2) yi = conv3(b, b.add(xi, prev), "k" + std::to_string(i + 1));
    b.tag(yi, "y" + std::to_string(i + 1));
    prev = yi;
  }
  return {"Res2Net", std::move(b.graph()), 4};
}

BlockTemplate rsn_template(int branches, FusionMode fusion) {
  RSBConfig cfg;
  cfg.branches = branches;
  cfg.in_channels = 16 * branches;
  cfg.out_channels = 16 * branches;
  cfg.branch_width = 16;
  cfg.fusion = fusion;
  cfg.validate();
  SymbolicBuilder b;
  Ref x = b.input("x", cfg.in_channels);
  Ref out = add_rsb(b, x, cfg, "rsb");
  b.mark_output(out);
  SymbolicGraph g = std::move(b.graph());
  for (int i = 1; i <= branches; ++i) g.tag(g.tagged("rsb.y" + std::to_string(i)), "y" + std::to_string(i));
  std::string name = "RSN";
  if (fusion != FusionMode::rsn) name += "-" + std::string(fusion_name(fusion));
  if (branches != 4) name += "(B=" + std::to_string(branches) + ")";
  return {name, std::move(g), branches};
}

}  // namespace

std::string_view family_name(BlockFamily f) {
  switch (f) {
    case BlockFamily::resnet: return "resnet";
    case BlockFamily::res2net: return "res2net";
    case BlockFamily::osnet: return "osnet";
    case BlockFamily::rsn: return "rsn";
  }
  return "?";
}

BlockFamily parse_family(std::string_view s) {
  for (BlockFamily f : {BlockFamily::resnet, BlockFamily::res2net, BlockFamily::osnet, BlockFamily::rsn})
    if (family_name(f) == s) return f;
  throw std::invalid_argument("unknown block family '" + std::string(s) + "' (resnet, res2net, osnet, rsn)");
}

BlockTemplate block_template(BlockFamily f, int branches, FusionMode fusion) {
  switch (f) {
    case BlockFamily::resnet: return resnet_template();
    case BlockFamily::res2net: return res2net_template();
    case BlockFamily::osnet: return osnet_template();
    case BlockFamily::rsn: return rsn_template(branches, fusion);
  }
  throw std::invalid_argument("unknown block family");
}

std::vector<BlockTemplate> emit_block_templates() {
  std::vector<BlockTemplate> out;
  for (BlockFamily f : {BlockFamily::resnet, BlockFamily::osnet, BlockFamily::res2net, BlockFamily::rsn})
    out.push_back(block_template(f));
  return out;
}

RFRow rf_row(const BlockTemplate& t) {
  const std::vector<RFInfo> info = rf_propagate(t.graph);
  RFRow row{t.name, {}};
  for (int i = 1; i <= t.branches; ++i) row.cells.push_back(info[t.graph.tagged("y" + std::to_string(i))].set);
  return row;
}

std::string format_row(const RFRow& row) {
  std::string out;
  for (std::size_t i = 0; i < row.cells.size(); ++i) {
    if (i) out += " | ";
    out += to_string(row.cells[i]);
  }
  return out;
}

}  // namespace rsn
