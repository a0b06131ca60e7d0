#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rsn/analysis/receptive_field.hpp"
#include "rsn/analysis/symbolic.hpp"
#include "rsn/arch/config.hpp"

namespace rsn {

enum class BlockFamily { resnet, res2net, osnet, rsn };

std::string_view family_name(BlockFamily f);
BlockFamily parse_family(std::string_view s);

/// A single block with its split outputs tagged "y1".."yB".
struct BlockTemplate {
  std::string name;
  SymbolicGraph graph;
  int branches = 4;
};

/// `branches` applies to the rsn family (and its fusion variants); the
/// other families always use four splits.
BlockTemplate block_template(BlockFamily f, int branches = 4, FusionMode fusion = FusionMode::rsn);
std::vector<BlockTemplate> emit_block_templates();

struct RFRow {
  std::string name;
  std::vector<RFSet> cells;  // one per split output
};

RFRow rf_row(const BlockTemplate& t);
/// "3 | 5,7 | 7,9,11 | 9,11,13,15"
std::string format_row(const RFRow& row);

}  // namespace rsn
