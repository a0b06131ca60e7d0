#include "rsn/analysis/receptive_field.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace rsn {

namespace {

std::size_t index_of(long long v) {
  if (v < 1 || v % 2 == 0) throw std::invalid_argument("receptive field values must be positive and odd, got " + std::to_string(v));
  return static_cast<std::size_t>((v - 1) / 2);
}

}  // namespace

RFSet RFSet::of(std::initializer_list<long long> values) {
  RFSet s;
  for (long long v : values) s.insert(v);
  return s;
}

void RFSet::insert(long long v) {
  const std::size_t i = index_of(v);
  if (bits_.size() <= i / 64) bits_.resize(i / 64 + 1, 0);
  bits_[i / 64] |= std::uint64_t{1} << (i % 64);
}

bool RFSet::contains(long long v) const {
  if (v < 1 || v % 2 == 0) return false;
  const std::size_t i = index_of(v);
  return i / 64 < bits_.size() && ((bits_[i / 64] >> (i % 64)) & 1u);
}

bool RFSet::empty() const {
  return std::all_of(bits_.begin(), bits_.end(), [](std::uint64_t w) { return w == 0; });
}

std::size_t RFSet::size() const {
  std::size_t n = 0;
  for (std::uint64_t w : bits_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

long long RFSet::min() const {
  for (std::size_t k = 0; k < bits_.size(); ++k)
    if (bits_[k]) return 2 * static_cast<long long>(k * 64 + std::countr_zero(bits_[k])) + 1;
  throw std::logic_error("min of an empty receptive-field set");
}

long long RFSet::max() const {
  for (std::size_t k = bits_.size(); k-- > 0;)
    if (bits_[k]) return 2 * static_cast<long long>(k * 64 + 63 - std::countl_zero(bits_[k])) + 1;
  throw std::logic_error("max of an empty receptive-field set");
}

std::vector<long long> RFSet::values() const {
  std::vector<long long> out;
  for (std::size_t k = 0; k < bits_.size(); ++k) {
    std::uint64_t w = bits_[k];
    while (w) {
      const int b = std::countr_zero(w);
      out.push_back(2 * static_cast<long long>(k * 64 + b) + 1);
      w &= w - 1;
    }
  }
  return out;
}

RFSet RFSet::shifted(long long delta) const {
  if (delta < 0 || delta % 2 != 0) throw std::invalid_argument("receptive field shift must be even and non-negative");
  RFSet out;
  out.global = global;
  const std::size_t s = static_cast<std::size_t>(delta / 2);
  const std::size_t words = s / 64, bitsh = s % 64;
  out.bits_.assign(bits_.size() + words + 1, 0);
  for (std::size_t k = 0; k < bits_.size(); ++k) {
    out.bits_[k + words] |= bits_[k] << bitsh;
    if (bitsh) out.bits_[k + words + 1] |= bits_[k] >> (64 - bitsh);
  }
  while (!out.bits_.empty() && out.bits_.back() == 0) out.bits_.pop_back();
  return out;
}

RFSet& RFSet::unite(const RFSet& other) {
  if (bits_.size() < other.bits_.size()) bits_.resize(other.bits_.size(), 0);
  for (std::size_t k = 0; k < other.bits_.size(); ++k) bits_[k] |= other.bits_[k];
  global = global || other.global;
  return *this;
}

bool operator==(const RFSet& a, const RFSet& b) { return a.global == b.global && a.values() == b.values(); }

std::string to_string(const RFSet& s) {
  std::string out;
  for (long long v : s.values()) out += (out.empty() ? "" : ",") + std::to_string(v);
  if (s.global) out += out.empty() ? "global" : ",global";
  return out;
}

std::vector<RFInfo> rf_propagate(const SymbolicGraph& g) {
  const std::vector<int> order = g.topological_order();
  std::vector<RFInfo> info(g.size());
  for (int id : order) {
    const SymNode& n = g.node(id);
    RFInfo& out = info[id];
    if (n.kind == SymKind::input) {
      out.by_jump[1] = RFSet::of({1});
    } else {
      const RFInfo& first = info[n.inputs.at(0)];
      switch (n.kind) {
        case SymKind::conv:
        case SymKind::depthwise:
        case SymKind::max_pool:
          for (const auto& [jump, set] : first.by_jump) out.by_jump[jump * n.stride].unite(set.shifted((n.kernel - 1) * jump));
          break;
        case SymKind::global_avg_pool:
          out.by_jump = first.by_jump;
          for (auto& [jump, set] : out.by_jump) set.global = true;
          break;
        case SymKind::upsample:
          for (const auto& [jump, set] : first.by_jump) out.by_jump[std::max<long long>(1, jump / n.factor)].unite(set);
          break;
        default:
          for (int in : n.inputs)
            for (const auto& [jump, set] : info[in].by_jump) out.by_jump[jump].unite(set);
          break;
      }
    }
    for (const auto& [jump, set] : out.by_jump) out.set.unite(set);
  }
  return info;
}

}  // namespace rsn
