#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rsn/analysis/symbolic.hpp"

namespace rsn {

/// Set of positive odd receptive-field sizes, stored as a bitset over
/// (v - 1) / 2. `global` marks values that have passed a global pooling and
/// therefore see the whole input.
class RFSet {
 public:
  RFSet() = default;
  static RFSet of(std::initializer_list<long long> values);

  void insert(long long v);
  bool contains(long long v) const;
  bool empty() const;
  std::size_t size() const;
  long long min() const;
  long long max() const;
  std::vector<long long> values() const;

  /// Every value grows by `delta` (even, >= 0).
  RFSet shifted(long long delta) const;
  RFSet& unite(const RFSet& other);

  bool global = false;

  friend bool operator==(const RFSet& a, const RFSet& b);

 private:
  std::vector<std::uint64_t> bits_;
};

/// "3" or "5,7"; a trailing ",global" when the set is global.
std::string to_string(const RFSet& s);

struct RFInfo {
  RFSet set;  // union over every path from an input
  /// Paths grouped by their jump (product of strides from the input,
  /// divided by upsampling factors). Merges of differently strided paths
  /// keep each path's own jump.
  std::map<long long, RFSet> by_jump;
  long long max_jump() const { return by_jump.empty() ? 1 : by_jump.rbegin()->first; }
};

/// Propagates receptive fields from every input (seeded with {1}).
/// conv k x k: v -> v + (k - 1) * jump; add/concat: union; 1x1 conv: identity.
std::vector<RFInfo> rf_propagate(const SymbolicGraph& g);

}  // namespace rsn
