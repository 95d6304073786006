#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace ccppm {

// Closed interval of 1-based time indices {first, ..., last}.
struct Interval {
  std::size_t first = 1;
  std::size_t last = 1;

  std::size_t size() const { return last - first + 1; }
  bool operator==(const Interval&) const = default;
};

// Change point indicators c_1..c_{n-1} of a series of length n.
// c_t = 1 means time t+1 starts a new block. Storage is 0-based:
// operator[](j) returns c_{j+1}.
class ChangeIndicators {
 public:
  ChangeIndicators() = default;
  // Throws InvalidInput unless c.size() == n - 1, n >= 2 and all entries are 0/1.
  ChangeIndicators(std::vector<std::uint8_t> c, std::size_t n);

  // All-zero indicators (a single block).
  static ChangeIndicators none(std::size_t n);

  std::size_t n() const { return n_; }
  std::size_t size() const { return c_.size(); }
  std::uint8_t operator[](std::size_t j) const { return c_[j]; }
  const std::vector<std::uint8_t>& values() const { return c_; }

  std::size_t num_changes() const;
  std::size_t num_blocks() const { return num_changes() + 1; }

  // 1-based times at which a new block starts (t+1 for every c_t = 1).
  std::vector<std::size_t> change_times() const;

  bool operator==(const ChangeIndicators&) const = default;

 private:
  std::vector<std::uint8_t> c_;
  std::size_t n_ = 0;
};

// Cluster labels e_1..e_n with e_1 = 1 and unit-or-zero increments.
class ClusterLabels {
 public:
  ClusterLabels() = default;
  explicit ClusterLabels(std::vector<int> e);

  std::size_t n() const { return e_.size(); }
  int operator[](std::size_t j) const { return e_[j]; }
  const std::vector<int>& values() const { return e_; }
  int num_blocks() const { return e_.empty() ? 0 : e_.back(); }

  bool operator==(const ClusterLabels&) const = default;

 private:
  std::vector<int> e_;
};

// Ordered blocks S_1..S_k covering {1..n}; tau_j is the right endpoint of S_j.
class BlockSet {
 public:
  BlockSet() = default;
  explicit BlockSet(std::vector<Interval> blocks);

  std::size_t n() const { return blocks_.empty() ? 0 : blocks_.back().last; }
  std::size_t num_blocks() const { return blocks_.size(); }
  const std::vector<Interval>& blocks() const& { return blocks_; }
  std::vector<Interval> blocks() && { return std::move(blocks_); }
  std::vector<std::size_t> tau() const;

  bool operator==(const BlockSet&) const = default;

 private:
  std::vector<Interval> blocks_;
};

ClusterLabels labels_from_indicators(const ChangeIndicators& c);
ChangeIndicators indicators_from_labels(const ClusterLabels& e);
BlockSet blocks_from_labels(const ClusterLabels& e);
ClusterLabels labels_from_blocks(const BlockSet& b);

BlockSet blocks_from_indicators(const ChangeIndicators& c);
ChangeIndicators indicators_from_blocks(const BlockSet& b);

inline constexpr std::size_t kMaxEnumerationLength = 20;

// Visits every contiguous partition of {1..n} (all 2^{n-1} indicator
// vectors) exactly once. Order: binary counting with c_1 as the least
// significant bit. Refuses n outside [2, kMaxEnumerationLength].
void for_each_contiguous(std::size_t n, const std::function<void(const ChangeIndicators&)>& visit);
std::vector<ChangeIndicators> enumerate_contiguous(std::size_t n);

}  // namespace ccppm
