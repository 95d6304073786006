#include "ccppm/partition.hpp"

#include <numeric>
#include <string>

#include "ccppm/error.hpp"

namespace ccppm {

ChangeIndicators::ChangeIndicators(std::vector<std::uint8_t> c, std::size_t n) : c_(std::move(c)), n_(n) {
  if (n_ < 2) throw InvalidInput("change indicators need n >= 2, got n = " + std::to_string(n_));
  if (c_.size() != n_ - 1) {
    throw InvalidInput("change indicators have length " + std::to_string(c_.size()) + ", expected n - 1 = " +
                       std::to_string(n_ - 1));
  }
  for (std::size_t j = 0; j < c_.size(); ++j) {
    if (c_[j] > 1) throw InvalidInput("change indicator c_" + std::to_string(j + 1) + " is not 0/1");
  }
}

ChangeIndicators ChangeIndicators::none(std::size_t n) {
  if (n < 2) throw InvalidInput("change indicators need n >= 2");
  return ChangeIndicators(std::vector<std::uint8_t>(n - 1, 0), n);
}

std::size_t ChangeIndicators::num_changes() const {
  return std::accumulate(c_.begin(), c_.end(), std::size_t{0});
}

std::vector<std::size_t> ChangeIndicators::change_times() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < c_.size(); ++j) {
    if (c_[j]) out.push_back(j + 2);
  }
  return out;
}

ClusterLabels::ClusterLabels(std::vector<int> e) : e_(std::move(e)) {
  if (e_.empty()) throw InvalidInput("cluster labels are empty");
  if (e_[0] != 1) throw InvalidInput("cluster labels must start at 1");
  for (std::size_t t = 1; t < e_.size(); ++t) {
    const int step = e_[t] - e_[t - 1];
    if (step != 0 && step != 1) {
      throw InvalidInput("cluster labels are not contiguous at position " + std::to_string(t + 1));
    }
  }
}

BlockSet::BlockSet(std::vector<Interval> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw InvalidInput("block set is empty");
  std::size_t next = 1;
  for (const auto& b : blocks_) {
    if (b.first != next || b.last < b.first) throw InvalidInput("blocks are not consecutive nonempty intervals");
    next = b.last + 1;
  }
}

std::vector<std::size_t> BlockSet::tau() const {
  std::vector<std::size_t> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back(b.last);
  return out;
}

ClusterLabels labels_from_indicators(const ChangeIndicators& c) {
  std::vector<int> e(c.n());
  e[0] = 1;
  for (std::size_t j = 0; j < c.size(); ++j) e[j + 1] = e[j] + c[j];
  return ClusterLabels(std::move(e));
}

ChangeIndicators indicators_from_labels(const ClusterLabels& e) {
  if (e.n() < 2) throw InvalidInput("labels of length < 2 have no indicator form");
  std::vector<std::uint8_t> c(e.n() - 1);
  for (std::size_t j = 0; j + 1 < e.n(); ++j) c[j] = static_cast<std::uint8_t>(e[j + 1] - e[j]);
  return ChangeIndicators(std::move(c), e.n());
}

BlockSet blocks_from_labels(const ClusterLabels& e) {
  std::vector<Interval> blocks;
  std::size_t start = 1;
  for (std::size_t t = 1; t < e.n(); ++t) {
    if (e[t] != e[t - 1]) {
      blocks.push_back({start, t});
      start = t + 1;
    }
  }
  blocks.push_back({start, e.n()});
  return BlockSet(std::move(blocks));
}

ClusterLabels labels_from_blocks(const BlockSet& b) {
  std::vector<int> e(b.n());
  int label = 1;
  for (const auto& blk : b.blocks()) {
    for (std::size_t t = blk.first; t <= blk.last; ++t) e[t - 1] = label;
    ++label;
  }
  return ClusterLabels(std::move(e));
}

BlockSet blocks_from_indicators(const ChangeIndicators& c) { return blocks_from_labels(labels_from_indicators(c)); }

ChangeIndicators indicators_from_blocks(const BlockSet& b) { return indicators_from_labels(labels_from_blocks(b)); }

void for_each_contiguous(std::size_t n, const std::function<void(const ChangeIndicators&)>& visit) {
  if (n < 2 || n > kMaxEnumerationLength) {
    throw InvalidInput("enumeration of contiguous partitions refused for n = " + std::to_string(n) +
                       " (allowed 2.." + std::to_string(kMaxEnumerationLength) + ")");
  }
  const std::size_t m = n - 1;
  const std::uint64_t total = std::uint64_t{1} << m;
  std::vector<std::uint8_t> c(m);
  for (std::uint64_t code = 0; code < total; ++code) {
    for (std::size_t j = 0; j < m; ++j) c[j] = static_cast<std::uint8_t>((code >> j) & 1U);
    visit(ChangeIndicators(c, n));
  }
}

std::vector<ChangeIndicators> enumerate_contiguous(std::size_t n) {
  std::vector<ChangeIndicators> out;
  for_each_contiguous(n, [&](const ChangeIndicators& c) { out.push_back(c); });
  return out;
}

}  // namespace ccppm
