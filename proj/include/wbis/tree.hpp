#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

namespace wbis {

/// Ulam-Harris label of a tree node: the root is the empty sequence, the j-th
/// child of node i is (i, j). Every entry is >= 1.
class NodeIndex {
 public:
  NodeIndex() = default;
  NodeIndex(std::initializer_list<std::uint32_t> path);
  explicit NodeIndex(std::vector<std::uint32_t> path);

  static NodeIndex root() { return {}; }

  std::size_t generation() const { return path_.size(); }
  bool is_root() const { return path_.empty(); }
  const std::vector<std::uint32_t>& path() const { return path_; }

  /// i|n: the first n entries (the ancestor at generation n).
  NodeIndex truncate(std::size_t n) const;

  /// Last entry; only meaningful for non-root nodes.
  std::uint32_t last() const { return path_.back(); }

  bool operator==(const NodeIndex&) const = default;

  std::string to_string() const;

 private:
  std::vector<std::uint32_t> path_;
};

/// (i, j). Throws InvalidArgument for j == 0.
NodeIndex child(const NodeIndex& parent, std::uint32_t j);

/// Length-lexicographic order: shorter sequences first, ties broken
/// lexicographically.
std::strong_ordering lenlex_compare(const NodeIndex& a, const NodeIndex& b);

struct LenLexLess {
  bool operator()(const NodeIndex& a, const NodeIndex& b) const { return lenlex_compare(a, b) < 0; }
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// A materialized node. log_weight is S_i = log of the cumulative weight
/// (0 at the root); perturbation is Y_i = log Q_i, which stays at -inf until
/// the node's own branching vector is drawn (and is -inf for Q_i = 0).
struct NodeState {
  NodeIndex index;
  double log_weight = 0.0;
  double perturbation = kNegInf;
  bool on_spine = false;
};

/// FIFO of materialized but not yet expanded nodes. Because a parent is always
/// expanded before its children and children are pushed in order 1..N, the
/// pop order is the length-lexicographic order.
class Frontier {
 public:
  void push(NodeState node) { queue_.push_back(std::move(node)); }
  /// Removes and returns the least node. Throws InvalidArgument when empty.
  NodeState advance();
  bool empty() const { return queue_.empty(); }
  std::size_t size() const { return queue_.size(); }

 private:
  std::deque<NodeState> queue_;
};

}  // namespace wbis
