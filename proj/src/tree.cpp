#include "wbis/tree.hpp"

#include <algorithm>

#include "wbis/error.hpp"

namespace wbis {

NodeIndex::NodeIndex(std::initializer_list<std::uint32_t> path) : NodeIndex(std::vector<std::uint32_t>(path)) {}

NodeIndex::NodeIndex(std::vector<std::uint32_t> path) : path_(std::move(path)) {
  if (std::find(path_.begin(), path_.end(), 0u) != path_.end()) {
    throw Error(ErrorCode::InvalidArgument, "node index entries must be >= 1");
  }
}

NodeIndex NodeIndex::truncate(std::size_t n) const {
  if (n > path_.size()) {
    throw Error(ErrorCode::InvalidArgument, "truncation beyond the node's generation");
  }
  NodeIndex out;
  out.path_.assign(path_.begin(), path_.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

std::string NodeIndex::to_string() const {
  if (path_.empty()) return "()";
  std::string out = "(";
  for (std::size_t k = 0; k < path_.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(path_[k]);
  }
  out += ')';
  return out;
}

NodeIndex child(const NodeIndex& parent, std::uint32_t j) {
  if (j == 0) throw Error(ErrorCode::InvalidArgument, "child number must be >= 1");
  auto path = parent.path();
  path.push_back(j);
  return NodeIndex(std::move(path));
}

std::strong_ordering lenlex_compare(const NodeIndex& a, const NodeIndex& b) {
  if (auto c = a.generation() <=> b.generation(); c != 0) return c;
  return std::lexicographical_compare_three_way(a.path().begin(), a.path().end(), b.path().begin(),
                                                b.path().end());
}

NodeState Frontier::advance() {
  if (queue_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "frontier exhausted before the level was crossed");
  }
  NodeState next = std::move(queue_.front());
  queue_.pop_front();
  return next;
}

}  // namespace wbis
