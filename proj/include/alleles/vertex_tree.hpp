#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace alleles {

/// Vertex of the universal tree: a finite sequence of positive integers.
/// The empty sequence is the root.
class UVertex {
 public:
  UVertex() = default;
  explicit UVertex(std::vector<std::uint32_t> path);

  static UVertex root() { return {}; }
  /// Parses "/" (root) or "/i/j/..."; the leading slash is optional.
  static UVertex parse(std::string_view text);

  std::size_t level() const { return path_.size(); }
  bool is_root() const { return path_.empty(); }
  const std::vector<std::uint32_t>& path() const { return path_; }
  UVertex child(std::uint32_t j) const;
  UVertex parent() const;
  std::string to_string() const;

  auto operator<=>(const UVertex&) const = default;

 private:
  std::vector<std::uint32_t> path_;
};

/// Tree indexed by vertices of the universal tree with a positive mass on
/// every stored vertex. Nodes live in breadth-first order and the children
/// of a node form one contiguous block, ranked by nonincreasing mass; an
/// absent vertex has mass zero.
///
/// `degree` is the outer degree of the vertex. It equals the number of
/// stored children except on the last level of a depth-limited tree, where
/// children are counted but not expanded.
template <class Mass>
class VertexTree {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  struct Node {
    Mass size;
    std::uint64_t degree;
    std::uint32_t level;
    std::uint32_t rank;  // j such that this node is child j of its parent (0 for the root)
    std::size_t parent;
    std::size_t first_child;
    std::size_t child_count;
  };

  struct Child {
    Mass size;
    std::uint64_t degree;
  };

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::size_t index) const { return nodes_.at(index); }

  std::size_t add_root(Mass size, std::uint64_t degree = 0) {
    if (!nodes_.empty()) throw std::logic_error("VertexTree: root already present");
    if (!(size > Mass(0))) throw std::logic_error("VertexTree: root must have positive size");
    nodes_.push_back({size, degree, 0, 0, npos, npos, 0});
    return 0;
  }

  /// Appends the child block of `parent`. Blocks must be appended in
  /// breadth-first order of their parents, sizes must be positive and
  /// nonincreasing. Returns the index of the first child.
  std::size_t append_children(std::size_t parent, std::span<const Child> children) {
    if (parent >= nodes_.size()) throw std::logic_error("VertexTree: unknown parent");
    if (parent < last_parent_ && last_parent_ != npos) throw std::logic_error("VertexTree: blocks out of order");
    Node& p = nodes_[parent];
    if (p.child_count != 0) throw std::logic_error("VertexTree: children already set");
    const std::size_t first = nodes_.size();
    for (std::size_t j = 0; j < children.size(); ++j) {
      if (!(children[j].size > Mass(0))) throw std::logic_error("VertexTree: child with nonpositive size");
      if (j > 0 && children[j - 1].size < children[j].size) throw std::logic_error("VertexTree: siblings not ranked");
    }
    const std::uint32_t level = nodes_[parent].level + 1;
    for (std::size_t j = 0; j < children.size(); ++j) {
      nodes_.push_back({children[j].size, children[j].degree, level, static_cast<std::uint32_t>(j + 1), parent, npos, 0});
    }
    nodes_[parent].first_child = children.empty() ? npos : first;
    nodes_[parent].child_count = children.size();
    last_parent_ = parent;
    return first;
  }

  std::span<const Node> children(std::size_t index) const {
    const Node& n = nodes_.at(index);
    if (n.child_count == 0) return {};
    return std::span<const Node>(nodes_).subspan(n.first_child, n.child_count);
  }

  std::optional<std::size_t> find(const UVertex& v) const {
    if (nodes_.empty()) return std::nullopt;
    std::size_t at = 0;
    for (std::uint32_t j : v.path()) {
      const Node& n = nodes_[at];
      if (j == 0 || j > n.child_count) return std::nullopt;
      at = n.first_child + (j - 1);
    }
    return at;
  }

  /// Mass at v, zero when v is not stored.
  Mass mass(const UVertex& v) const {
    auto i = find(v);
    return i ? nodes_[*i].size : Mass(0);
  }

  std::uint64_t degree(const UVertex& v) const {
    auto i = find(v);
    return i ? nodes_[*i].degree : 0;
  }

  UVertex path(std::size_t index) const {
    std::vector<std::uint32_t> rev;
    for (std::size_t at = index; at != 0; at = nodes_.at(at).parent) rev.push_back(nodes_[at].rank);
    return UVertex(std::vector<std::uint32_t>(rev.rbegin(), rev.rend()));
  }

  std::size_t levels() const { return nodes_.empty() ? 0 : nodes_.back().level + 1; }

  /// Sum of masses per level.
  std::vector<Mass> level_sums() const {
    std::vector<Mass> out(levels(), Mass(0));
    for (const auto& n : nodes_) out[n.level] += n.size;
    return out;
  }

  /// Node indices in depth-first (preorder) order.
  std::vector<std::size_t> depth_first_order() const {
    std::vector<std::size_t> out;
    if (nodes_.empty()) return out;
    out.reserve(nodes_.size());
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
      const std::size_t at = stack.back();
      stack.pop_back();
      out.push_back(at);
      const Node& n = nodes_[at];
      for (std::size_t j = n.child_count; j-- > 0;) stack.push_back(n.first_child + j);
    }
    return out;
  }

  /// Set when the last stored level was not expanded.
  std::optional<std::size_t> depth_limit;

  /// Throws std::logic_error if a structural invariant fails.
  void validate() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      if (!(n.size > Mass(0))) throw std::logic_error("VertexTree: stored vertex with zero size");
      const bool frontier = depth_limit && n.level == *depth_limit;
      if (frontier ? n.child_count != 0 : n.degree != n.child_count) {
        throw std::logic_error("VertexTree: degree does not match stored children");
      }
      if (i != 0) {
        const Node& p = nodes_[n.parent];
        if (n.parent >= i || n.level != p.level + 1) throw std::logic_error("VertexTree: broken parent link");
      }
      auto kids = children(i);
      for (std::size_t j = 1; j < kids.size(); ++j) {
        if (kids[j - 1].size < kids[j].size) throw std::logic_error("VertexTree: siblings not ranked");
      }
    }
  }

 private:
  std::vector<Node> nodes_;
  std::size_t last_parent_ = npos;
};

}  // namespace alleles
