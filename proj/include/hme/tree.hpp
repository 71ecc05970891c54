// hme/tree.hpp -- binary gating tree shapes and path machinery.
//
// Copyright 2026 The hmevb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HME_TREE_HPP
#define HME_TREE_HPP

#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hme/util.hpp"

namespace hme {

/// Branch taken at a gating node. Left corresponds to the gate variable
/// z = 1, Right to z = 0.
enum class Branch { kLeft, kRight };

struct PathStep {
  int gate;
  Branch branch;
  friend bool operator==(const PathStep&, const PathStep&) = default;
};

/// An ordered full binary tree expression, used to build (possibly
/// non-canonical) shapes before conversion to TreeTopology. A node with
/// both children null is an expert leaf.
struct TreeNode {
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;

  bool IsLeaf() const { return left == nullptr && right == nullptr; }
};

inline std::unique_ptr<TreeNode> Leaf() { return std::make_unique<TreeNode>(); }

inline std::unique_ptr<TreeNode> Gate(std::unique_ptr<TreeNode> left,
                                      std::unique_ptr<TreeNode> right) {
  auto node = std::make_unique<TreeNode>();
  node->left = std::move(left);
  node->right = std::move(right);
  return node;
}

inline std::unique_ptr<TreeNode> CloneNode(const TreeNode& node) {
  if (node.IsLeaf()) return Leaf();
  return Gate(CloneNode(*node.left), CloneNode(*node.right));
}

/// The shape of a binary HME tree: M expert leaves and M-1 gating nodes.
/// Instances are immutable and always stored in canonical form, so two
/// topologies are mirror-equivalent iff they compare equal. Gates are
/// numbered in preorder; experts by left-to-right leaf order.
class TreeTopology {
 public:
  /// The single-expert tree (zero gates).
  static TreeTopology SingleExpert() { return TreeTopology(*Leaf()); }

  /// Canonicalizes an ordered full binary tree expression. Throws
  /// StructureError if some node has exactly one child.
  explicit TreeTopology(const TreeNode& root) {
    Validate(root);
    std::unique_ptr<TreeNode> canon = Canonical(root);
    num_experts_ = CountLeaves(*canon);
    left_child_.reserve(num_experts_ > 0 ? num_experts_ - 1 : 0);
    right_child_.reserve(left_child_.capacity());
    int next_expert = 0;
    Flatten(*canon, next_expert);
    BuildPaths();
  }

  /// A balanced-as-possible shape with the given number of leaves.
  static TreeTopology Balanced(int num_experts) {
    if (num_experts < 1) {
      throw std::invalid_argument("Balanced: num_experts must be >= 1");
    }
    return TreeTopology(*BalancedNode(num_experts));
  }

  int num_experts() const { return num_experts_; }
  int num_gates() const { return num_experts_ - 1; }

  /// Child references. Values >= 0 are gate ids; a value c < 0 encodes
  /// expert id -(c + 1).
  int left_child(int gate) const { return left_child_[gate]; }
  int right_child(int gate) const { return right_child_[gate]; }
  static bool IsExpertRef(int child) { return child < 0; }
  static int ExpertOf(int child) { return -(child + 1); }

  /// Root-to-leaf path for the given expert (empty for a single-expert
  /// tree). Throws std::invalid_argument if expert_id is out of range.
  const std::vector<PathStep>& path_to_expert(int expert_id) const {
    if (expert_id < 0 || expert_id >= num_experts_) {
      throw std::invalid_argument("path_to_expert: expert_id out of range");
    }
    return paths_[expert_id];
  }

  /// Experts whose path passes through the given gate's left/right subtree.
  const std::vector<int>& left_experts(int gate) const {
    return left_experts_[gate];
  }
  const std::vector<int>& right_experts(int gate) const {
    return right_experts_[gate];
  }

  int depth_of_expert(int expert_id) const {
    return static_cast<int>(path_to_expert(expert_id).size());
  }

  /// Canonical string form; equal iff mirror-equivalent.
  const std::string& canonical_string() const { return canonical_; }

  friend bool operator==(const TreeTopology& a, const TreeTopology& b) {
    return a.canonical_ == b.canonical_;
  }
  friend auto operator<=>(const TreeTopology& a, const TreeTopology& b) {
    return a.canonical_ <=> b.canonical_;
  }

  nlohmann::json ToJson() const {
    if (num_experts_ == 1) return nlohmann::json{{"expert", 0}};
    return NodeJson(0);
  }

  static TreeTopology FromJson(const nlohmann::json& j) {
    return TreeTopology(*ParseNode(j));
  }

 private:
  TreeTopology() = default;

  static void Validate(const TreeNode& node) {
    const bool has_left = node.left != nullptr;
    const bool has_right = node.right != nullptr;
    if (has_left != has_right) {
      throw StructureError("tree node with exactly one child");
    }
    if (has_left) {
      Validate(*node.left);
      Validate(*node.right);
    }
  }

  static int CountLeaves(const TreeNode& node) {
    if (node.IsLeaf()) return 1;
    return CountLeaves(*node.left) + CountLeaves(*node.right);
  }

  static std::string ShapeString(const TreeNode& node) {
    if (node.IsLeaf()) return "E";
    return "(" + ShapeString(*node.left) + ShapeString(*node.right) + ")";
  }

  // Orders each gate's children by (subtree leaf count, canonical string),
  // smaller first, so mirror duplicates collide.
  static std::unique_ptr<TreeNode> Canonical(const TreeNode& node) {
    if (node.IsLeaf()) return Leaf();
    std::unique_ptr<TreeNode> l = Canonical(*node.left);
    std::unique_ptr<TreeNode> r = Canonical(*node.right);
    const int nl = CountLeaves(*l);
    const int nr = CountLeaves(*r);
    if (nl > nr || (nl == nr && ShapeString(*l) > ShapeString(*r))) {
      std::swap(l, r);
    }
    return Gate(std::move(l), std::move(r));
  }

  // Assigns preorder gate ids and left-to-right expert ids; returns the
  // child reference for `node`.
  int Flatten(const TreeNode& node, int& next_expert) {
    if (node.IsLeaf()) return -(next_expert++ + 1);
    const int gate = static_cast<int>(left_child_.size());
    left_child_.push_back(0);
    right_child_.push_back(0);
    left_child_[gate] = Flatten(*node.left, next_expert);
    right_child_[gate] = Flatten(*node.right, next_expert);
    return gate;
  }

  void BuildPaths() {
    paths_.assign(num_experts_, {});
    left_experts_.assign(num_gates(), {});
    right_experts_.assign(num_gates(), {});
    if (num_gates() > 0) {
      std::vector<PathStep> prefix;
      Walk(0, prefix);
    }
    for (int j = 0; j < num_experts_; ++j) {
      for (const PathStep& step : paths_[j]) {
        (step.branch == Branch::kLeft ? left_experts_ : right_experts_)
            [step.gate].push_back(j);
      }
    }
    canonical_ = CanonicalOfFlat();
  }

  void Walk(int gate, std::vector<PathStep>& prefix) {
    for (const auto [child, branch] :
         {std::pair{left_child_[gate], Branch::kLeft},
          std::pair{right_child_[gate], Branch::kRight}}) {
      prefix.push_back({gate, branch});
      if (IsExpertRef(child)) {
        paths_[ExpertOf(child)] = prefix;
      } else {
        Walk(child, prefix);
      }
      prefix.pop_back();
    }
  }

  std::string CanonicalOfFlat() const {
    if (num_experts_ == 1) return "E";
    return FlatShapeString(0);
  }

  std::string FlatShapeString(int child) const {
    if (IsExpertRef(child)) return "E";
    return "(" + FlatShapeString(left_child_[child]) +
           FlatShapeString(right_child_[child]) + ")";
  }

  static std::unique_ptr<TreeNode> BalancedNode(int leaves) {
    if (leaves == 1) return Leaf();
    return Gate(BalancedNode(leaves / 2), BalancedNode(leaves - leaves / 2));
  }

  nlohmann::json NodeJson(int child) const {
    if (IsExpertRef(child)) return nlohmann::json{{"expert", ExpertOf(child)}};
    return nlohmann::json{{"gate",
                           {{"left", NodeJson(left_child_[child])},
                            {"right", NodeJson(right_child_[child])}}}};
  }

  static std::unique_ptr<TreeNode> ParseNode(const nlohmann::json& j) {
    if (j.contains("expert")) return Leaf();
    if (!j.contains("gate") || !j["gate"].contains("left") ||
        !j["gate"].contains("right")) {
      throw DataError("topology JSON: node must be {\"expert\": j} or "
                      "{\"gate\": {\"left\": ..., \"right\": ...}}");
    }
    return Gate(ParseNode(j["gate"]["left"]), ParseNode(j["gate"]["right"]));
  }

  int num_experts_ = 1;
  std::vector<int> left_child_;
  std::vector<int> right_child_;
  std::vector<std::vector<PathStep>> paths_;
  std::vector<std::vector<int>> left_experts_;
  std::vector<std::vector<int>> right_experts_;
  std::string canonical_;
};

/// Canonical representative of the mirror-equivalence class (identity on
/// TreeTopology, which is canonical by construction).
inline TreeTopology Canonicalize(const TreeTopology& tree) { return tree; }

inline TreeTopology Canonicalize(const TreeNode& root) {
  return TreeTopology(root);
}

/// All full binary tree shapes with the given number of leaves, one
/// representative per mirror-equivalence class, in a deterministic order.
/// Counts follow the Wedderburn-Etherington numbers.
inline std::vector<TreeTopology> EnumerateTopologies(int num_experts,
                                                     int max_experts = 8) {
  if (num_experts < 1 || num_experts > max_experts) {
    throw std::invalid_argument(
        "EnumerateTopologies: num_experts must be in [1, " +
        std::to_string(max_experts) + "]");
  }
  // shapes[m]: canonical shapes with m leaves, keyed for dedup.
  std::vector<std::map<std::string, std::unique_ptr<TreeNode>>> shapes(
      num_experts + 1);
  shapes[1].emplace("E", Leaf());
  for (int m = 2; m <= num_experts; ++m) {
    for (int k = 1; k <= m - 1; ++k) {
      for (const auto& [ls, lnode] : shapes[k]) {
        for (const auto& [rs, rnode] : shapes[m - k]) {
          auto combined = Gate(CloneNode(*lnode), CloneNode(*rnode));
          TreeTopology canon(*combined);
          if (!shapes[m].contains(canon.canonical_string())) {
            // Rebuild the canonical ordered node from the flat form.
            auto canon_node =
                Gate(CloneNode(*lnode), CloneNode(*rnode));
            shapes[m].emplace(canon.canonical_string(), std::move(canon_node));
          }
        }
      }
    }
  }
  std::vector<TreeTopology> out;
  out.reserve(shapes[num_experts].size());
  for (const auto& [key, node] : shapes[num_experts]) {
    out.push_back(TreeTopology(*node));
  }
  return out;
}

/// zeta indicator: the product of path-aligned gate values for the given
/// expert under a full gate assignment z (one {0,1} entry per gate).
/// Exactly one expert has indicator 1 for any full assignment.
inline int ZetaIndicator(const TreeTopology& tree, const std::vector<int>& z,
                         int expert_id) {
  if (static_cast<int>(z.size()) != tree.num_gates()) {
    throw std::invalid_argument("ZetaIndicator: z must assign every gate");
  }
  int prod = 1;
  for (const PathStep& step : tree.path_to_expert(expert_id)) {
    const int zi = z[step.gate];
    prod *= (step.branch == Branch::kLeft) ? zi : 1 - zi;
  }
  return prod;
}

}  // namespace hme

#endif  // HME_TREE_HPP
