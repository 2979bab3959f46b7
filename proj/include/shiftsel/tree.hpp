#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

namespace shiftsel {

struct TreeSpec {
  int max_depth = 3;
  int min_samples_leaf = 5;

  void validate() const;
  bool operator==(const TreeSpec&) const = default;
};

struct TreeNode {
  int feature = -1;        // -1 for leaves
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  int depth = 0;
  std::size_t samples = 0;
  std::vector<double> value;  // mean target vector of the node's samples

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// CART regression/classification tree on multi-output targets. The split
/// criterion is the sum over outputs of the binary Gini impurity 2p(1-p)
/// (for one-hot targets this is twice the multi-class Gini). Splits need a
/// strictly positive impurity decrease and min_samples_leaf on each side;
/// ties go to the lowest feature, then the lowest threshold.
class DecisionTree {
 public:
  static DecisionTree fit(std::span<const double> x, std::size_t rows, std::size_t cols,
                          std::span<const double> targets, std::size_t outputs, const TreeSpec& spec);

  const std::vector<double>& predict(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t inputs() const noexcept { return inputs_; }
  std::size_t leaf_count() const;
  int depth() const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);
  bool operator==(const DecisionTree&) const = default;

 private:
  std::size_t inputs_ = 0;
  std::vector<TreeNode> nodes_;  // nodes_[0] is the root
};

}  // namespace shiftsel
