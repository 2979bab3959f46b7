#include "shiftsel/tree.hpp"

#include <algorithm>
#include <numeric>

#include "shiftsel/error.hpp"

namespace shiftsel {

void TreeSpec::validate() const {
  if (max_depth < 1) throw Error(ErrorKind::kInvalidArgument, "tree: max_depth must be >= 1");
  if (min_samples_leaf < 1) throw Error(ErrorKind::kInvalidArgument, "tree: min_samples_leaf must be >= 1");
}

namespace {

struct Builder {
  std::span<const double> x;
  std::size_t cols;
  std::span<const double> y;
  std::size_t outputs;
  TreeSpec spec;
  std::vector<TreeNode> nodes;

  // Sum over outputs of 2 p (1 - p) scaled by the sample count.
  double weighted_gini(const std::vector<double>& sums, double count) const {
    if (count <= 0.0) return 0.0;
    double g = 0.0;
    for (double s : sums) {
      const double p = s / count;
      g += 2.0 * p * (1.0 - p);
    }
    return g * count;
  }

  int grow(std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const double count = static_cast<double>(rows.size());
    std::vector<double> total(outputs, 0.0);
    for (auto i : rows) {
      for (std::size_t m = 0; m < outputs; ++m) total[m] += y[i * outputs + m];
    }
    {
      TreeNode& node = nodes[static_cast<std::size_t>(id)];
      node.depth = depth;
      node.samples = rows.size();
      node.value.resize(outputs);
      for (std::size_t m = 0; m < outputs; ++m) node.value[m] = total[m] / count;
    }
    if (depth >= spec.max_depth) return id;
    const auto min_leaf = static_cast<std::size_t>(spec.min_samples_leaf);
    if (rows.size() < 2 * min_leaf) return id;

    const double parent = weighted_gini(total, count);
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order = rows;
    std::vector<double> left(outputs), right(outputs);
    for (std::size_t f = 0; f < cols; ++f) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x[a * cols + f] < x[b * cols + f]; });
      std::fill(left.begin(), left.end(), 0.0);
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const std::size_t i = order[k];
        for (std::size_t m = 0; m < outputs; ++m) left[m] += y[i * outputs + m];
        const double lo = x[i * cols + f];
        const double hi = x[order[k + 1] * cols + f];
        if (!(lo < hi)) continue;
        const std::size_t nl = k + 1, nr = order.size() - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        for (std::size_t m = 0; m < outputs; ++m) right[m] = total[m] - left[m];
        const double gain =
            parent - weighted_gini(left, static_cast<double>(nl)) - weighted_gini(right, static_cast<double>(nr));
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = lo + (hi - lo) / 2.0;
          if (!(best_threshold < hi)) best_threshold = lo;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> lrows, rrows;
    for (auto i : rows) {
      (x[i * cols + static_cast<std::size_t>(best_feature)] <= best_threshold ? lrows : rrows).push_back(i);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(lrows), depth + 1);
    const int r = grow(std::move(rrows), depth + 1);
    TreeNode& node = nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }
};

}  // namespace

DecisionTree DecisionTree::fit(std::span<const double> x, std::size_t rows, std::size_t cols,
                               std::span<const double> targets, std::size_t outputs, const TreeSpec& spec) {
  spec.validate();
  if (rows == 0) throw Error(ErrorKind::kDegenerateInput, "tree: no training rows");
  if (x.size() != rows * cols || targets.size() != rows * outputs) {
    throw Error(ErrorKind::kInvalidArgument, "tree: input or target size mismatch");
  }
  Builder b{x, cols, targets, outputs, spec, {}};
  std::vector<std::size_t> all(rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  b.grow(std::move(all), 0);
  DecisionTree tree;
  tree.inputs_ = cols;
  tree.nodes_ = std::move(b.nodes);
  return tree;
}

const std::vector<double>& DecisionTree::predict(std::span<const double> x) const {
  if (x.size() != inputs_) throw Error(ErrorKind::kInvalidArgument, "tree: input length mismatch");
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    const int next = x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right;
    node = &nodes_[static_cast<std::size_t>(next)];
  }
  return node->value;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int DecisionTree::depth() const {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"depth", n.depth},
                     {"samples", n.samples},
                     {"value", n.value}});
  }
  return {{"inputs", inputs_}, {"nodes", nodes}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  DecisionTree t;
  t.inputs_ = j.at("inputs").get<std::size_t>();
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.depth = n.at("depth").get<int>();
    node.samples = n.at("samples").get<std::size_t>();
    node.value = n.at("value").get<std::vector<double>>();
    t.nodes_.push_back(std::move(node));
  }
  const auto count = static_cast<int>(t.nodes_.size());
  if (count == 0) throw Error(ErrorKind::kSchema, "tree: no nodes");
  for (const auto& n : t.nodes_) {
    if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count ||
                         static_cast<std::size_t>(n.feature) >= t.inputs_)) {
      throw Error(ErrorKind::kSchema, "tree: malformed node");
    }
  }
  return t;
}

}  // namespace shiftsel
