#pragma once

#include <cstddef>
#include <vector>

namespace maleval::gbdt {

struct GbdtConfig {
  int rounds = 40;
  int max_depth = 2;
  double learning_rate = 0.3;
  std::size_t min_leaf = 2;
};

/// Multi-class gradient-boosted regression trees with a softmax objective.
/// Exposes calibrated class probabilities; training is fully deterministic
/// (exact greedy splits, no subsampling).
class GbdtClassifier {
 public:
  void fit(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
           std::size_t n_classes, const GbdtConfig& config = {});

  std::vector<double> predict_proba(const std::vector<double>& features) const;
  int predict(const std::vector<double>& features) const;

  bool trained() const { return n_classes_ > 0; }
  std::size_t n_classes() const { return n_classes_; }

 private:
  struct Node {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0.0; // go left when x[feature] <= threshold
    double value = 0.0;     // leaf output
    int left = -1;
    int right = -1;
  };
  using Tree = std::vector<Node>;

  double tree_value(const Tree& tree, const std::vector<double>& features) const;

  std::size_t n_classes_ = 0;
  std::vector<double> base_score_;               // log prior per class
  std::vector<std::vector<Tree>> rounds_;        // rounds_[r][k]
  double learning_rate_ = 0.3;
};

}  // namespace maleval::gbdt
