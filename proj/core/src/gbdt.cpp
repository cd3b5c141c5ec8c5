#include "maleval/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace maleval::gbdt {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

double sum_of(const std::vector<double>& target, const std::vector<std::size_t>& indices) {
  double total = 0.0;
  for (std::size_t i : indices) {
    total += target[i];
  }
  return total;
}

// Variance-reduction split search; features scanned in ascending order so
// ties resolve deterministically.
Split best_split(const std::vector<std::vector<double>>& features,
                 const std::vector<double>& target, const std::vector<std::size_t>& indices,
                 std::size_t min_leaf) {
  Split best;
  const std::size_t n = indices.size();
  if (n < 2 * min_leaf) {
    return best;
  }
  const double total_sum = sum_of(target, indices);
  const std::size_t n_features = features[indices.front()].size();

  std::vector<std::pair<double, double>> column(n);  // (feature value, target)
  for (std::size_t f = 0; f < n_features; ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      column[i] = {features[indices[i]][f], target[indices[i]]};
    }
    std::sort(column.begin(), column.end());
    if (column.front().first == column.back().first) {
      continue;  // constant feature
    }
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += column[i].second;
      if (column[i].first == column[i + 1].first) {
        continue;
      }
      const std::size_t left_n = i + 1;
      const std::size_t right_n = n - left_n;
      if (left_n < min_leaf || right_n < min_leaf) {
        continue;
      }
      const double right_sum = total_sum - left_sum;
      const double gain = left_sum * left_sum / static_cast<double>(left_n) +
                          right_sum * right_sum / static_cast<double>(right_n) -
                          total_sum * total_sum / static_cast<double>(n);
      if (gain > best.gain + 1e-12) {
        best.gain = gain;
        best.feature = static_cast<int>(f);
        best.threshold = (column[i].first + column[i + 1].first) / 2.0;
      }
    }
  }
  return best;
}

}  // namespace

void GbdtClassifier::fit(const std::vector<std::vector<double>>& features,
                         const std::vector<int>& labels, std::size_t n_classes,
                         const GbdtConfig& config) {
  n_classes_ = n_classes;
  learning_rate_ = config.learning_rate;
  rounds_.clear();

  const std::size_t n = features.size();
  base_score_.assign(n_classes, 0.0);
  std::vector<double> class_count(n_classes, 0.0);
  for (int label : labels) {
    class_count[static_cast<std::size_t>(label)] += 1.0;
  }
  for (std::size_t k = 0; k < n_classes; ++k) {
    const double prior = std::max(class_count[k] / static_cast<double>(n), 1e-9);
    base_score_[k] = std::log(prior);
  }

  std::vector<std::vector<double>> score(n, base_score_);
  std::vector<double> residual(n);

  // Friedman's multi-class leaf value needs |r|(1-|r|) sums per leaf; those
  // are recomputed from the residuals routed to each leaf.
  const double k_factor =
      n_classes > 1 ? static_cast<double>(n_classes - 1) / static_cast<double>(n_classes) : 1.0;

  for (int round = 0; round < config.rounds; ++round) {
    std::vector<Tree> trees(n_classes);
    // softmax per sample under current scores
    std::vector<std::vector<double>> proba(n, std::vector<double>(n_classes));
    for (std::size_t i = 0; i < n; ++i) {
      double max_score = score[i][0];
      for (std::size_t k = 1; k < n_classes; ++k) {
        max_score = std::max(max_score, score[i][k]);
      }
      double denom = 0.0;
      for (std::size_t k = 0; k < n_classes; ++k) {
        proba[i][k] = std::exp(score[i][k] - max_score);
        denom += proba[i][k];
      }
      for (std::size_t k = 0; k < n_classes; ++k) {
        proba[i][k] /= denom;
      }
    }

    for (std::size_t k = 0; k < n_classes; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double y = labels[i] == static_cast<int>(k) ? 1.0 : 0.0;
        residual[i] = y - proba[i][k];
      }

      Tree& tree = trees[k];
      struct Frame {
        std::vector<std::size_t> indices;
        int depth;
        int node;
      };
      tree.push_back(Node{});
      std::vector<std::size_t> all(n);
      std::iota(all.begin(), all.end(), 0);
      std::vector<Frame> stack{{std::move(all), 0, 0}};
      while (!stack.empty()) {
        Frame frame = std::move(stack.back());
        stack.pop_back();

        Split split;
        if (frame.depth < config.max_depth) {
          split = best_split(features, residual, frame.indices, config.min_leaf);
        }
        if (split.feature < 0) {
          double numer = 0.0;
          double denom = 0.0;
          for (std::size_t i : frame.indices) {
            numer += residual[i];
            const double abs_r = std::fabs(residual[i]);
            denom += abs_r * (1.0 - abs_r);
          }
          tree[frame.node].feature = -1;
          tree[frame.node].value =
              denom > 1e-12 ? k_factor * numer / denom : 0.0;
          continue;
        }

        std::vector<std::size_t> left_indices;
        std::vector<std::size_t> right_indices;
        for (std::size_t i : frame.indices) {
          if (features[i][static_cast<std::size_t>(split.feature)] <= split.threshold) {
            left_indices.push_back(i);
          } else {
            right_indices.push_back(i);
          }
        }
        tree[frame.node].feature = split.feature;
        tree[frame.node].threshold = split.threshold;
        const int left = static_cast<int>(tree.size());
        tree.push_back(Node{});
        const int right = static_cast<int>(tree.size());
        tree.push_back(Node{});
        tree[frame.node].left = left;
        tree[frame.node].right = right;
        stack.push_back({std::move(right_indices), frame.depth + 1, right});
        stack.push_back({std::move(left_indices), frame.depth + 1, left});
      }

      for (std::size_t i = 0; i < n; ++i) {
        score[i][k] += learning_rate_ * tree_value(tree, features[i]);
      }
    }
    rounds_.push_back(std::move(trees));
  }
}

double GbdtClassifier::tree_value(const Tree& tree, const std::vector<double>& features) const {
  int node = 0;
  while (tree[static_cast<std::size_t>(node)].feature >= 0) {
    const Node& current = tree[static_cast<std::size_t>(node)];
    node = features[static_cast<std::size_t>(current.feature)] <= current.threshold
               ? current.left
               : current.right;
  }
  return tree[static_cast<std::size_t>(node)].value;
}

std::vector<double> GbdtClassifier::predict_proba(const std::vector<double>& features) const {
  std::vector<double> score = base_score_;
  for (const auto& trees : rounds_) {
    for (std::size_t k = 0; k < n_classes_; ++k) {
      score[k] += learning_rate_ * tree_value(trees[k], features);
    }
  }
  double max_score = score[0];
  for (std::size_t k = 1; k < n_classes_; ++k) {
    max_score = std::max(max_score, score[k]);
  }
  double denom = 0.0;
  for (std::size_t k = 0; k < n_classes_; ++k) {
    score[k] = std::exp(score[k] - max_score);
    denom += score[k];
  }
  for (auto& value : score) {
    value /= denom;
  }
  return score;
}

int GbdtClassifier::predict(const std::vector<double>& features) const {
  const auto proba = predict_proba(features);
  return static_cast<int>(std::max_element(proba.begin(), proba.end()) - proba.begin());
}

}  // namespace maleval::gbdt
