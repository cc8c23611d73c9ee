#include <algorithm>
#include <cmath>
#include <numeric>

#include "tjgen/error.hpp"
#include "tjgen/ml.hpp"
#include "tjgen/rng.hpp"

namespace tjgen {
namespace {

struct Dataset {
  const std::vector<const Sample*>& x;
  const std::vector<std::uint8_t>& y;
  std::size_t d;
};

struct Entry {
  std::uint32_t index;
  double weight;
};

double gini(double w0, double w1) {
  const double w = w0 + w1;
  if (w <= 0) return 0.0;
  const double p0 = w0 / w, p1 = w1 / w;
  return 1.0 - p0 * p0 - p1 * p1;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const ForestParams& p, int mtry, Rng& rng)
      : data_(data), params_(p), mtry_(mtry), rng_(rng) {}

  DecisionTree build(std::vector<Entry> entries, std::vector<int> multiplicity) {
    multiplicity_ = std::move(multiplicity);
    DecisionTree tree;
    grow(tree, entries, 0);
    return tree;
  }

 private:
  int grow(DecisionTree& tree, std::vector<Entry>& entries, int depth) {
    double w[2] = {0, 0};
    int count = 0;
    for (const Entry& e : entries) {
      w[data_.y[e.index]] += e.weight;
      count += multiplicity_[e.index];
    }
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[id].p_pos = w[1] / (w[0] + w[1]);
    if (depth >= params_.max_depth || count < params_.min_samples_split || w[0] == 0 || w[1] == 0) return id;

    const double parent = (w[0] + w[1]) * gini(w[0], w[1]);
    double best = parent - 1e-12;
    int best_feature = -1;
    double best_threshold = 0;

    std::vector<std::size_t> features(data_.d);
    std::iota(features.begin(), features.end(), 0);
    rng_.shuffle(features.begin(), features.end());
    int visited = 0;
    for (std::size_t f : features) {
      if (visited >= mtry_) break;
      std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
        const double va = (*data_.x[a.index])[f], vb = (*data_.x[b.index])[f];
        return va != vb ? va < vb : a.index < b.index;
      });
      const double lo = (*data_.x[entries.front().index])[f];
      const double hi = (*data_.x[entries.back().index])[f];
      if (lo == hi) continue;  // constant here; does not count toward mtry
      ++visited;
      double left[2] = {0, 0};
      for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
        left[data_.y[entries[i].index]] += entries[i].weight;
        const double v = (*data_.x[entries[i].index])[f];
        const double next = (*data_.x[entries[i + 1].index])[f];
        if (v == next) continue;
        const double r0 = w[0] - left[0], r1 = w[1] - left[1];
        const double score = (left[0] + left[1]) * gini(left[0], left[1]) + (r0 + r1) * gini(r0, r1);
        if (score < best) {
          best = score;
          best_feature = static_cast<int>(f);
          best_threshold = v + (next - v) / 2;
          if (best_threshold >= next) best_threshold = v;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<Entry> left_entries, right_entries;
    for (const Entry& e : entries) {
      ((*data_.x[e.index])[best_feature] <= best_threshold ? left_entries : right_entries).push_back(e);
    }
    entries.clear();
    entries.shrink_to_fit();
    const int l = grow(tree, left_entries, depth + 1);
    const int r = grow(tree, right_entries, depth + 1);
    TreeNode& node = tree.nodes[id];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const Dataset& data_;
  const ForestParams& params_;
  int mtry_;
  Rng& rng_;
  std::vector<int> multiplicity_;
};

}  // namespace

double DecisionTree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes[i].feature >= 0) {
    i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  }
  return nodes[i].p_pos;
}

std::array<double, 2> Forest::predict_proba(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(n_features_) + " features, got " + std::to_string(x.size()));
  }
  if (trees_.empty()) return {0.5, 0.5};
  double sum = 0;
  for (const DecisionTree& t : trees_) sum += t.predict(x);
  const double p = sum / static_cast<double>(trees_.size());
  return {1.0 - p, p};
}

Forest train_classifier(const Samples& positives, const Samples& negatives, const ForestParams& params) {
  if (positives.empty()) throw Error(ErrorCode::EmptyClass, "no positive samples");
  if (negatives.empty()) throw Error(ErrorCode::EmptyClass, "no negative samples");
  if (params.trees < 1 || params.max_depth < 0) throw Error(ErrorCode::InvalidArgument, "bad forest parameters");
  const std::size_t d = positives.front().size();

  std::vector<const Sample*> x;
  std::vector<std::uint8_t> y;
  for (const Sample& s : negatives) {
    x.push_back(&s);
    y.push_back(0);
  }
  for (const Sample& s : positives) {
    x.push_back(&s);
    y.push_back(1);
  }
  for (const Sample* s : x) {
    if (s->size() != d) throw Error(ErrorCode::DimensionMismatch, "ragged training rows");
  }
  const double n = static_cast<double>(x.size());
  const std::array<double, 2> cw = {n / (2.0 * static_cast<double>(negatives.size())),
                                    n / (2.0 * static_cast<double>(positives.size()))};
  int mtry = params.features_per_split > 0 ? params.features_per_split
                                           : static_cast<int>(std::floor(std::sqrt(static_cast<double>(d))));
  mtry = std::clamp(mtry, 1, static_cast<int>(std::max<std::size_t>(d, 1)));

  const Dataset data{x, y, d};
  std::vector<DecisionTree> trees;
  trees.reserve(params.trees);
  for (int t = 0; t < params.trees; ++t) {
    Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
    std::vector<int> mult(x.size(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) ++mult[rng.below(x.size())];
    std::vector<Entry> entries;
    for (std::uint32_t i = 0; i < x.size(); ++i) {
      if (mult[i] > 0) entries.push_back({i, mult[i] * cw[y[i]]});
    }
    TreeBuilder builder(data, params, mtry, rng);
    trees.push_back(builder.build(std::move(entries), std::move(mult)));
  }
  return Forest(d, cw, std::move(trees));
}

std::vector<double> score_nets(const Forest& model, const Samples& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const Sample& r : rows) out.push_back(model.fitness(r));
  return out;
}

}  // namespace tjgen
