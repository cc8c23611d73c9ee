#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tjgen {

using Sample = std::vector<double>;
using Samples = std::vector<Sample>;

// --- random forest ----------------------------------------------------------

struct ForestParams {
  int trees = 100;
  int max_depth = 12;
  int features_per_split = 0;  // 0 selects floor(sqrt(d))
  int min_samples_split = 2;
  std::uint64_t seed = 1;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double p_pos = 0.0;  // class-weighted positive fraction at this node
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  double predict(std::span<const double> x) const;
};

/// Binary random forest. Class weights follow the balanced scheme
/// w_c = N / (2 N_c), applied to Gini impurity and leaf estimates.
class Forest {
 public:
  Forest() = default;
  Forest(std::size_t n_features, std::array<double, 2> class_weights, std::vector<DecisionTree> trees)
      : n_features_(n_features), class_weights_(class_weights), trees_(std::move(trees)) {}

  std::size_t n_features() const { return n_features_; }
  std::array<double, 2> class_weights() const { return class_weights_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  /// {P(negative), P(positive)}; throws DimensionMismatch.
  std::array<double, 2> predict_proba(std::span<const double> x) const;
  double fitness(std::span<const double> x) const { return predict_proba(x)[1]; }

 private:
  std::size_t n_features_ = 0;
  std::array<double, 2> class_weights_{1.0, 1.0};
  std::vector<DecisionTree> trees_;
};

/// Throws EmptyClass when either class is empty, DimensionMismatch on ragged rows.
Forest train_classifier(const Samples& positives, const Samples& negatives, const ForestParams& params = {});

/// Positive-class probability per row.
std::vector<double> score_nets(const Forest& model, const Samples& rows);

// --- Gaussian mixture -------------------------------------------------------

struct MixtureComponent {
  double weight = 1.0;
  std::vector<double> mean;
  std::vector<double> var;
};

struct MixtureParams {
  int max_components = 4;
  int max_iterations = 300;
  double tolerance = 1e-8;
  double variance_floor = 1e-6;
  std::uint64_t seed = 1;
};

struct Mixture {
  std::vector<MixtureComponent> components;
  std::vector<double> log_likelihood_trace;  // per EM iteration of the chosen fit
  double bic = 0.0;

  std::size_t dims() const { return components.empty() ? 0 : components.front().mean.size(); }
  double log_likelihood(const Samples& x) const;
};

/// Diagonal-covariance EM, component count chosen by BIC over 1..max_components.
/// Throws TooFewSamples below two samples.
Mixture fit_mixture(const Samples& samples, const MixtureParams& params = {});

/// One EM fit with a fixed component count; exposed for property tests.
Mixture fit_mixture_k(const Samples& samples, int k, const MixtureParams& params);

/// Draws one vector: component by weight, then a Gaussian draw, clamped to [0, 1].
Sample sample_reference(const Mixture& m, std::uint64_t seed);

// --- affinity propagation ---------------------------------------------------

struct ApParams {
  double damping = 0.8;
  int max_iterations = 500;
  int convergence_iterations = 15;
  std::uint64_t seed = 0;  // tie-breaking noise
};

struct Clustering {
  std::vector<std::size_t> exemplars;  // sample indices, ascending
  std::vector<std::size_t> labels;     // per sample, index into exemplars
  bool converged = true;
  int iterations = 0;

  std::size_t clusters() const { return exemplars.size(); }
  std::size_t exemplar_of(std::size_t i) const { return exemplars[labels[i]]; }
};

/// Row-major square matrix.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> v;

  explicit SquareMatrix(std::size_t size = 0, double fill = 0.0) : n(size), v(size * size, fill) {}
  double& operator()(std::size_t i, std::size_t j) { return v[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * n + j]; }
};

SquareMatrix negative_squared_euclidean(const Samples& x);

/// Responsibility/availability message passing; preference is the median of
/// the similarity matrix. A run that hits the iteration limit still returns
/// its last exemplar set with `converged == false`.
Clustering affinity_propagation(const SquareMatrix& similarity, const ApParams& params = {});

}  // namespace tjgen
