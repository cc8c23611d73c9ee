#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tjgen/error.hpp"
#include "tjgen/ml.hpp"
#include "tjgen/rng.hpp"

namespace tjgen {
namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return (lo + hi) / 2;
}

Clustering singletons(std::size_t n) {
  Clustering c;
  c.exemplars.resize(n);
  std::iota(c.exemplars.begin(), c.exemplars.end(), 0);
  c.labels = c.exemplars;
  return c;
}

Clustering one_cluster(const SquareMatrix& s) {
  // Exemplar: the point with the largest total similarity to the rest.
  std::size_t best = 0;
  double best_sum = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < s.n; ++j) {
    double sum = 0;
    for (std::size_t i = 0; i < s.n; ++i) sum += s(i, j);
    if (sum > best_sum) {
      best_sum = sum;
      best = j;
    }
  }
  Clustering c;
  c.exemplars = {best};
  c.labels.assign(s.n, 0);
  return c;
}

// Assigns every point to its most similar exemplar; exemplars to themselves.
std::vector<std::size_t> assign(const SquareMatrix& s, const std::vector<std::size_t>& ex) {
  std::vector<std::size_t> c(s.n, 0);
  for (std::size_t i = 0; i < s.n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ex.size(); ++k) {
      if (s(i, ex[k]) > best) {
        best = s(i, ex[k]);
        c[i] = k;
      }
    }
  }
  for (std::size_t k = 0; k < ex.size(); ++k) c[ex[k]] = k;
  return c;
}

}  // namespace

SquareMatrix negative_squared_euclidean(const Samples& x) {
  SquareMatrix s(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != x[0].size()) throw Error(ErrorCode::DimensionMismatch, "ragged samples");
    for (std::size_t j = 0; j < i; ++j) {
      double d = 0;
      for (std::size_t k = 0; k < x[i].size(); ++k) d += (x[i][k] - x[j][k]) * (x[i][k] - x[j][k]);
      s(i, j) = s(j, i) = -d;
    }
  }
  return s;
}

Clustering affinity_propagation(const SquareMatrix& similarity, const ApParams& params) {
  if (!(params.damping >= 0.5 && params.damping < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "damping must lie in [0.5, 1)");
  }
  const std::size_t n = similarity.n;
  if (n == 0) throw Error(ErrorCode::TooFewSamples, "empty similarity matrix");
  if (n == 1) return singletons(1);

  const double preference = median(similarity.v);

  // Degenerate input: all off-diagonal similarities equal. Message passing
  // cannot break the symmetry, so decide directly.
  bool all_equal = true;
  double off = 0;
  bool first = true;
  for (std::size_t i = 0; i < n && all_equal; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (first) {
        off = similarity(i, j);
        first = false;
      } else if (similarity(i, j) != off) {
        all_equal = false;
        break;
      }
    }
  }
  if (all_equal) return preference > off ? singletons(n) : one_cluster(similarity);

  SquareMatrix s = similarity;
  for (std::size_t i = 0; i < n; ++i) s(i, i) = preference;
  // Tiny deterministic noise breaks exact ties between candidate exemplars.
  Rng rng(params.seed);
  for (double& x : s.v) {
    x += (std::numeric_limits<double>::epsilon() * x + std::numeric_limits<double>::min() * 100) * rng.normal();
  }

  SquareMatrix r(n), a(n), tmp(n);
  const double lambda = params.damping;
  const int conv = std::max(1, params.convergence_iterations);
  std::vector<std::vector<std::uint8_t>> history(n, std::vector<std::uint8_t>(conv, 0));
  std::vector<std::uint8_t> is_ex(n, 0);
  Clustering out;
  out.converged = false;

  int it = 0;
  for (; it < params.max_iterations; ++it) {
    // Responsibilities.
    for (std::size_t i = 0; i < n; ++i) {
      double first_v = -std::numeric_limits<double>::infinity(), second_v = first_v;
      std::size_t first_k = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double v = a(i, k) + s(i, k);
        if (v > first_v) {
          second_v = first_v;
          first_v = v;
          first_k = k;
        } else if (v > second_v) {
          second_v = v;
        }
      }
      for (std::size_t k = 0; k < n; ++k) {
        const double nr = s(i, k) - (k == first_k ? second_v : first_v);
        r(i, k) = lambda * r(i, k) + (1 - lambda) * nr;
      }
    }
    // Availabilities.
    for (std::size_t k = 0; k < n; ++k) {
      double col = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tmp(i, k) = i == k ? r(k, k) : std::max(0.0, r(i, k));
        col += tmp(i, k);
      }
      for (std::size_t i = 0; i < n; ++i) {
        double na = col - tmp(i, k);
        if (i != k) na = std::min(0.0, na);
        a(i, k) = lambda * a(i, k) + (1 - lambda) * na;
      }
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      is_ex[i] = (a(i, i) + r(i, i)) > 0;
      history[i][it % conv] = is_ex[i];
      count += is_ex[i];
    }
    if (it >= conv) {
      bool stable = true;
      for (std::size_t i = 0; i < n && stable; ++i) {
        int sum = 0;
        for (auto b : history[i]) sum += b;
        stable = sum == 0 || sum == conv;
      }
      if (stable && count > 0) {
        out.converged = true;
        ++it;
        break;
      }
    }
  }
  out.iterations = it;

  std::vector<std::size_t> ex;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_ex[i]) ex.push_back(i);
  }
  if (ex.empty()) {
    Clustering c = one_cluster(similarity);
    c.converged = false;
    c.iterations = it;
    return c;
  }
  // Refine: within each cluster pick the member with the largest summed
  // similarity to the others, then reassign.
  auto c = assign(s, ex);
  for (std::size_t k = 0; k < ex.size(); ++k) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (c[i] == k) members.push_back(i);
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j : members) {
      double sum = 0;
      for (std::size_t i : members) sum += s(i, j);
      if (sum > best) {
        best = sum;
        ex[k] = j;
      }
    }
  }
  c = assign(s, ex);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = ex[c[i]];
  std::vector<std::size_t> uniq = labels;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  out.exemplars = uniq;
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[i] = static_cast<std::size_t>(std::lower_bound(uniq.begin(), uniq.end(), labels[i]) - uniq.begin());
  }
  return out;
}

}  // namespace tjgen
