#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tjgen/error.hpp"
#include "tjgen/ml.hpp"
#include "tjgen/rng.hpp"

namespace tjgen {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_gauss(const MixtureComponent& c, const Sample& x) {
  double s = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double diff = x[j] - c.mean[j];
    s += std::log(2 * std::numbers::pi * c.var[j]) + diff * diff / c.var[j];
  }
  return -0.5 * s;
}

double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return m;
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double sq_dist(const Sample& a, const Sample& b) {
  double s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

// k-means++ seeding followed by a few Lloyd steps; returns a hard labelling.
std::vector<int> kmeans_labels(const Samples& x, int k, Rng& rng) {
  const std::size_t n = x.size();
  Samples centers;
  centers.push_back(x[rng.below(n)]);
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::numeric_limits<double>::infinity();
      for (const Sample& c : centers) d2[i] = std::min(d2[i], sq_dist(x[i], c));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total <= 0) {
      pick = rng.below(n);
    } else {
      double u = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        u -= d2[pick];
        if (u < 0) break;
      }
    }
    centers.push_back(x[pick]);
  }
  std::vector<int> label(n, 0);
  for (int iter = 0; iter < 20; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(x[i], centers[0]);
      for (int c = 1; c < k; ++c) {
        const double dc = sq_dist(x[i], centers[c]);
        if (dc < bd) {
          bd = dc;
          best = c;
        }
      }
      changed |= label[i] != best;
      label[i] = best;
    }
    if (!changed && iter > 0) break;
    for (int c = 0; c < k; ++c) {
      Sample sum(x[0].size(), 0.0);
      int count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != c) continue;
        ++count;
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += x[i][j];
      }
      if (count == 0) continue;
      for (double& s : sum) s /= count;
      centers[c] = std::move(sum);
    }
  }
  return label;
}

// M-step from (soft) responsibilities; components without mass keep their
// previous parameters and get weight 0.
void maximize(const Samples& x, const std::vector<std::vector<double>>& resp, double floor,
              std::vector<MixtureComponent>& comps) {
  const std::size_t n = x.size(), d = x[0].size();
  for (std::size_t c = 0; c < comps.size(); ++c) {
    double nk = 0;
    for (std::size_t i = 0; i < n; ++i) nk += resp[i][c];
    MixtureComponent& m = comps[c];
    m.weight = nk / static_cast<double>(n);
    if (nk <= 1e-300) continue;
    // Accumulate offsets from the first sample; identical data stays exact.
    std::vector<double> shift(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) shift[j] += resp[i][c] * (x[i][j] - x[0][j]);
    }
    m.mean.resize(d);
    for (std::size_t j = 0; j < d; ++j) m.mean[j] = x[0][j] + shift[j] / nk;
    m.var.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = x[i][j] - m.mean[j];
        m.var[j] += resp[i][c] * diff * diff;
      }
    }
    for (double& v : m.var) v = std::max(v / nk, floor);
  }
}

// E-step; fills responsibilities and returns the total log-likelihood.
double expect(const Samples& x, const std::vector<MixtureComponent>& comps, std::vector<std::vector<double>>& resp) {
  double ll = 0;
  std::vector<double> lp(comps.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t c = 0; c < comps.size(); ++c) {
      lp[c] = comps[c].weight > 0 ? std::log(comps[c].weight) + log_gauss(comps[c], x[i]) : kNegInf;
    }
    const double norm = log_sum_exp(lp);
    ll += norm;
    resp[i].resize(comps.size());
    for (std::size_t c = 0; c < comps.size(); ++c) resp[i][c] = lp[c] == kNegInf ? 0.0 : std::exp(lp[c] - norm);
  }
  return ll;
}

void check_samples(const Samples& samples) {
  if (samples.size() < 2) throw Error(ErrorCode::TooFewSamples, "mixture fit needs at least 2 samples");
  const std::size_t d = samples.front().size();
  if (d == 0) throw Error(ErrorCode::DimensionMismatch, "zero-dimensional samples");
  for (const Sample& s : samples) {
    if (s.size() != d) throw Error(ErrorCode::DimensionMismatch, "ragged samples");
  }
}

}  // namespace

double Mixture::log_likelihood(const Samples& x) const {
  std::vector<std::vector<double>> resp(x.size());
  return expect(x, components, resp);
}

Mixture fit_mixture_k(const Samples& samples, int k, const MixtureParams& params) {
  check_samples(samples);
  const std::size_t n = samples.size(), d = samples[0].size();
  k = std::clamp(k, 1, static_cast<int>(n));
  Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(k)));
  const auto label = kmeans_labels(samples, k, rng);

  std::vector<std::vector<double>> resp(n, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < n; ++i) resp[i][label[i]] = 1.0;
  std::vector<MixtureComponent> comps(k, MixtureComponent{0.0, Sample(d, 0.0), Sample(d, 1.0)});
  maximize(samples, resp, params.variance_floor, comps);

  Mixture m;
  double prev = kNegInf;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    const double ll = expect(samples, comps, resp);
    m.log_likelihood_trace.push_back(ll);
    if (ll - prev <= params.tolerance * std::max(1.0, std::abs(ll))) break;
    prev = ll;
    maximize(samples, resp, params.variance_floor, comps);
  }
  m.components = std::move(comps);
  const double p = static_cast<double>(k - 1) + 2.0 * k * static_cast<double>(d);
  m.bic = -2.0 * m.log_likelihood_trace.back() + p * std::log(static_cast<double>(n));
  return m;
}

Mixture fit_mixture(const Samples& samples, const MixtureParams& params) {
  check_samples(samples);
  const int kmax = std::clamp(params.max_components, 1, static_cast<int>(samples.size()));
  Mixture best;
  for (int k = 1; k <= kmax; ++k) {
    Mixture m = fit_mixture_k(samples, k, params);
    if (k == 1 || m.bic < best.bic) best = std::move(m);
  }
  // Drop components that lost all mass so weights stay a clean distribution.
  std::erase_if(best.components, [](const MixtureComponent& c) { return c.weight <= 0.0; });
  double total = 0;
  for (const auto& c : best.components) total += c.weight;
  for (auto& c : best.components) c.weight /= total;
  return best;
}

Sample sample_reference(const Mixture& m, std::uint64_t seed) {
  if (m.components.empty()) throw Error(ErrorCode::InvalidArgument, "empty mixture");
  Rng rng(seed);
  double u = rng.uniform();
  std::size_t pick = 0;
  for (; pick + 1 < m.components.size(); ++pick) {
    u -= m.components[pick].weight;
    if (u < 0) break;
  }
  const MixtureComponent& c = m.components[pick];
  Sample out(c.mean.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = std::clamp(c.mean[j] + std::sqrt(c.var[j]) * rng.normal(), 0.0, 1.0);
  }
  return out;
}

}  // namespace tjgen
