#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "tjgen/bundle.hpp"
#include "tjgen/error.hpp"
#include "tjgen/ml.hpp"
#include "tjgen/rng.hpp"

using namespace tjgen;

namespace {

Samples blob(Rng& rng, std::size_t count, const Sample& center, double sd) {
  Samples out;
  for (std::size_t i = 0; i < count; ++i) {
    Sample s(center.size());
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = center[j] + sd * rng.normal();
    out.push_back(std::move(s));
  }
  return out;
}

double accuracy(const Forest& f, const Samples& pos, const Samples& neg) {
  std::size_t ok = 0;
  for (const auto& x : pos) ok += f.fitness(x) > 0.5;
  for (const auto& x : neg) ok += f.fitness(x) <= 0.5;
  return static_cast<double>(ok) / static_cast<double>(pos.size() + neg.size());
}

}  // namespace

TEST_CASE("forest separates two blobs") {
  Rng rng(1);
  const auto pos = blob(rng, 50, Sample(14, 0.8), 0.05);
  const auto neg = blob(rng, 50, Sample(14, 0.2), 0.05);
  const Forest f = train_classifier(pos, neg, {.seed = 3});
  CHECK(accuracy(f, pos, neg) >= 0.98);
  for (const auto& x : pos) {
    const auto p = f.predict_proba(x);
    CHECK(std::abs(p[0] + p[1] - 1.0) <= 1e-9);
  }
  const auto sp = score_nets(f, pos), sn = score_nets(f, neg);
  CHECK(std::accumulate(sp.begin(), sp.end(), 0.0) / 50 > std::accumulate(sn.begin(), sn.end(), 0.0) / 50);
}

TEST_CASE("forest on ambiguous duplicate points") {
  const Samples pos = {Sample(14, 0.5)};
  const Samples neg = {Sample(14, 0.5)};
  const Forest f = train_classifier(pos, neg, {.seed = 5});
  CHECK(std::abs(f.fitness(Sample(14, 0.5)) - 0.5) <= 0.15);
}

TEST_CASE("balanced weights recover a rare class") {
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    const auto pos = blob(rng, 5, Sample(14, 0.75), 0.05);
    const auto neg = blob(rng, 250, Sample(14, 0.35), 0.1);
    const Forest f = train_classifier(pos, neg, {.seed = seed});
    const auto test_pos = blob(rng, 200, Sample(14, 0.75), 0.05);
    std::size_t hit = 0;
    for (const auto& x : test_pos) hit += f.fitness(x) > 0.5;
    CHECK(static_cast<double>(hit) / 200.0 >= 0.9);
    CHECK(f.class_weights()[1] == doctest::Approx(255.0 / 10.0));
    CHECK(f.class_weights()[0] == doctest::Approx(255.0 / 500.0));
  }
}

TEST_CASE("forest geometry and determinism") {
  Rng rng(9);
  Samples pos, neg;
  for (int i = 0; i < 60; ++i) {
    Sample p(14), q(14);
    for (int j = 0; j < 14; ++j) {
      p[j] = 0.7 + 0.3 * rng.uniform();
      q[j] = 0.6 * rng.uniform();
    }
    pos.push_back(p);
    neg.push_back(q);
  }
  const Forest a = train_classifier(pos, neg, {.trees = 30, .seed = 4});
  const Forest b = train_classifier(pos, neg, {.trees = 30, .seed = 4});
  CHECK(a.fitness(Sample(14, 0.0)) < 0.5);
  CHECK(bundle_to_json({.trigger_model = a, .payload_model = a, .trojan_model = fit_mixture(Samples(3, Sample(5, 0.1)))}) ==
        bundle_to_json({.trigger_model = b, .payload_model = b, .trojan_model = fit_mixture(Samples(3, Sample(5, 0.1)))}));
  for (const auto& x : neg) CHECK(a.fitness(x) == b.fitness(x));
}

TEST_CASE("forest errors") {
  const Samples one = {Sample(3, 0.0)};
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code([&] { train_classifier({}, one); }) == ErrorCode::EmptyClass);
  CHECK(code([&] { train_classifier(one, {}); }) == ErrorCode::EmptyClass);
  CHECK(code([&] { train_classifier(one, {Sample(4, 0.0)}); }) == ErrorCode::DimensionMismatch);
  const Forest f = train_classifier(one, {Sample(3, 1.0)}, {.trees = 3});
  CHECK(code([&] { f.fitness(Sample(5, 0.0)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("mixture selects one component for one Gaussian") {
  Rng rng(21);
  const Sample mu = {0.3, 0.4, 0.5, 0.6, 0.7};
  const auto x = blob(rng, 100, mu, 0.05);
  const Mixture m = fit_mixture(x, {.max_components = 4, .seed = 2});
  REQUIRE(m.components.size() == 1);
  for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(m.components[0].mean[j] - mu[j]) <= 3 * 0.05 / 10.0);
}

TEST_CASE("mixture finds two blobs") {
  Rng rng(22);
  auto x = blob(rng, 60, Sample(5, 0.2), 0.03);
  const auto y = blob(rng, 60, Sample(5, 0.8), 0.03);
  x.insert(x.end(), y.begin(), y.end());
  const Mixture m = fit_mixture(x, {.max_components = 4, .seed = 3});
  REQUIRE(m.components.size() == 2);
  double total = 0;
  for (const auto& c : m.components) {
    CHECK(std::abs(c.weight - 0.5) <= 0.1);
    total += c.weight;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("mixture on identical samples") {
  const Samples x(10, Sample{0.1, 0.2, 0.3, 0.4, 0.5});
  const Mixture m = fit_mixture(x);
  REQUIRE(m.components.size() == 1);
  CHECK(m.components[0].mean == x[0]);
  for (double v : m.components[0].var) CHECK(v == 1e-6);
  CHECK_THROWS_AS(fit_mixture(Samples(1, Sample(5, 0.0))), Error);
}

TEST_CASE("EM log-likelihood never decreases") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    const int clusters = 1 + static_cast<int>(rng.below(3));
    Samples x;
    for (int c = 0; c < clusters; ++c) {
      Sample center(5);
      for (double& v : center) v = rng.uniform();
      const auto b = blob(rng, 10 + rng.below(30), center, 0.02 + 0.1 * rng.uniform());
      x.insert(x.end(), b.begin(), b.end());
    }
    for (int k = 1; k <= 4; ++k) {
      const Mixture m = fit_mixture_k(x, k, {.seed = seed});
      for (std::size_t i = 1; i < m.log_likelihood_trace.size(); ++i) {
        const double prev = m.log_likelihood_trace[i - 1];
        CHECK(m.log_likelihood_trace[i] >= prev - 1e-9 * std::max(1.0, std::abs(prev)));
      }
      for (const auto& c : m.components) {
        for (double v : c.var) CHECK(v >= 1e-6);
      }
    }
  }
}

TEST_CASE("reference sampling") {
  Mixture point;
  point.components = {{1.0, {0.1, 0.2, 0.3, 0.4, 0.5}, {0, 0, 0, 0, 0}}};
  CHECK(sample_reference(point, 1) == point.components[0].mean);

  Mixture m;
  m.components = {{1.0, {0.5, 0.4, 0.6, 0.5, 0.5}, {0.01, 0.01, 0.01, 0.01, 0.01}}};
  const int draws = 10000;
  Sample mean(5, 0.0);
  for (int i = 0; i < draws; ++i) {
    const auto s = sample_reference(m, mix_seed(77, i));
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(s[j] >= 0.0);
      CHECK(s[j] <= 1.0);
      mean[j] += s[j] / draws;
    }
  }
  for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(mean[j] - m.components[0].mean[j]) <= 3 * 0.1 / 100.0);
  CHECK(sample_reference(m, 5) == sample_reference(m, 5));
}

TEST_CASE("affinity propagation recovers planted blobs") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    Samples x;
    const Sample centers[3] = {{0.1, 0.1, 0.1, 0.1, 0.1}, {0.9, 0.1, 0.5, 0.2, 0.8}, {0.4, 0.9, 0.9, 0.7, 0.2}};
    for (const auto& c : centers) {
      const auto b = blob(rng, 10, c, 0.02);
      x.insert(x.end(), b.begin(), b.end());
    }
    const auto s = negative_squared_euclidean(x);
    const Clustering c = affinity_propagation(s, {.damping = 0.8});
    CHECK(c.converged);
    REQUIRE(c.clusters() == 3);
    for (int b = 0; b < 3; ++b) {
      std::set<std::size_t> labels;
      for (int i = 0; i < 10; ++i) labels.insert(c.labels[b * 10 + i]);
      CHECK(labels.size() == 1);
    }
    std::set<std::size_t> all(c.labels.begin(), c.labels.end());
    CHECK(all.size() == 3);
    // Fixed point: each sample's exemplar is its most similar exemplar.
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(c.labels[c.exemplars[c.labels[i]]] == c.labels[i]);
      for (std::size_t e : c.exemplars) CHECK(s(i, c.exemplar_of(i)) >= s(i, e) - 1e-12);
    }
  }
}

TEST_CASE("affinity propagation degenerate inputs") {
  const Samples same(6, Sample(5, 0.3));
  const Clustering one = affinity_propagation(negative_squared_euclidean(same));
  CHECK(one.clusters() == 1);
  const Samples two = {Sample(5, 0.0), Sample(5, 1.0)};
  const Clustering pair = affinity_propagation(negative_squared_euclidean(two));
  CHECK(pair.clusters() == 2);
  CHECK(affinity_propagation(negative_squared_euclidean({Sample(2, 0.0)})).clusters() == 1);
  CHECK_THROWS_AS(affinity_propagation(negative_squared_euclidean(two), {.damping = 0.3}), Error);
  CHECK_THROWS_AS(affinity_propagation(negative_squared_euclidean(two), {.damping = 1.0}), Error);
}

TEST_CASE("affinity propagation is deterministic") {
  Rng rng(4);
  Samples x;
  for (int i = 0; i < 40; ++i) x.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  const auto s = negative_squared_euclidean(x);
  const Clustering a = affinity_propagation(s), b = affinity_propagation(s);
  CHECK(a.exemplars == b.exemplars);
  CHECK(a.labels == b.labels);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(a.labels[a.exemplar_of(i)] == a.labels[i]);
}

TEST_CASE("bundle round-trips through JSON") {
  Rng rng(8);
  const auto pos = blob(rng, 10, Sample(6, 0.7), 0.05);
  const auto neg = blob(rng, 40, Sample(6, 0.3), 0.05);
  ModelBundle b;
  b.template_id = "c1";
  b.cluster_id = 2;
  b.feature_mask = functional_mask();
  b.trigger_model = train_classifier(pos, neg, {.trees = 5, .seed = 1});
  b.payload_model = train_classifier(neg, pos, {.trees = 5, .seed = 2});
  b.trojan_model = fit_mixture(blob(rng, 20, Sample(5, 0.5), 0.1));
  b.exemplar = {0.1, 0.2, 0.3, 0.4, 0.5};
  b.training_trojans = 20;
  const std::string text = bundle_to_json(b);
  const ModelBundle c = bundle_from_json(text);
  CHECK(bundle_to_json(c) == text);
  for (const auto& x : pos) CHECK(c.trigger_model.fitness(x) == b.trigger_model.fitness(x));
  CHECK(c.trojan_model.components.size() == b.trojan_model.components.size());
  CHECK(c.feature_mask == functional_mask());

  CHECK_THROWS_AS(bundle_from_json("{}"), Error);
  CHECK_THROWS_AS(bundle_from_json("not json"), Error);
  std::string wrong = text;
  wrong.replace(wrong.find("\"version\":1"), 11, "\"version\":9");
  try {
    bundle_from_json(wrong);
    FAIL("expected schema error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Schema);
  }
}
