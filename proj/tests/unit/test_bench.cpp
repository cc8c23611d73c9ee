#include <algorithm>
#include <set>

#include "doctest.h"
#include "test_support.hpp"
#include "tjgen/bench.hpp"
#include "tjgen/error.hpp"
#include "tjgen/generate.hpp"

using namespace tjgen;

namespace {

// Four rare-value triggers into one AND, XOR payload.
TrojanTemplate quad_template() {
  return parse_template(R"(
module q4 (t0, t1, t2, t3, pin, pout);
  input t0, t1, t2, t3, pin;
  output pout;
  wire s0, s1, s2, s3, trig;
  BUF P0 (.A(t0), .Y(s0));
  BUF P1 (.A(t1), .Y(s1));
  BUF P2 (.A(t2), .Y(s2));
  BUF P3 (.A(t3), .Y(s3));
  AND4 G (.A(s0), .B(s1), .C(s2), .D(s3), .Y(trig));
  XOR2 PL (.A(pin), .B(trig), .Y(pout));
endmodule)",
                        R"({"template_id": "q4", "kind": "combinational",
      "trigger_ports": ["t0", "t1", "t2", "t3"], "polarity_cells": ["P0", "P1", "P2", "P3"],
      "final_trigger_net": "trig", "payload_in": "pin", "payload_out": "pout"})");
}

TrojanTemplate pair_template() {
  return parse_template(R"(
module d2 (t0, t1, pin, pout);
  input t0, t1, pin;
  output pout;
  wire s0, s1, trig;
  BUF P0 (.A(t0), .Y(s0));
  BUF P1 (.A(t1), .Y(s1));
  AND2 G (.A(s0), .B(s1), .Y(trig));
  XOR2 PL (.A(pin), .B(trig), .Y(pout));
endmodule)",
                        R"({"template_id": "d2", "kind": "combinational",
      "trigger_ports": ["t0", "t1"], "polarity_cells": ["P0", "P1"],
      "final_trigger_net": "trig", "payload_in": "pin", "payload_out": "pout"})");
}

Netlist host(int gates, std::uint64_t seed, double dff = 0.0) {
  GeneratorParams p;
  p.gates = gates;
  p.inputs = gates / 10;
  p.dff_fraction = dff;
  p.seed = seed;
  return generate_netlist(p);
}

InsertedTrojan make_trojan(const Netlist& h, const TrojanTemplate& t, const Binding& b, std::size_t vectors) {
  BoundTrojan bound = bind_template(h, t, b);
  InsertionReport rep;
  rep.design = h.module_name();
  rep.template_id = t.template_id;
  rep.binding = b;
  rep.prefix = bound.prefix;
  rep.final_trigger_net = bound.final_trigger_net;
  rep.features = trojan_feature_vector(bound.netlist, bound.netlist.net_id(bound.final_trigger_net), vectors, 1);
  return {std::move(bound.netlist), std::move(rep)};
}

}  // namespace

TEST_CASE("baseline insertion on a 300-gate design") {
  const Netlist h = host(300, 3);
  const TrojanTemplate t = quad_template();
  BaselineConfig cfg;
  cfg.theta = 0.01;
  cfg.count = 100;
  cfg.vectors = 50000;
  cfg.verify_vectors = 2000;
  const BaselineResult r = baseline_insert(h, t, cfg);
  INFO(r.shortfall);
  REQUIRE(r.trojans.size() == 100);
  // Masked victims are retried, never emitted.
  CHECK(r.attempts >= 100);

  const std::vector<SignalStats> stats = simulate(h, cfg.vectors, cfg.seed);
  std::set<std::vector<std::string>> sets;
  for (const auto& tj : r.trojans) {
    const auto& rep = tj.report;
    for (std::size_t i = 0; i < rep.binding.trigger_nets.size(); ++i) {
      const double p = stats[h.net_id(rep.binding.trigger_nets[i])].probability;
      CHECK(rare_side_probability(p) <= cfg.theta);
      CHECK(rep.binding.values[i] == rare_value(p));
      CHECK_FALSE(h.net(h.net_id(rep.binding.trigger_nets[i])).is_output);
    }
    auto key = rep.binding.trigger_nets;
    std::sort(key.begin(), key.end());
    sets.insert(key);
    // Independent re-check with a different stimulus seed.
    VerifyOptions vo;
    vo.vectors = 1000;
    vo.seed = 99;
    vo.trigger_net = rep.final_trigger_net;
    CHECK(verify_inserted(h, tj.netlist, rep.binding.condition(), vo).passed());
  }
  CHECK(sets.size() == 100);

  const BaselineResult again = baseline_insert(h, t, cfg);
  REQUIRE(again.trojans.size() == 100);
  for (std::size_t i = 0; i < 100; i += 17) {
    CHECK(emit_netlist(again.trojans[i].netlist) == emit_netlist(r.trojans[i].netlist));
    CHECK(report_json(again.trojans[i].report) == report_json(r.trojans[i].report));
  }
}

TEST_CASE("baseline threshold edges") {
  const Netlist h = host(120, 5);
  const TrojanTemplate t = pair_template();
  BaselineConfig cfg;
  cfg.vectors = 20000;
  cfg.verify_vectors = 500;
  cfg.count = 3;

  SUBCASE("theta 0.5 admits every internal net") {
    cfg.theta = 0.5;
    const BaselineResult r = baseline_insert(h, t, cfg);
    const auto stats = simulate(h, cfg.vectors, cfg.seed);
    std::size_t expect = 0;
    for (NetId id : trigger_eligible(h)) {
      expect += justify(h, {{h.net(id).name, rare_value(stats[id].probability)}}).satisfiable();
    }
    CHECK(r.rare_nets == expect);
    CHECK(r.trojans.size() == 3);
  }
  SUBCASE("theta below the rarest net") {
    const Netlist c17 = read_netlist_file(TJGEN_TEST_DATA "/c17.v");
    cfg.theta = 1e-6;
    CHECK_THROWS_WITH_AS(baseline_insert(c17, t, cfg), doctest::Contains("InsufficientRareNets"), Error);
  }
  SUBCASE("bad arguments") {
    cfg.theta = 0.0;
    CHECK_THROWS_AS(baseline_insert(h, t, cfg), Error);
    cfg.theta = 0.6;
    CHECK_THROWS_AS(baseline_insert(h, t, cfg), Error);
    cfg.theta = 0.1;
    cfg.r = 3;
    CHECK_THROWS_AS(baseline_insert(h, t, cfg), Error);
  }
}

TEST_CASE("classification against exemplars") {
  const Samples ex = {{0, 0, 0, 0, 0}, {1, 0, 0, 0, 0}, {0, 1, 0, 0, 0}};
  for (std::size_t k = 0; k < ex.size(); ++k) CHECK(classify_output(ex[k], ex) == k);
  // Equidistant to the first two: the lower index wins.
  CHECK(classify_output(std::vector<double>{0.5, 0, 0, 0, 0}, ex) == 0);
  CHECK(classify_output(std::vector<double>{0.5 + 1e-9, 0, 0, 0, 0}, ex) == 1);
  CHECK(classify_output(std::vector<double>{0.5, 0.5, 0, 0, 0}, ex) == 0);
  CHECK(classify_output(std::vector<double>{0.4, 0.6, 0, 0, 0}, ex) == 2);
  CHECK_THROWS_AS(classify_output(std::vector<double>{0, 0}, ex), Error);
  CHECK_THROWS_AS(classify_output(std::vector<double>{0, 0, 0, 0, 0}, Samples{}), Error);
}

TEST_CASE("training set construction") {
  const Netlist h = host(300, 9);
  const TrojanTemplate t = pair_template();
  const auto stats = simulate(h, 20000, 1);
  const std::vector<NetId> elig = trigger_eligible(h);
  TrainingConfig cfg;
  cfg.vectors = 20000;
  cfg.forest.trees = 20;

  SUBCASE("identical Trojans form one cluster") {
    // Two nets that can both be 1 with a legal payload.
    std::optional<Binding> b;
    for (std::size_t i = 0; i < elig.size() && !b; ++i) {
      for (std::size_t j = i + 1; j < elig.size() && !b; ++j) {
        const std::vector<NetId> pick = {elig[i], elig[j]};
        const Binding cand{{h.net(pick[0]).name, h.net(pick[1]).name}, {true, true}, ""};
        if (!justify(h, cand.condition()).satisfiable()) continue;
        try {
          const NetId pay = pair_payload(h, pick, payload_eligible(h), h.topo());
          b = cand;
          b->payload_net = h.net(pay).name;
        } catch (const Error&) {
        }
      }
    }
    REQUIRE(b);
    std::vector<InsertedTrojan> tr(5, make_trojan(h, t, *b, cfg.vectors));
    const TrainingSet s = build_training_set(tr, cfg);
    CHECK(s.clustering.clusters() == 1);
    REQUIRE(s.bundles.size() == 1);
    CHECK(s.bundles[0].training_trojans == 5);
    CHECK(s.bundles[0].template_id == "d2");
    const ModelBundle back = bundle_from_json(bundle_to_json(s.bundles[0]));
    CHECK(bundle_to_json(back) == bundle_to_json(s.bundles[0]));
    CHECK(exemplars_from_json(clusters_to_json(s)) == s.exemplars());
  }

  SUBCASE("two feature-distinct insertion regions give separate clusters") {
    // Region A: rare nets at their rare value. Region B: balanced nets.
    std::vector<NetId> rare, balanced;
    for (NetId id : elig) {
      const double q = rare_side_probability(stats[id].probability);
      if (q > 0 && q <= 0.02) rare.push_back(id);
      if (q >= 0.4) balanced.push_back(id);
    }
    REQUIRE(rare.size() >= 4);
    REQUIRE(balanced.size() >= 8);
    std::vector<InsertedTrojan> tr;
    std::vector<int> region;
    auto add = [&](const std::vector<NetId>& from, int tag, std::size_t want) {
      std::size_t made = 0;
      for (std::size_t i = 0; i + 1 < from.size() && made < want; ++i) {
        const std::vector<NetId> pick = {from[i], from[i + 1]};
        Binding b{{h.net(pick[0]).name, h.net(pick[1]).name},
                  {rare_value(stats[pick[0]].probability), rare_value(stats[pick[1]].probability)},
                  ""};
        if (!justify(h, b.condition()).satisfiable()) continue;
        try {
          b.payload_net = h.net(pair_payload(h, pick, payload_eligible(h), h.topo())).name;
        } catch (const Error&) {
          continue;
        }
        tr.push_back(make_trojan(h, t, b, cfg.vectors));
        region.push_back(tag);
        ++made;
      }
      return made;
    };
    REQUIRE(add(rare, 0, 6) >= 2);
    REQUIRE(add(balanced, 1, 6) >= 2);
    const TrainingSet s = build_training_set(tr, cfg);
    CHECK(s.clustering.clusters() >= 2);
    // No cluster mixes the two regions.
    for (std::size_t i = 0; i < tr.size(); ++i) {
      for (std::size_t j = 0; j < tr.size(); ++j) {
        if (s.clustering.labels[i] == s.clustering.labels[j]) CHECK(region[i] == region[j]);
      }
    }
    for (std::size_t i = 0; i < tr.size(); ++i) {
      CHECK(classify_output(s.trojan_vectors[s.clustering.exemplars[s.clustering.labels[i]]], s.exemplars()) ==
            s.clustering.labels[i]);
    }
    // Skipped singletons come with a warning.
    std::size_t singles = 0;
    for (std::size_t c = 0; c < s.clustering.clusters(); ++c) {
      singles += std::count(s.clustering.labels.begin(), s.clustering.labels.end(), c) == 1;
    }
    CHECK(s.bundles.size() + singles == s.clustering.clusters());
    CHECK(s.warnings.size() >= singles);
  }

  SUBCASE("functional mask and errors") {
    std::vector<InsertedTrojan> one;
    CHECK_THROWS_AS(build_training_set(one, cfg), Error);
  }
}

TEST_CASE("experiment arms") {
  const Netlist h = host(500, 13);
  const TrojanTemplate t = builtin_template("c2");
  BaselineConfig bc;
  bc.count = 12;
  bc.vectors = 20000;
  bc.verify_vectors = 500;
  const BaselineResult base = baseline_insert(h, t, bc);
  REQUIRE(base.trojans.size() == 12);
  TrainingConfig tc;
  tc.vectors = 20000;
  tc.forest.trees = 20;
  tc.functional_only = true;
  const TrainingSet ts = build_training_set(base.trojans, tc);
  REQUIRE_FALSE(ts.bundles.empty());
  CHECK(ts.bundles[0].feature_mask == functional_mask());

  ExperimentSpec spec;
  spec.runs = 2;
  spec.top_n = {1, 3, 5};
  spec.insertion.vectors = 20000;
  spec.insertion.verify_vectors = 500;

  SUBCASE("top-N is monotone and arms share the candidate universe") {
    const std::span<const ModelBundle> one(ts.bundles.data(), 1);
    const ExperimentResult r = run_experiment(h, t, one, ts.exemplars(), spec);
    REQUIRE(r.arms.size() == 4);
    for (const auto& a : r.arms) {
      CHECK(a.trials.size() == 2);
      for (std::size_t k = 1; k < spec.top_n.size(); ++k) CHECK(a.accuracy[k - 1] <= a.accuracy[k]);
      for (const auto& tr : a.trials) {
        CHECK(tr.pool_clusters.size() == 20);
        for (std::size_t k = 1; k < tr.hits.size(); ++k) CHECK((!tr.hits[k - 1] || tr.hits[k]));
      }
    }
    // Same seed: the random arms evaluate the same pool, as do the model arms.
    for (const Selection sel : {Selection::Random, Selection::Model}) {
      InsertionConfig a = spec.insertion;
      a.seed = r.arms[0].trials[0].seed;
      a.selection = sel;
      a.sort_pool = false;
      InsertionConfig b = a;
      b.sort_pool = true;
      const InsertionResult ra = insert_trojans(h, t, ts.bundles[0], a);
      const InsertionResult rb = insert_trojans(h, t, ts.bundles[0], b);
      std::multiset<std::vector<std::string>> pa, pb;
      for (const auto& v : ra.pool) pa.insert(v.binding.trigger_nets);
      for (const auto& v : rb.pool) pb.insert(v.binding.trigger_nets);
      CHECK(pa == pb);
    }
    const std::vector<ExperimentResult> table = {r};
    const std::string csv = experiment_csv(table);
    CHECK(csv.starts_with("train_design,train_template,test_design,test_template,clusters,trials,no_ml_top1,"
                          "no_ml_top3,no_ml_top5,troj_ml_a_top1"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  }

  SUBCASE("a single cluster scores 1 in every arm") {
    const Samples single = {ts.bundles[0].exemplar};
    ModelBundle b = ts.bundles[0];
    b.cluster_id = 0;
    const std::vector<ModelBundle> bs = {b};
    const ExperimentResult r = run_experiment(h, t, bs, single, spec);
    for (const auto& a : r.arms) {
      for (double acc : a.accuracy) CHECK(acc == 1.0);
    }
  }

  SUBCASE("spec validation and cross-kind warning") {
    ExperimentSpec bad = spec;
    bad.runs = 0;
    CHECK_THROWS_AS(run_experiment(h, t, ts.bundles, ts.exemplars(), bad), Error);
    bad = spec;
    bad.top_n = {0};
    CHECK_THROWS_AS(run_experiment(h, t, ts.bundles, ts.exemplars(), bad), Error);
    CHECK(parse_arm("trig_pay_only") == Arm::TrigPayOnly);
    CHECK_THROWS_AS(parse_arm("ml"), Error);
    CHECK_FALSE(cross_kind_warning(ts.bundles[0], t));
    CHECK(cross_kind_warning(ts.bundles[0], builtin_template("s1")));
  }
}
