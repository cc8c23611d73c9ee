#include <cstdio>

#include "json.hpp"
#include "tjgen/bench.hpp"
#include "tjgen/error.hpp"
#include "tjgen/rng.hpp"

namespace tjgen {
namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kArmNames[] = {"none", "trojan_only", "trig_pay_only", "both"};
// Column labels follow the usual ablation table: no models, Trojan model (A),
// trigger and payload models (B), both.
constexpr std::string_view kArmColumns[] = {"no_ml", "troj_ml_a", "trig_pay_ml_b", "both"};

std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * x);
  return buf;
}

}  // namespace

std::string_view arm_name(Arm a) { return kArmNames[static_cast<int>(a)]; }

Arm parse_arm(std::string_view s) {
  for (int i = 0; i < 4; ++i) {
    if (s == kArmNames[i]) return static_cast<Arm>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown ablation arm '" + std::string(s) +
                                              "' (expected none, trojan_only, trig_pay_only or both)");
}

ExperimentResult run_experiment(const Netlist& test_host, const TrojanTemplate& test_template,
                                std::span<const ModelBundle> bundles, const Samples& exemplars,
                                const ExperimentSpec& spec) {
  if (spec.runs < 1) throw Error(ErrorCode::InvalidArgument, "runs must be >= 1");
  if (spec.top_n.empty()) throw Error(ErrorCode::InvalidArgument, "top_n is empty");
  for (std::size_t n : spec.top_n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "top_n values must be >= 1");
  }
  if (bundles.empty()) throw Error(ErrorCode::InvalidArgument, "no model bundles");
  if (exemplars.empty()) throw Error(ErrorCode::InvalidArgument, "no cluster exemplars");

  ExperimentResult result;
  result.spec = spec;
  result.clusters = exemplars.size();
  for (const auto& b : bundles) {
    if (b.cluster_id < 0 || static_cast<std::size_t>(b.cluster_id) >= exemplars.size()) {
      throw Error(ErrorCode::InvalidArgument, "bundle cluster " + std::to_string(b.cluster_id) +
                                                  " has no exemplar");
    }
    if (auto w = cross_kind_warning(b, test_template)) {
      if (result.warnings.empty()) result.warnings.push_back(*w);
    }
  }

  for (Arm arm : spec.arms) {
    ArmResult ar;
    ar.arm = arm;
    ar.accuracy.assign(spec.top_n.size(), 0.0);
    for (const ModelBundle& b : bundles) {
      for (std::size_t run = 0; run < spec.runs; ++run) {
        InsertionConfig cfg = spec.insertion;
        cfg.num_trojans = 1;
        cfg.seed = mix_seed(spec.seed, run + 1);
        cfg.selection = (arm == Arm::NoMl || arm == Arm::TrojanOnly) ? Selection::Random : Selection::Model;
        cfg.sort_pool = arm == Arm::TrojanOnly || arm == Arm::Both;
        const InsertionResult ir = insert_trojans(test_host, test_template, b, cfg);

        Trial t;
        t.cluster = static_cast<std::size_t>(b.cluster_id);
        t.run = run;
        t.seed = cfg.seed;
        for (const auto& v : ir.pool) t.pool_clusters.push_back(classify_output(v.features, exemplars));
        for (std::size_t k = 0; k < spec.top_n.size(); ++k) {
          const std::size_t upto = std::min(spec.top_n[k], t.pool_clusters.size());
          bool hit = false;
          for (std::size_t i = 0; i < upto; ++i) hit |= t.pool_clusters[i] == t.cluster;
          t.hits.push_back(hit);
          ar.accuracy[k] += hit ? 1.0 : 0.0;
        }
        ar.trials.push_back(std::move(t));
      }
    }
    for (double& a : ar.accuracy) a /= static_cast<double>(ar.trials.size());
    result.arms.push_back(std::move(ar));
  }
  return result;
}

std::string experiment_csv(std::span<const ExperimentResult> results) {
  std::string out;
  if (results.empty()) return out;
  const ExperimentSpec& first = results.front().spec;
  out = "train_design,train_template,test_design,test_template,clusters,trials";
  for (Arm a : first.arms) {
    for (std::size_t n : first.top_n) {
      out += "," + std::string(kArmColumns[static_cast<int>(a)]) + "_top" + std::to_string(n);
    }
  }
  out += "\n";
  for (const auto& r : results) {
    if (r.spec.arms != first.arms || r.spec.top_n != first.top_n) {
      throw Error(ErrorCode::InvalidArgument, "experiments in one table must share arms and top_n");
    }
    const std::size_t trials = r.arms.empty() ? 0 : r.arms.front().trials.size();
    out += r.spec.train_design + "," + r.spec.train_template + "," + r.spec.test_design + "," +
           r.spec.test_template + "," + std::to_string(r.clusters) + "," + std::to_string(trials);
    for (const auto& a : r.arms) {
      for (double acc : a.accuracy) out += "," + percent(acc);
    }
    out += "\n";
  }
  return out;
}

std::string experiment_json(const ExperimentResult& r) {
  json j;
  j["train_design"] = r.spec.train_design;
  j["train_template"] = r.spec.train_template;
  j["test_design"] = r.spec.test_design;
  j["test_template"] = r.spec.test_template;
  j["seed"] = r.spec.seed;
  j["runs"] = r.spec.runs;
  j["top_n"] = r.spec.top_n;
  j["clusters"] = r.clusters;
  j["warnings"] = r.warnings;
  json arms = json::array();
  for (const auto& a : r.arms) {
    json trials = json::array();
    for (const auto& t : a.trials) {
      trials.push_back({{"cluster", t.cluster},
                        {"run", t.run},
                        {"seed", t.seed},
                        {"pool_clusters", t.pool_clusters},
                        {"hits", t.hits}});
    }
    arms.push_back({{"arm", arm_name(a.arm)}, {"accuracy", a.accuracy}, {"trials", trials}});
  }
  j["arms"] = arms;
  return j.dump(2) + "\n";
}

}  // namespace tjgen
