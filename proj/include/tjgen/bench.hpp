#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tjgen/bundle.hpp"
#include "tjgen/insert.hpp"
#include "tjgen/ml.hpp"
#include "tjgen/netlist.hpp"

namespace tjgen {

// --- baseline generation ----------------------------------------------------

struct BaselineConfig {
  double theta = 0.01;  // rare-side probability threshold, 0 < theta <= 0.5
  std::size_t r = 0;    // 0 takes the template's trigger count
  std::size_t count = 100;
  std::uint64_t seed = 1;
  std::size_t vectors = 100000;
  std::size_t verify_vectors = 10000;
  std::size_t max_attempts = 0;  // 0 means 20 per requested Trojan
  std::optional<std::string> clock;
  std::optional<std::string> reset;
};

struct BaselineResult {
  std::vector<InsertedTrojan> trojans;
  std::size_t rare_nets = 0;  // eligible nets at or below theta that can take their rare value
  std::size_t attempts = 0;
  std::size_t duplicates = 0;
  std::size_t unsat = 0;  // draws that ran out of jointly satisfiable rare nets
  std::size_t no_payload = 0;
  std::size_t verification_failed = 0;  // victims rejected, each followed by another try
  std::string shortfall;
};

/// Random rare-net Trojans: trigger nets drawn one at a time, uniformly from
/// the nets whose rare-side probability is at most theta and that stay jointly
/// satisfiable with the earlier picks, then a random legal victim. Every
/// Trojan is verified. Throws InsufficientRareNets and InvalidArgument.
BaselineResult baseline_insert(const Netlist& host, const TrojanTemplate& t, const BaselineConfig& cfg);

// --- training ---------------------------------------------------------------

struct TrainingConfig {
  std::size_t vectors = 100000;
  std::uint64_t seed = 1;
  ApParams ap;
  ForestParams forest;
  MixtureParams mixture;
  std::size_t negatives_per_design = 200;
  bool functional_only = false;
};

struct TrainingSet {
  std::string template_id;
  Samples trojan_vectors;  // one per input Trojan
  Clustering clustering;
  /// One bundle per cluster with at least two Trojans; cluster_id indexes
  /// clustering.exemplars.
  std::vector<ModelBundle> bundles;
  std::vector<std::string> warnings;

  Samples exemplars() const;
};

/// Clusters the Trojans by their final-trigger features and trains trigger,
/// payload and Trojan models per cluster. Throws TooFewSamples when no cluster
/// has two members.
TrainingSet build_training_set(std::span<const InsertedTrojan> trojans, const TrainingConfig& cfg = {});

std::string clusters_to_json(const TrainingSet& s);
/// Reads the exemplar table written by clusters_to_json.
Samples exemplars_from_json(std::string_view text);

/// Index of the nearest exemplar by Euclidean distance; ties go to the lower
/// index. Throws InvalidArgument on an empty table and DimensionMismatch.
std::size_t classify_output(std::span<const double> features, const Samples& exemplars);

/// Warning text when a bundle learned on one template kind drives another.
std::optional<std::string> cross_kind_warning(const ModelBundle& b, const TrojanTemplate& t);

// --- experiments ------------------------------------------------------------

enum class Arm { NoMl, TrojanOnly, TrigPayOnly, Both };

std::string_view arm_name(Arm a);
/// Accepts none, trojan_only, trig_pay_only, both. Throws InvalidArgument.
Arm parse_arm(std::string_view s);

struct ExperimentSpec {
  std::string train_design;
  std::string train_template;
  std::string test_design;
  std::string test_template;
  std::vector<Arm> arms = {Arm::NoMl, Arm::TrojanOnly, Arm::TrigPayOnly, Arm::Both};
  std::vector<std::size_t> top_n = {1, 5};
  std::size_t runs = 5;
  std::uint64_t seed = 1;
  /// Base insertion settings; selection, sorting, count and seed are set per trial.
  InsertionConfig insertion;
};

struct Trial {
  std::size_t cluster = 0;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> pool_clusters;  // predicted cluster per pool entry, in pool order
  std::vector<bool> hits;                  // per top_n value
};

struct ArmResult {
  Arm arm = Arm::NoMl;
  std::vector<Trial> trials;
  std::vector<double> accuracy;  // per top_n value, mean over trials
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::size_t clusters = 0;
  std::vector<ArmResult> arms;
  std::vector<std::string> warnings;
};

/// Top-N cluster-hit accuracy of each arm. Every bundle is one target class;
/// each run uses a seed derived from `spec.seed`, shared by all arms.
ExperimentResult run_experiment(const Netlist& test_host, const TrojanTemplate& test_template,
                                std::span<const ModelBundle> bundles, const Samples& exemplars,
                                const ExperimentSpec& spec);

/// One row per experiment, accuracy columns per arm and N, in percent.
std::string experiment_csv(std::span<const ExperimentResult> results);
std::string experiment_json(const ExperimentResult& r);

}  // namespace tjgen
