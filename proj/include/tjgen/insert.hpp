#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tjgen/bundle.hpp"
#include "tjgen/features.hpp"
#include "tjgen/netlist.hpp"
#include "tjgen/validate.hpp"

namespace tjgen {

// --- templates --------------------------------------------------------------

enum class TemplateKind { Combinational, Sequential };

struct TrojanTemplate {
  std::string template_id;
  Netlist body;
  std::vector<std::string> trigger_ports;
  /// Port value that enables the trigger, one per trigger port.
  std::vector<bool> active_values;
  /// Optional BUF/NOT stage per trigger port (empty name = none). When present
  /// the stage is flipped at bind time so the host net's rare value enables it.
  std::vector<std::string> polarity_cells;
  std::string final_trigger_net;
  std::string payload_in;
  std::string payload_out;
  std::optional<std::string> clock_port;
  std::optional<std::string> reset_port;
  TemplateKind kind = TemplateKind::Combinational;

  std::size_t r() const { return trigger_ports.size(); }
};

/// Builds a template from its Verilog body and JSON sidecar. Throws Schema when
/// the sidecar is malformed or disagrees with the body.
TrojanTemplate parse_template(std::string_view verilog, std::string_view sidecar);
/// Reads `<stem>.v` and `<stem>.json`; either path may be given.
TrojanTemplate load_template(const std::filesystem::path& path);
std::string template_sidecar_json(const TrojanTemplate& t);

std::span<const std::string_view> builtin_template_ids();
/// c1, c2, s1, s2. Throws InvalidArgument for other ids.
TrojanTemplate builtin_template(std::string_view id);
/// A builtin id or a path to a template file.
TrojanTemplate resolve_template(const std::string& id_or_path);

// --- binding ----------------------------------------------------------------

/// Trigger nets in template port order, the values they must take, and the victim.
struct Binding {
  std::vector<std::string> trigger_nets;
  std::vector<bool> values;
  std::string payload_net;

  TriggerCondition condition() const;
};

/// Values required on the chosen trigger nets: the rare value of each net when
/// the port has a polarity stage, otherwise the port's active value.
std::vector<bool> required_values(const TrojanTemplate& t, std::span<const NetId> triggers,
                                  std::span<const double> probability);

struct BindOptions {
  std::optional<std::string> clock;  // host clock net; defaults to the host's
  std::optional<std::string> reset;  // host reset net; unbound resets are tied high
  std::string prefix;                // empty picks unique_prefix(host)
};

struct BoundTrojan {
  Netlist netlist;
  std::string prefix;
  std::string final_trigger_net;  // name in `netlist`
};

/// Splices the template into a copy of the host. Throws MissingClock when a
/// sequential template has no clock to bind, plus any splice error.
BoundTrojan bind_template(const Netlist& host, const TrojanTemplate& t, const Binding& b,
                          const BindOptions& options = {});

// --- candidate search -------------------------------------------------------

/// Nets that may carry a trigger: driven inside the design, not a primary
/// input or output, not the clock or reset, not constant.
std::vector<NetId> trigger_eligible(const Netlist& n, const BindOptions& options = {});
/// Nets that may be a victim: cell-driven, not the clock or reset.
std::vector<NetId> payload_eligible(const Netlist& n, const BindOptions& options = {});

/// `eligible` sorted by descending score, ties by net name, cut at `cap`.
/// Nets scoring above 0.5 come first by construction. Throws NoCandidates.
std::vector<NetId> select_trigger_candidates(const Netlist& n, std::span<const NetId> eligible,
                                             std::span<const double> scores, std::size_t cap);

/// Lazy r-combinations of an ordered candidate list in lexicographic order,
/// so sets built from higher-ranked candidates come first. With diversity on,
/// each pick must differ in score from the previous pick whenever a later
/// candidate with a different score exists.
class TriggerSetEnumerator {
 public:
  TriggerSetEnumerator(std::vector<NetId> candidates, std::vector<double> scores, std::size_t r,
                       bool diversity, std::size_t limit);

  /// Next set (candidate net ids) or nullopt when exhausted or at the limit.
  std::optional<std::vector<NetId>> next();
  /// Drops every remaining set that starts with the first `len` picks of the
  /// set last returned.
  void skip_prefix(std::size_t len);
  std::size_t yielded() const { return yielded_; }
  bool at_limit() const { return yielded_ >= limit_; }

 private:
  bool allowed(std::size_t depth, std::size_t j) const;
  bool advance(std::size_t depth);
  bool fill(std::size_t depth, std::size_t from);

  std::vector<NetId> cand_;
  std::vector<double> score_;
  std::vector<std::size_t> idx_;
  std::vector<std::size_t> next_diff_;  // first later index with a different score
  std::size_t r_;
  bool diversity_;
  std::size_t limit_;
  std::size_t yielded_ = 0;
  bool started_ = false;
  bool done_ = false;
};

/// Payload candidates by descending score, ties by name.
std::vector<NetId> payload_ranking(const Netlist& n, std::span<const NetId> eligible, std::span<const double> scores);
/// First net of `ranking` outside the trigger set that keeps the splice acyclic.
/// Throws NoLegalPayload.
NetId pair_payload(const Netlist& n, std::span<const NetId> triggers, std::span<const NetId> ranking,
                   const TopoOrder& order);

// --- virtual Trojans and ranking --------------------------------------------

struct VirtualTrojan {
  Binding binding;
  TrojanFeatureRow features{};  // scaled over every net of the spliced design
  double distance = 0.0;
  bool valid = false;
};

struct VirtualOptions {
  std::size_t vectors = 100000;
  std::uint64_t seed = 1;
  BindOptions bind;
};

/// Scaled Trojan features of one net, with min-max fitted over every net of `n`.
TrojanFeatureRow trojan_feature_vector(const Netlist& n, NetId net, std::size_t vectors, std::uint64_t seed);

/// Trojan features of the final trigger wire as if the binding were inserted.
VirtualTrojan build_virtual(const Netlist& host, const TrojanTemplate& t, const Binding& b,
                            const VirtualOptions& options = {});

double weighted_distance(const TrojanFeatureRow& a, std::span<const double> reference,
                         const std::array<double, kTrojanFeatureCount>& weights);

/// Sets every member's distance and returns pool indices ordered by distance,
/// ties by trigger-net names. Throws PoolEmpty and InvalidArgument (weights).
std::vector<std::size_t> rank_pool(std::vector<VirtualTrojan>& pool, std::span<const double> reference,
                                   const std::array<double, kTrojanFeatureCount>& weights);

// --- orchestration ----------------------------------------------------------

enum class Selection { Model, Random };

struct InsertionConfig {
  std::size_t num_trojans = 1;
  std::size_t virtual_pool_factor = 20;
  std::array<double, kTrojanFeatureCount> feature_weights = {1, 1, 1, 1, 1};
  std::size_t candidate_cap = 200;
  std::uint64_t seed = 1;
  std::size_t vectors = 100000;       // simulation vectors for features
  std::size_t verify_vectors = 10000;
  Selection selection = Selection::Model;
  bool sort_pool = true;
  bool diversity = true;
  std::optional<std::string> clock;
  std::optional<std::string> reset;
};

struct PoolLedger {
  std::size_t target = 0;
  std::size_t sets_enumerated = 0;
  std::size_t unsat = 0;
  std::size_t dead_candidates = 0;  // candidates that cannot take their value at all
  std::size_t prefixes_pruned = 0;
  std::size_t no_payload = 0;
  std::size_t virtual_evaluated = 0;
  std::size_t verification_failed = 0;
  bool exhausted = false;
};

struct InsertionReport {
  std::string design;
  std::string template_id;
  std::uint64_t seed = 0;
  std::size_t index = 0;
  std::size_t pool_rank = 0;
  Binding binding;
  std::string prefix;
  std::string final_trigger_net;
  TrojanFeatureRow features{};
  std::vector<double> reference;
  double distance = 0.0;
  VerifyReport verification;
};

struct InsertedTrojan {
  Netlist netlist;
  InsertionReport report;
};

struct InsertionResult {
  std::vector<InsertedTrojan> trojans;
  std::vector<VirtualTrojan> pool;  // in ranked order
  std::vector<double> reference;
  PoolLedger ledger;
  std::size_t requested = 0;
  std::string shortfall;  // empty when every requested Trojan was emitted
};

/// Full insertion flow: score nets, enumerate and justify trigger sets, pair
/// payloads, evaluate virtual Trojans, rank against a reference sampled from
/// the bundle, then bind and verify the best ones, one Trojan per netlist.
InsertionResult insert_trojans(const Netlist& host, const TrojanTemplate& t, const ModelBundle& bundle,
                               const InsertionConfig& cfg);

std::string report_json(const InsertionReport& r);
/// Reads the identity, binding and features of a report; verification details
/// are not restored. Throws Schema.
InsertionReport report_from_json(std::string_view text);
std::string index_json(const InsertionResult& result, const InsertionConfig& cfg);
/// Writes `<design>_<template>_<k>.v` and `.json` per Trojan plus `index.json`.
void write_insertion(const InsertionResult& result, const InsertionConfig& cfg, const std::filesystem::path& dir);

}  // namespace tjgen
