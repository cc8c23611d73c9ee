#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "tjgen/bench.hpp"
#include "tjgen/error.hpp"
#include "tjgen/rng.hpp"

namespace tjgen {
namespace {

using json = nlohmann::ordered_json;

struct TrojanRows {
  Samples triggers;
  Sample payload;
  Samples negatives;
  Sample trojan;
};

TrojanRows collect_rows(const InsertedTrojan& tj, const TrainingConfig& cfg, const std::vector<std::uint8_t>& mask,
                        std::uint64_t sample_seed) {
  const Netlist& n = tj.netlist;
  const InsertionReport& rep = tj.report;
  const FeatureTable ft = extract_features(n, {.vectors = cfg.vectors, .seed = cfg.seed});
  const std::vector<NetFeatureRow> scaled = scale_rows(MinMaxScaler::fit<NetFeatureRow>(ft.rows), ft.rows);

  TrojanRows out;
  std::set<NetId> trojan_nets;
  for (const auto& name : rep.binding.trigger_nets) {
    const NetId id = n.net_id(name);
    trojan_nets.insert(id);
    out.triggers.push_back(mask_row(scaled[id], mask));
  }
  // The victim name now carries the payload output into the original fanout.
  const NetId victim = n.net_id(rep.binding.payload_net);
  trojan_nets.insert(victim);
  out.payload = mask_row(scaled[victim], mask);
  const TrojanFeatureRow tf = trojan_columns(scaled[n.net_id(rep.final_trigger_net)]);
  out.trojan.assign(tf.begin(), tf.end());

  std::vector<NetId> pool;
  for (NetId id : payload_eligible(n)) {
    if (trojan_nets.count(id) || n.net(id).name.starts_with(rep.prefix)) continue;
    pool.push_back(id);
  }
  Rng rng(sample_seed);
  const std::size_t keep = std::min(pool.size(), cfg.negatives_per_design);
  for (std::size_t i = 0; i < keep; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  pool.resize(keep);
  std::sort(pool.begin(), pool.end());
  for (NetId id : pool) out.negatives.push_back(mask_row(scaled[id], mask));
  return out;
}

}  // namespace

Samples TrainingSet::exemplars() const {
  Samples out;
  for (std::size_t e : clustering.exemplars) out.push_back(trojan_vectors[e]);
  return out;
}

TrainingSet build_training_set(std::span<const InsertedTrojan> trojans, const TrainingConfig& cfg) {
  if (trojans.size() < 2) throw Error(ErrorCode::TooFewSamples, "training needs at least two Trojan netlists");
  TrainingSet set;
  set.template_id = trojans.front().report.template_id;
  for (const auto& tj : trojans) {
    if (tj.report.template_id != set.template_id) {
      throw Error(ErrorCode::InvalidArgument, "training Trojans mix templates " + set.template_id + " and " +
                                                  tj.report.template_id);
    }
  }
  const std::vector<std::uint8_t> mask =
      cfg.functional_only ? functional_mask() : std::vector<std::uint8_t>(kNetFeatureCount, 1);

  std::vector<TrojanRows> rows;
  rows.reserve(trojans.size());
  for (std::size_t i = 0; i < trojans.size(); ++i) {
    rows.push_back(collect_rows(trojans[i], cfg, mask, mix_seed(cfg.seed, i)));
    set.trojan_vectors.push_back(rows.back().trojan);
  }
  set.clustering = affinity_propagation(negative_squared_euclidean(set.trojan_vectors), cfg.ap);
  if (!set.clustering.converged) {
    set.warnings.push_back("affinity propagation stopped after " + std::to_string(set.clustering.iterations) +
                           " iterations without converging");
  }

  for (std::size_t c = 0; c < set.clustering.clusters(); ++c) {
    Samples pos_trig, pos_pay, neg, vecs;
    for (std::size_t i = 0; i < trojans.size(); ++i) {
      if (set.clustering.labels[i] != c) continue;
      const TrojanRows& tr = rows[i];
      pos_trig.insert(pos_trig.end(), tr.triggers.begin(), tr.triggers.end());
      pos_pay.push_back(tr.payload);
      neg.insert(neg.end(), tr.negatives.begin(), tr.negatives.end());
      vecs.push_back(tr.trojan);
    }
    if (vecs.size() < 2) {
      set.warnings.push_back("cluster " + std::to_string(c) + " has a single Trojan; no model trained");
      continue;
    }
    ModelBundle b;
    b.template_id = set.template_id;
    b.cluster_id = static_cast<int>(c);
    b.feature_mask = mask;
    ForestParams fp = cfg.forest;
    fp.seed = mix_seed(cfg.forest.seed, 2 * c);
    b.trigger_model = train_classifier(pos_trig, neg, fp);
    fp.seed = mix_seed(cfg.forest.seed, 2 * c + 1);
    b.payload_model = train_classifier(pos_pay, neg, fp);
    MixtureParams mp = cfg.mixture;
    mp.seed = mix_seed(cfg.mixture.seed, c);
    b.trojan_model = fit_mixture(vecs, mp);
    b.exemplar = set.trojan_vectors[set.clustering.exemplars[c]];
    b.training_trojans = vecs.size();
    set.bundles.push_back(std::move(b));
  }
  if (set.bundles.empty()) {
    throw Error(ErrorCode::TooFewSamples, "every cluster holds a single Trojan; nothing to train");
  }
  return set;
}

std::string clusters_to_json(const TrainingSet& s) {
  json j;
  j["template_id"] = s.template_id;
  j["converged"] = s.clustering.converged;
  j["iterations"] = s.clustering.iterations;
  j["exemplar_samples"] = s.clustering.exemplars;
  j["exemplars"] = s.exemplars();
  j["labels"] = s.clustering.labels;
  j["trojan_vectors"] = s.trojan_vectors;
  return j.dump(2) + "\n";
}

Samples exemplars_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    Samples ex = j.at("exemplars").get<Samples>();
    for (const auto& e : ex) {
      if (e.size() != kTrojanFeatureCount) throw Error(ErrorCode::Schema, "exemplar has the wrong length");
    }
    return ex;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("cluster table: ") + e.what());
  }
}

std::size_t classify_output(std::span<const double> features, const Samples& exemplars) {
  if (exemplars.empty()) throw Error(ErrorCode::InvalidArgument, "no exemplars to classify against");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < exemplars.size(); ++k) {
    if (exemplars[k].size() != features.size()) {
      throw Error(ErrorCode::DimensionMismatch, "exemplar " + std::to_string(k) + " has " +
                                                    std::to_string(exemplars[k].size()) + " features");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) d += (features[i] - exemplars[k][i]) * (features[i] - exemplars[k][i]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

std::optional<std::string> cross_kind_warning(const ModelBundle& b, const TrojanTemplate& t) {
  const auto ids = builtin_template_ids();
  if (std::find(ids.begin(), ids.end(), b.template_id) == ids.end()) return std::nullopt;
  const TemplateKind trained = builtin_template(b.template_id).kind;
  if (trained == t.kind) return std::nullopt;
  auto kind = [](TemplateKind k) { return k == TemplateKind::Sequential ? "sequential" : "combinational"; };
  return std::string("models trained on ") + kind(trained) + " template " + b.template_id + " drive " + kind(t.kind) +
         " template " + t.template_id + "; flip-flops shift the feature space";
}

}  // namespace tjgen
