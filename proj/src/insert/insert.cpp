#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "json.hpp"
#include "tjgen/error.hpp"
#include "tjgen/insert.hpp"
#include "tjgen/rng.hpp"

namespace tjgen {
namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kTriggerStream = 0x7419;
constexpr std::uint64_t kPayloadStream = 0x9a10;
constexpr std::uint64_t kReferenceStream = 0x4ef0;

std::vector<double> model_scores(const Forest& model, const std::vector<NetFeatureRow>& scaled,
                                 std::span<const NetId> nets, const std::vector<std::uint8_t>& mask) {
  std::vector<double> s(scaled.size(), 0.0);
  for (NetId id : nets) s[id] = model.fitness(mask_row(scaled[id], mask));
  return s;
}

std::vector<double> random_scores(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> s(n);
  for (double& x : s) x = rng.uniform();
  return s;
}

json features_json(const TrojanFeatureRow& f) {
  json j = json::object();
  const auto names = trojan_feature_names();
  for (std::size_t i = 0; i < f.size(); ++i) j[std::string(names[i])] = f[i];
  return j;
}

json binding_json(const Binding& b) {
  json trig = json::array();
  for (std::size_t i = 0; i < b.trigger_nets.size(); ++i) {
    trig.push_back({{"net", b.trigger_nets[i]}, {"value", b.values[i] ? 1 : 0}});
  }
  return {{"trigger", trig}, {"payload", b.payload_net}};
}

std::string file_stem(const InsertionReport& r) {
  return r.design + "_" + r.template_id + "_" + std::to_string(r.index);
}

}  // namespace

InsertionResult insert_trojans(const Netlist& host, const TrojanTemplate& t, const ModelBundle& bundle,
                               const InsertionConfig& cfg) {
  if (cfg.virtual_pool_factor < 1) throw Error(ErrorCode::InvalidArgument, "virtual pool factor must be >= 1");
  if (bundle.feature_mask.size() != kNetFeatureCount) {
    throw Error(ErrorCode::Schema, "bundle feature mask must have " + std::to_string(kNetFeatureCount) + " entries");
  }
  InsertionResult result;
  result.requested = cfg.num_trojans;
  PoolLedger& ledger = result.ledger;
  ledger.target = cfg.num_trojans * cfg.virtual_pool_factor;
  if (cfg.num_trojans == 0) return result;

  const BindOptions bind{cfg.clock, cfg.reset, ""};
  const FeatureTable ft = extract_features(host, {.vectors = cfg.vectors, .seed = cfg.seed});
  const MinMaxScaler scaler = MinMaxScaler::fit<NetFeatureRow>(ft.rows);
  const std::vector<NetFeatureRow> scaled = scale_rows(scaler, ft.rows);
  std::vector<double> probability(ft.rows.size());
  for (std::size_t i = 0; i < ft.rows.size(); ++i) probability[i] = ft.rows[i][kSignalProbability];

  const std::vector<NetId> trig_elig = trigger_eligible(host, bind);
  const std::vector<NetId> pay_elig = payload_eligible(host, bind);
  std::vector<double> trig_score, pay_score;
  if (cfg.selection == Selection::Model) {
    trig_score = model_scores(bundle.trigger_model, scaled, trig_elig, bundle.feature_mask);
    pay_score = model_scores(bundle.payload_model, scaled, pay_elig, bundle.feature_mask);
  } else {
    trig_score = random_scores(ft.rows.size(), mix_seed(cfg.seed, kTriggerStream));
    pay_score = random_scores(ft.rows.size(), mix_seed(cfg.seed, kPayloadStream));
  }
  const std::vector<NetId> pay_rank = payload_ranking(host, pay_elig, pay_score);

  std::optional<TriggerSetEnumerator> sets;
  std::vector<NetId> live;
  try {
    std::vector<NetId> cand = select_trigger_candidates(host, trig_elig, trig_score, cfg.candidate_cap);
    // With a polarity stage on every port each net must take its rare value;
    // a net that cannot do so alone cannot be in any valid set.
    const bool rare_only = std::none_of(t.polarity_cells.begin(), t.polarity_cells.end(),
                                        [](const std::string& c) { return c.empty(); });
    std::vector<double> cand_scores;
    for (NetId id : cand) {
      if (rare_only && !justify(host, {{host.net(id).name, rare_value(probability[id])}}).satisfiable()) {
        ++ledger.dead_candidates;
        continue;
      }
      live.push_back(id);
      cand_scores.push_back(trig_score[id]);
    }
    sets.emplace(live, cand_scores, t.r(), cfg.diversity, 1000 * cfg.num_trojans);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoCandidates && e.code() != ErrorCode::InsufficientCandidates) throw;
    result.shortfall = e.what();
    ledger.exhausted = true;
    return result;
  }

  // Random selection draws independent r-subsets; model selection walks the
  // ranked combinations.
  const bool random_sets = cfg.selection == Selection::Random;
  const std::size_t limit = 1000 * cfg.num_trojans;
  Rng set_rng(mix_seed(cfg.seed, kTriggerStream + 1));
  std::set<std::vector<NetId>> drawn;
  auto next_set = [&]() -> std::optional<std::vector<NetId>> {
    if (!random_sets) return sets->next();
    if (ledger.sets_enumerated >= limit) return std::nullopt;
    // Repeats are redrawn; bounded so a tiny universe still terminates.
    for (std::size_t tries = 0; tries < limit; ++tries) {
      std::vector<NetId> pick = live;
      for (std::size_t i = 0; i < t.r(); ++i) std::swap(pick[i], pick[i + set_rng.below(pick.size() - i)]);
      pick.resize(t.r());
      std::vector<NetId> key = pick;
      std::sort(key.begin(), key.end());
      if (drawn.insert(key).second) return pick;
    }
    return std::nullopt;
  };

  const VirtualOptions vopt{.vectors = cfg.vectors, .seed = cfg.seed, .bind = bind};
  std::vector<VirtualTrojan> pool;
  std::map<std::vector<NetId>, bool> prefix_sat;
  while (pool.size() < ledger.target) {
    auto set = next_set();
    if (!set) {
      ledger.exhausted = random_sets ? ledger.sets_enumerated < limit : !sets->at_limit();
      break;
    }
    ++ledger.sets_enumerated;
    Binding b;
    for (NetId id : *set) b.trigger_nets.push_back(host.net(id).name);
    b.values = required_values(t, *set, probability);
    const TriggerCondition cond = b.condition();
    if (!justify(host, cond).satisfiable()) {
      ++ledger.unsat;
      if (random_sets) continue;
      // Skip every extension of the shortest conflicting prefix.
      for (std::size_t len = 2; len < t.r(); ++len) {
        const std::vector<NetId> prefix(set->begin(), set->begin() + len);
        auto it = prefix_sat.find(prefix);
        if (it == prefix_sat.end()) {
          const TriggerCondition pc(cond.begin(), cond.begin() + len);
          it = prefix_sat.emplace(prefix, justify(host, pc).satisfiable()).first;
        }
        if (!it->second) {
          sets->skip_prefix(len);
          ++ledger.prefixes_pruned;
          break;
        }
      }
      continue;
    }
    try {
      b.payload_net = host.net(pair_payload(host, *set, pay_rank, host.topo())).name;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoLegalPayload) throw;
      ++ledger.no_payload;
      continue;
    }
    pool.push_back(build_virtual(host, t, b, vopt));
    ++ledger.virtual_evaluated;
  }

  if (pool.empty()) {
    result.shortfall = "no valid virtual Trojan after " + std::to_string(ledger.sets_enumerated) + " trigger sets (" +
                       std::to_string(ledger.unsat) + " unsatisfiable, " + std::to_string(ledger.no_payload) +
                       " without a legal payload)";
    return result;
  }

  const Sample ref = sample_reference(bundle.trojan_model, mix_seed(cfg.seed, kReferenceStream));
  result.reference = ref;
  std::vector<std::size_t> order = rank_pool(pool, ref, cfg.feature_weights);
  if (!cfg.sort_pool) std::iota(order.begin(), order.end(), 0);
  for (std::size_t i : order) result.pool.push_back(pool[i]);

  for (std::size_t rank = 0; rank < result.pool.size() && result.trojans.size() < cfg.num_trojans; ++rank) {
    const VirtualTrojan& v = result.pool[rank];
    BoundTrojan bound = bind_template(host, t, v.binding, bind);
    VerifyOptions vo;
    vo.vectors = cfg.verify_vectors;
    vo.seed = cfg.seed;
    vo.trigger_net = bound.final_trigger_net;
    VerifyReport vr = verify_inserted(host, bound.netlist, v.binding.condition(), vo);
    if (!vr.passed()) {
      ++ledger.verification_failed;
      continue;
    }
    InsertionReport r;
    r.design = host.module_name();
    r.template_id = t.template_id;
    r.seed = cfg.seed;
    r.index = result.trojans.size();
    r.pool_rank = rank;
    r.binding = v.binding;
    r.prefix = bound.prefix;
    r.final_trigger_net = bound.final_trigger_net;
    r.features = v.features;
    r.reference = ref;
    r.distance = v.distance;
    r.verification = std::move(vr);
    result.trojans.push_back({std::move(bound.netlist), std::move(r)});
  }

  if (result.trojans.size() < cfg.num_trojans) {
    result.shortfall = "emitted " + std::to_string(result.trojans.size()) + " of " +
                       std::to_string(cfg.num_trojans) + ": pool of " + std::to_string(result.pool.size()) + "/" +
                       std::to_string(ledger.target) + " virtual Trojans (" +
                       (ledger.exhausted ? "design exhausted" : "enumeration limit reached") + "), " +
                       std::to_string(ledger.verification_failed) + " failed verification";
  }
  return result;
}

std::string report_json(const InsertionReport& r) {
  json j;
  j["design"] = r.design;
  j["template_id"] = r.template_id;
  j["seed"] = r.seed;
  j["index"] = r.index;
  j["pool_rank"] = r.pool_rank;
  j["binding"] = binding_json(r.binding);
  j["prefix"] = r.prefix;
  j["final_trigger_net"] = r.final_trigger_net;
  j["features"] = features_json(r.features);
  j["reference"] = r.reference;
  j["distance"] = r.distance;
  const VerifyReport& v = r.verification;
  j["verification"] = {{"passed", v.passed()},
                       {"dormant_vectors", v.compared},
                       {"dormant_mismatches", v.mismatches},
                       {"excluded_vectors", v.excluded},
                       {"acyclic", v.acyclic},
                       {"activation_cycle", v.activation_cycle},
                       {"differing_outputs", v.differing_outputs}};
  j["witness"] = {{"inputs", v.witness.inputs}, {"state", v.witness.state}};
  return j.dump(2) + "\n";
}

InsertionReport report_from_json(std::string_view text) {
  InsertionReport r;
  try {
    const json j = json::parse(text);
    r.design = j.at("design").get<std::string>();
    r.template_id = j.at("template_id").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.index = j.at("index").get<std::size_t>();
    r.pool_rank = j.value("pool_rank", std::size_t{0});
    for (const auto& e : j.at("binding").at("trigger")) {
      r.binding.trigger_nets.push_back(e.at("net").get<std::string>());
      r.binding.values.push_back(e.at("value").get<int>() != 0);
    }
    r.binding.payload_net = j.at("binding").at("payload").get<std::string>();
    r.prefix = j.at("prefix").get<std::string>();
    r.final_trigger_net = j.at("final_trigger_net").get<std::string>();
    const auto names = trojan_feature_names();
    for (std::size_t i = 0; i < kTrojanFeatureCount; ++i) {
      r.features[i] = j.at("features").at(std::string(names[i])).get<double>();
    }
    r.reference = j.value("reference", std::vector<double>{});
    r.distance = j.value("distance", 0.0);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("insertion report: ") + e.what());
  }
  return r;
}

std::string index_json(const InsertionResult& result, const InsertionConfig& cfg) {
  json j;
  j["requested"] = result.requested;
  j["emitted"] = result.trojans.size();
  j["shortfall"] = result.shortfall;
  j["config"] = {{"seed", cfg.seed},
                 {"virtual_pool_factor", cfg.virtual_pool_factor},
                 {"feature_weights", cfg.feature_weights},
                 {"candidate_cap", cfg.candidate_cap},
                 {"vectors", cfg.vectors},
                 {"verify_vectors", cfg.verify_vectors},
                 {"selection", cfg.selection == Selection::Model ? "model" : "random"},
                 {"sort_pool", cfg.sort_pool},
                 {"diversity", cfg.diversity}};
  const PoolLedger& l = result.ledger;
  j["pool_ledger"] = {{"target", l.target},
                      {"sets_enumerated", l.sets_enumerated},
                      {"unsatisfiable", l.unsat},
                      {"dead_candidates", l.dead_candidates},
                      {"prefixes_pruned", l.prefixes_pruned},
                      {"no_legal_payload", l.no_payload},
                      {"virtual_evaluated", l.virtual_evaluated},
                      {"verification_failed", l.verification_failed},
                      {"exhausted", l.exhausted}};
  j["reference"] = result.reference;
  json pool = json::array();
  for (const auto& v : result.pool) {
    json e = binding_json(v.binding);
    e["features"] = features_json(v.features);
    e["distance"] = v.distance;
    pool.push_back(e);
  }
  j["pool"] = pool;
  json files = json::array();
  for (const auto& tj : result.trojans) {
    const std::string stem = file_stem(tj.report);
    files.push_back({{"netlist", stem + ".v"}, {"report", stem + ".json"}});
  }
  j["trojans"] = files;
  return j.dump(2) + "\n";
}

void write_insertion(const InsertionResult& result, const InsertionConfig& cfg, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
    out << text;
  };
  for (const auto& tj : result.trojans) {
    const std::string stem = file_stem(tj.report);
    write(dir / (stem + ".v"), emit_netlist(tj.netlist));
    write(dir / (stem + ".json"), report_json(tj.report));
  }
  write(dir / "index.json", index_json(result, cfg));
}

}  // namespace tjgen
