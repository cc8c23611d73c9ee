#include <algorithm>
#include <optional>
#include <set>
#include <span>

#include "tjgen/bench.hpp"
#include "tjgen/error.hpp"
#include "tjgen/rng.hpp"

namespace tjgen {

BaselineResult baseline_insert(const Netlist& host, const TrojanTemplate& t, const BaselineConfig& cfg) {
  if (!(cfg.theta > 0.0 && cfg.theta <= 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "theta must lie in (0, 0.5]");
  }
  const std::size_t r = cfg.r == 0 ? t.r() : cfg.r;
  if (r != t.r()) {
    throw Error(ErrorCode::InvalidArgument, "template " + t.template_id + " has " + std::to_string(t.r()) +
                                                " trigger ports, not " + std::to_string(r));
  }
  BaselineResult result;
  const BindOptions bind{cfg.clock, cfg.reset, ""};
  const std::vector<SignalStats> stats = simulate(host, cfg.vectors, cfg.seed);
  std::vector<double> probability(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) probability[i] = stats[i].probability;

  // Rare nets that cannot reach their rare value even alone are left out.
  std::vector<NetId> rare;
  for (NetId id : trigger_eligible(host, bind)) {
    if (rare_side_probability(probability[id]) > cfg.theta) continue;
    if (!justify(host, {{host.net(id).name, rare_value(probability[id])}}).satisfiable()) continue;
    rare.push_back(id);
  }
  result.rare_nets = rare.size();
  if (rare.size() < r) {
    throw Error(ErrorCode::InsufficientRareNets, std::to_string(rare.size()) + " usable nets with rare-side probability <= " +
                                                     std::to_string(cfg.theta) + ", need " + std::to_string(r));
  }

  const std::vector<NetId> victims = payload_eligible(host, bind);
  const std::size_t max_attempts = cfg.max_attempts == 0 ? 20 * std::max<std::size_t>(cfg.count, 1) : cfg.max_attempts;
  Rng rng(cfg.seed);
  std::set<std::vector<NetId>> seen;
  while (result.trojans.size() < cfg.count && result.attempts < max_attempts) {
    ++result.attempts;
    // Each pick is uniform over the rare nets that stay jointly satisfiable
    // with the picks so far.
    std::vector<NetId> order = rare;
    rng.shuffle(order.begin(), order.end());
    std::vector<NetId> pick;
    Binding b;
    for (NetId id : order) {
      if (pick.size() == r) break;
      const std::size_t port = pick.size();
      const bool value = t.polarity_cells[port].empty() ? t.active_values[port] : rare_value(probability[id]);
      TriggerCondition cond = b.condition();
      cond.push_back({host.net(id).name, value});
      if (!justify(host, cond).satisfiable()) continue;
      pick.push_back(id);
      b.trigger_nets.push_back(host.net(id).name);
      b.values.push_back(value);
    }
    if (pick.size() < r) {
      ++result.unsat;
      continue;
    }
    std::vector<NetId> key = pick;
    std::sort(key.begin(), key.end());
    if (!seen.insert(key).second) {
      ++result.duplicates;
      continue;
    }
    // A victim can be masked whenever the trigger fires; such a Trojan fails
    // verification and the next random victim is tried.
    std::vector<NetId> victim_order = victims;
    rng.shuffle(victim_order.begin(), victim_order.end());
    std::span<const NetId> rest(victim_order);
    std::optional<BoundTrojan> bound;
    VerifyReport vr;
    for (int tries = 0; tries < 8 && !bound; ++tries) {
      NetId victim;
      try {
        victim = pair_payload(host, pick, rest, host.topo());
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoLegalPayload) throw;
        break;
      }
      rest = rest.subspan(std::find(rest.begin(), rest.end(), victim) - rest.begin() + 1);
      b.payload_net = host.net(victim).name;
      BoundTrojan cand = bind_template(host, t, b, bind);
      VerifyOptions vo;
      vo.vectors = cfg.verify_vectors;
      vo.seed = cfg.seed;
      vo.trigger_net = cand.final_trigger_net;
      vr = verify_inserted(host, cand.netlist, b.condition(), vo);
      if (vr.passed()) {
        bound = std::move(cand);
      } else {
        ++result.verification_failed;
      }
    }
    if (!bound) {
      if (b.payload_net.empty()) ++result.no_payload;
      continue;
    }
    InsertionReport rep;
    rep.design = host.module_name();
    rep.template_id = t.template_id;
    rep.seed = cfg.seed;
    rep.index = result.trojans.size();
    rep.binding = b;
    rep.prefix = bound->prefix;
    rep.final_trigger_net = bound->final_trigger_net;
    rep.features = trojan_feature_vector(bound->netlist, bound->netlist.net_id(bound->final_trigger_net), cfg.vectors,
                                         cfg.seed);
    rep.verification = std::move(vr);
    result.trojans.push_back({std::move(bound->netlist), std::move(rep)});
  }
  if (result.trojans.size() < cfg.count) {
    result.shortfall = "emitted " + std::to_string(result.trojans.size()) + " of " + std::to_string(cfg.count) +
                       " after " + std::to_string(result.attempts) + " attempts (" + std::to_string(result.unsat) +
                       " unsatisfiable, " + std::to_string(result.duplicates) + " repeated sets, " +
                       std::to_string(result.no_payload) + " without a legal payload, " +
                       std::to_string(result.verification_failed) + " failed verification)";
  }
  return result;
}

}  // namespace tjgen
