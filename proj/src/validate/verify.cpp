#include <algorithm>
#include <bit>
#include <set>

#include "tjgen/error.hpp"
#include "tjgen/features.hpp"
#include "tjgen/validate.hpp"

namespace tjgen {
namespace {

constexpr std::uint64_t kOnes = ~std::uint64_t{0};

std::vector<std::string> names_of(const Netlist& n, std::span<const NetId> ids) {
  std::vector<std::string> out;
  for (NetId id : ids) out.push_back(n.net(id).name);
  std::sort(out.begin(), out.end());
  return out;
}

// Observation points shared by both netlists: primary outputs by name and
// the D pins of flip-flops present in the original (pseudo-outputs).
struct Observed {
  std::string name;
  NetId in_original;
  NetId in_modified;
};

// Flip-flops that exist only in the modified netlist; they hold state.
struct StatefulFf {
  NetId q, d;
  std::optional<NetId> reset;
};

struct Pairing {
  std::vector<Observed> observed;
  std::vector<StatefulFf> stateful;
  std::set<std::string> host_ffs;
};

Pairing pair_up(const Netlist& a, const Netlist& b) {
  Pairing p;
  for (NetId po : a.primary_outputs()) {
    p.observed.push_back({a.net(po).name, po, b.net_id(a.net(po).name)});
  }
  for (CellId ff : a.flip_flops()) {
    const Cell& c = a.cell(ff);
    p.host_ffs.insert(c.name);
    const auto other = b.find_cell(c.name);
    if (!other || !b.cell(*other).kind.is_sequential()) {
      throw Error(ErrorCode::InterfaceMismatch, "flip-flop " + c.name + " missing from modified netlist");
    }
    p.observed.push_back({"D(" + c.name + ")", c.inputs[0], b.cell(*other).inputs[0]});
  }
  for (CellId ff : b.flip_flops()) {
    const Cell& c = b.cell(ff);
    if (p.host_ffs.contains(c.name)) continue;
    StatefulFf s{c.output, c.inputs[0], std::nullopt};
    if (c.kind.has_reset()) s.reset = c.inputs[2];
    p.stateful.push_back(s);
  }
  return p;
}

void set_sources(const Netlist& n, const Witness& w, std::vector<std::uint64_t>& v) {
  for (NetId pi : n.primary_inputs()) {
    auto it = w.inputs.find(n.net(pi).name);
    v[pi] = (it != w.inputs.end() && it->second) ? kOnes : 0;
  }
  for (CellId ff : n.flip_flops()) {
    auto it = w.state.find(n.cell(ff).name);
    v[n.cell(ff).output] = (it != w.state.end() && it->second) ? kOnes : 0;
  }
}

Lit xor_lit(SatSolver& s, Lit a, Lit b) {
  const Lit y = s.new_var();
  s.add_clause({-y, a, b});
  s.add_clause({-y, -a, -b});
  s.add_clause({y, -a, b});
  s.add_clause({y, a, -b});
  return y;
}

}  // namespace

VerifyReport verify_inserted(const Netlist& original, const Netlist& modified, const TriggerCondition& cond,
                             const VerifyOptions& options) {
  if (names_of(original, original.primary_inputs()) != names_of(modified, modified.primary_inputs()) ||
      names_of(original, original.primary_outputs()) != names_of(modified, modified.primary_outputs())) {
    throw Error(ErrorCode::InterfaceMismatch, "primary input/output names differ");
  }
  VerifyReport report;
  try {
    topo_sort(modified);
  } catch (const Error&) {
    report.acyclic = false;
    report.detail = "modified netlist has a combinational cycle";
    return report;
  }
  const Pairing pairing = pair_up(original, modified);
  std::vector<std::pair<NetId, bool>> cond_ids;
  for (const NetValue& nv : cond) cond_ids.push_back({original.net_id(nv.net), nv.value});

  // Dormant equivalence: 64 independent lanes, each a run of cycles.
  const Simulator sim_o(original), sim_m(modified);
  StimulusSource stim_o(original, options.seed), stim_m(modified, options.seed);
  std::vector<std::uint64_t> vo(original.nets().size()), vm(modified.nets().size());
  std::vector<std::uint64_t> state(pairing.stateful.size(), 0);
  std::uint64_t excluded = 0;
  std::set<std::string> differing;
  const std::size_t cycles = (options.vectors + 63) / 64;
  for (std::size_t cyc = 0; cyc < cycles; ++cyc) {
    const std::size_t left = options.vectors - cyc * 64;
    const std::uint64_t valid = left >= 64 ? kOnes : ((std::uint64_t{1} << left) - 1);
    stim_o.fill(vo);
    stim_m.fill(vm);
    for (std::size_t k = 0; k < state.size(); ++k) vm[pairing.stateful[k].q] = state[k];
    sim_o.evaluate(vo);
    sim_m.evaluate(vm);
    std::uint64_t hit = kOnes;
    for (auto [id, value] : cond_ids) hit &= value ? vo[id] : ~vo[id];
    if (cond_ids.empty()) hit = 0;
    excluded |= hit;
    const std::uint64_t live = valid & ~excluded;
    for (const Observed& o : pairing.observed) {
      const std::uint64_t diff = (vo[o.in_original] ^ vm[o.in_modified]) & live;
      if (diff) {
        report.mismatches += std::popcount(diff);
        differing.insert(o.name);
      }
    }
    report.compared += std::popcount(live);
    report.excluded += std::popcount(valid & excluded);
    for (std::size_t k = 0; k < state.size(); ++k) {
      const StatefulFf& f = pairing.stateful[k];
      state[k] = vm[f.d] & (f.reset ? vm[*f.reset] : kOnes);  // active-low reset
    }
  }
  if (report.mismatches) {
    report.detail = "dormant mismatch on";
    for (const auto& d : differing) report.detail += " " + d;
    return report;
  }

  // Activation: find sources where the condition holds and an observed
  // point differs, then reproduce it by simulation from the reset state.
  SatSolver solver;
  std::map<std::string, Lit> sources;
  CnfEncoder enc_o(original, solver, sources), enc_m(modified, solver, sources);
  for (auto [id, value] : cond_ids) {
    const Lit l = enc_o.lit(id);
    solver.add_clause({value ? l : -l});
  }
  if (options.trigger_net) solver.add_clause({enc_m.lit(modified.net_id(*options.trigger_net))});
  for (const StatefulFf& f : pairing.stateful) {
    if (f.reset) solver.add_clause({enc_m.lit(*f.reset)});
  }
  std::vector<Lit> any_diff;
  for (const Observed& o : pairing.observed) {
    any_diff.push_back(xor_lit(solver, enc_o.lit(o.in_original), enc_m.lit(o.in_modified)));
  }
  solver.add_clause(any_diff);

  for (int attempt = 0; attempt < 4; ++attempt) {
    const SatResult r = solver.solve(options.timeout_seconds);
    if (r != SatResult::Sat) {
      if (attempt == 0) report.detail = std::string("activation search: ") + std::string(to_string(r));
      break;
    }
    report.activation_found = true;
    Witness w;
    std::vector<Lit> block;
    for (const auto& [key, var] : sources) {
      const bool v = solver.value(var);
      if (key.starts_with("pi:")) {
        w.inputs[key.substr(3)] = v;
      } else if (pairing.host_ffs.contains(key.substr(4))) {
        w.state[key.substr(4)] = v;
      } else {
        continue;  // stateful flip-flops are not inputs
      }
      block.push_back(v ? -var : var);
    }

    std::fill(state.begin(), state.end(), 0);
    for (int cyc = 0; cyc < options.activation_cycles && !report.activation_replayed; ++cyc) {
      set_sources(original, w, vo);
      set_sources(modified, w, vm);
      for (std::size_t k = 0; k < state.size(); ++k) vm[pairing.stateful[k].q] = state[k];
      sim_o.evaluate(vo);
      sim_m.evaluate(vm);
      for (const Observed& o : pairing.observed) {
        if ((vo[o.in_original] ^ vm[o.in_modified]) & 1u) {
          report.activation_replayed = true;
          report.activation_cycle = cyc;
          report.differing_outputs.push_back(o.name);
        }
      }
      for (std::size_t k = 0; k < state.size(); ++k) {
        const StatefulFf& f = pairing.stateful[k];
        state[k] = vm[f.d] & (f.reset ? vm[*f.reset] : kOnes);
      }
    }
    if (report.activation_replayed) {
      report.witness = std::move(w);
      report.detail.clear();
      break;
    }
    report.detail = "activation witness did not reproduce within " + std::to_string(options.activation_cycles) +
                    " cycles";
    if (block.empty()) break;
    solver.add_clause(block);
  }
  return report;
}

}  // namespace tjgen
