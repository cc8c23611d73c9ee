#include <set>
#include <stdexcept>

#include "tjgen/error.hpp"
#include "tjgen/features.hpp"
#include "tjgen/validate.hpp"

namespace tjgen {

std::vector<bool> evaluate_witness(const Netlist& n, const Witness& w) {
  std::vector<std::uint64_t> values(n.nets().size(), 0);
  for (NetId pi : n.primary_inputs()) {
    auto it = w.inputs.find(n.net(pi).name);
    values[pi] = (it != w.inputs.end() && it->second) ? ~std::uint64_t{0} : 0;
  }
  for (CellId ff : n.flip_flops()) {
    auto it = w.state.find(n.cell(ff).name);
    values[n.cell(ff).output] = (it != w.state.end() && it->second) ? ~std::uint64_t{0} : 0;
  }
  Simulator(n).evaluate(values);
  std::vector<bool> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] & 1u;
  return out;
}

Justification justify(const Netlist& n, const TriggerCondition& cond, const JustifyOptions& options) {
  std::set<std::string> seen;
  std::vector<NetId> ids;
  for (const NetValue& nv : cond) {
    if (!seen.insert(nv.net).second) throw Error(ErrorCode::InvalidArgument, "net repeated in condition: " + nv.net);
    ids.push_back(n.net_id(nv.net));
  }

  SatSolver solver;
  std::map<std::string, Lit> sources;
  CnfEncoder enc(n, solver, sources);
  for (std::size_t i = 0; i < cond.size(); ++i) {
    const Lit l = enc.lit(ids[i]);
    solver.add_clause({cond[i].value ? l : -l});
  }
  if (options.dimacs) {
    *options.dimacs << "c justify " << cond.size() << " nets of " << n.module_name() << '\n';
    for (const auto& [key, var] : sources) *options.dimacs << "c var " << var << ' ' << key << '\n';
    solver.write_dimacs(*options.dimacs);
  }

  Justification j;
  j.status = solver.solve(options.timeout_seconds);
  if (!j.satisfiable()) return j;

  for (const auto& [key, var] : sources) {
    const bool v = solver.value(var);
    if (key.starts_with("pi:")) {
      j.witness.inputs[key.substr(3)] = v;
    } else {
      j.witness.state[key.substr(4)] = v;
    }
  }
  const auto replay = evaluate_witness(n, j.witness);
  for (std::size_t i = 0; i < cond.size(); ++i) {
    if (replay[ids[i]] != cond[i].value) {
      throw std::logic_error("justification witness does not reproduce " + cond[i].net);
    }
  }
  return j;
}

bool in_fanin_cone(const Netlist& n, NetId net, NetId of) {
  std::vector<std::uint8_t> visited(n.nets().size(), 0);
  std::vector<NetId> stack{of};
  while (!stack.empty()) {
    const NetId cur = stack.back();
    stack.pop_back();
    if (cur == net) return true;
    if (visited[cur]) continue;
    visited[cur] = 1;
    const Net& nt = n.net(cur);
    if (nt.driver_kind != DriverKind::Cell) continue;
    const Cell& c = n.cell(nt.driver);
    if (c.kind.is_sequential()) continue;  // scan cut
    for (NetId in : c.inputs) stack.push_back(in);
  }
  return false;
}

bool check_no_comb_loop(const Netlist& n, const std::vector<NetId>& triggers, NetId payload, const TopoOrder& order) {
  for (NetId t : triggers) {
    if (order.level[payload] <= order.level[t]) return false;
  }
  for (NetId t : triggers) {
    if (in_fanin_cone(n, payload, t)) return false;
  }
  return true;
}

}  // namespace tjgen
