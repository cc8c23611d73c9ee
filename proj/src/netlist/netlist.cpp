#include "tjgen/netlist.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

#include "tjgen/error.hpp"

namespace tjgen {

std::optional<NetId> Netlist::find_net(std::string_view name) const {
  auto it = net_index_.find(std::string(name));
  if (it == net_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<CellId> Netlist::find_cell(std::string_view name) const {
  auto it = cell_index_.find(std::string(name));
  if (it == cell_index_.end()) return std::nullopt;
  return it->second;
}

NetId Netlist::net_id(std::string_view name) const {
  if (auto id = find_net(name)) return *id;
  throw Error(ErrorCode::UndeclaredNet, std::string(name));
}

std::vector<CellId> Netlist::flip_flops() const {
  std::vector<CellId> out;
  for (CellId c = 0; c < cells_.size(); ++c) {
    if (cells_[c].kind.is_sequential()) out.push_back(c);
  }
  return out;
}

std::vector<NetId> Netlist::sources() const {
  std::vector<NetId> out(inputs_.begin(), inputs_.end());
  for (CellId c : flip_flops()) out.push_back(cells_[c].output);
  return out;
}

bool Netlist::is_source(NetId id) const {
  const Net& n = nets_[id];
  if (n.driver_kind == DriverKind::PrimaryInput) return true;
  return n.driver_kind == DriverKind::Cell && cells_[n.driver].kind.is_sequential();
}

bool Netlist::is_sequential() const {
  return std::any_of(cells_.begin(), cells_.end(),
                     [](const Cell& c) { return c.kind.is_sequential(); });
}

// ---------------------------------------------------------------------------

NetlistBuilder::NetlistBuilder(std::string module_name) : module_name_(std::move(module_name)) {}

NetlistBuilder NetlistBuilder::from(const Netlist& n) {
  NetlistBuilder b(n.module_name());
  for (const Net& net : n.nets()) {
    if (net.is_constant()) continue;
    if (net.is_input) {
      b.add_input(net.name);
    } else if (net.is_output) {
      b.add_output(net.name);
    } else {
      b.add_wire(net.name);
    }
  }
  for (const Cell& c : n.cells()) {
    std::vector<std::string> ins;
    ins.reserve(c.inputs.size());
    for (NetId i : c.inputs) ins.push_back(n.net(i).name);
    b.add_cell(c.name, c.kind, n.net(c.output).name, std::move(ins));
  }
  if (n.clock_net()) b.set_clock(n.net(*n.clock_net()).name);
  if (n.reset_net()) b.set_reset(n.net(*n.reset_net()).name);
  return b;
}

void NetlistBuilder::declare(std::string name, Role role) {
  if (name == kConst0 || name == kConst1) {
    throw Error(ErrorCode::Parse, "cannot declare constant " + name);
  }
  auto it = decl_index_.find(name);
  if (it != decl_index_.end()) {
    Decl& d = decls_[it->second];
    // `output y; wire y;` is legal Verilog; the port role wins.
    if (role == Role::Wire) return;
    if (d.role == Role::Wire) {
      d.role = role;
      return;
    }
    if (d.role == role) return;
    throw Error(ErrorCode::NameCollision, "net " + name + " declared as both input and output");
  }
  decl_index_.emplace(name, decls_.size());
  decls_.push_back({std::move(name), role});
}

NetlistBuilder& NetlistBuilder::add_input(std::string name) {
  declare(std::move(name), Role::Input);
  return *this;
}
NetlistBuilder& NetlistBuilder::add_output(std::string name) {
  declare(std::move(name), Role::Output);
  return *this;
}
NetlistBuilder& NetlistBuilder::add_wire(std::string name) {
  declare(std::move(name), Role::Wire);
  return *this;
}

NetlistBuilder& NetlistBuilder::add_cell(std::string name, CellKind kind, std::string output,
                                         std::vector<std::string> inputs) {
  if (cell_index_.count(name)) throw Error(ErrorCode::NameCollision, "duplicate instance " + name);
  if (static_cast<int>(inputs.size()) != kind.arity) {
    throw Error(ErrorCode::UnsupportedCell, name + ": " + kind.name() + " expects " +
                                                std::to_string(kind.arity) + " inputs, got " +
                                                std::to_string(inputs.size()));
  }
  cell_index_.emplace(name, cells_.size());
  cells_.push_back({std::move(name), kind, std::move(output), std::move(inputs)});
  return *this;
}

NetlistBuilder& NetlistBuilder::set_clock(std::string name) {
  clock_ = std::move(name);
  return *this;
}
NetlistBuilder& NetlistBuilder::set_reset(std::string name) {
  reset_ = std::move(name);
  return *this;
}

bool NetlistBuilder::has_net(std::string_view name) const {
  return decl_index_.count(std::string(name)) > 0;
}
bool NetlistBuilder::has_cell(std::string_view name) const {
  return cell_index_.count(std::string(name)) > 0;
}

void NetlistBuilder::replace_cell_kind(std::string_view cell, CellKind kind) {
  auto it = cell_index_.find(std::string(cell));
  if (it == cell_index_.end()) throw Error(ErrorCode::InvalidArgument, "no cell " + std::string(cell));
  CellDecl& c = cells_[it->second];
  if (c.kind.arity != kind.arity) {
    throw Error(ErrorCode::UnsupportedCell, "arity mismatch replacing " + c.name);
  }
  c.kind = kind;
}

void NetlistBuilder::redirect_driver(std::string_view net, const std::string& new_net) {
  for (CellDecl& c : cells_) {
    if (c.output == net) {
      c.output = new_net;
      return;
    }
  }
  throw Error(ErrorCode::InvalidVictim, std::string(net) + " is not driven by a cell");
}

Netlist NetlistBuilder::build() const {
  Netlist n;
  n.module_name_ = module_name_;

  // Which declared nets are referenced or driven; unused undriven wires are dropped.
  std::unordered_map<std::string, int> drivers;
  std::unordered_map<std::string, bool> used;
  for (const CellDecl& c : cells_) {
    ++drivers[c.output];
    for (const auto& in : c.inputs) used[in] = true;
  }

  for (const Decl& d : decls_) {
    const bool driven = drivers.count(d.name) > 0;
    if (d.role == Role::Wire && !driven && !used.count(d.name)) continue;
    Net net;
    net.name = d.name;
    net.is_input = d.role == Role::Input;
    net.is_output = d.role == Role::Output;
    n.net_index_.emplace(d.name, static_cast<NetId>(n.nets_.size()));
    n.nets_.push_back(std::move(net));
  }

  auto resolve = [&](const std::string& name, const std::string& cell) -> NetId {
    if (name.empty()) throw Error(ErrorCode::DanglingInput, "unconnected input on " + cell);
    auto it = n.net_index_.find(name);
    if (it != n.net_index_.end()) return it->second;
    if (name == kConst0 || name == kConst1) {
      Net k;
      k.name = name;
      k.driver_kind = name == kConst0 ? DriverKind::Const0 : DriverKind::Const1;
      const auto id = static_cast<NetId>(n.nets_.size());
      n.net_index_.emplace(name, id);
      n.nets_.push_back(std::move(k));
      return id;
    }
    throw Error(ErrorCode::UndeclaredNet, name + " (referenced by " + cell + ")");
  };

  std::vector<bool> has_driver(n.nets_.size(), false);
  for (const Net& net : n.nets_) {
    if (net.is_input) has_driver[n.net_index_.at(net.name)] = true;
  }
  n.cells_.reserve(cells_.size());
  for (const CellDecl& cd : cells_) {
    Cell c;
    c.name = cd.name;
    c.kind = cd.kind;
    const auto cid = static_cast<CellId>(n.cells_.size());
    if (cd.output == kConst0 || cd.output == kConst1) {
      throw Error(ErrorCode::MultipleDrivers, cd.name + " drives a constant");
    }
    auto out_it = n.net_index_.find(cd.output);
    if (out_it == n.net_index_.end()) {
      throw Error(ErrorCode::UndeclaredNet, cd.output + " (driven by " + cd.name + ")");
    }
    c.output = out_it->second;
    if (has_driver.size() < n.nets_.size()) has_driver.resize(n.nets_.size(), false);
    if (has_driver[c.output]) {
      throw Error(ErrorCode::MultipleDrivers, "net " + cd.output + " (second driver " + cd.name + ")");
    }
    has_driver[c.output] = true;
    n.nets_[c.output].driver_kind = DriverKind::Cell;
    n.nets_[c.output].driver = cid;
    for (const auto& in : cd.inputs) c.inputs.push_back(resolve(in, cd.name));
    n.cell_index_.emplace(c.name, cid);
    n.cells_.push_back(std::move(c));
  }
  has_driver.resize(n.nets_.size(), false);

  for (NetId id = 0; id < n.nets_.size(); ++id) {
    Net& net = n.nets_[id];
    if (net.is_constant()) continue;
    if (!has_driver[id]) throw Error(ErrorCode::UndrivenNet, net.name);
    if (net.is_input) n.inputs_.push_back(id);
    if (net.is_output) n.outputs_.push_back(id);
  }
  for (CellId c = 0; c < n.cells_.size(); ++c) {
    const auto& ins = n.cells_[c].inputs;
    for (int p = 0; p < static_cast<int>(ins.size()); ++p) n.nets_[ins[p]].sinks.push_back({c, p});
  }

  auto pick_dff_pin_net = [&](int pin) -> std::optional<NetId> {
    std::map<std::string, int> counts;
    for (const Cell& c : n.cells_) {
      if (c.kind.is_sequential() && pin < c.kind.arity) ++counts[n.nets_[c.inputs[pin]].name];
    }
    std::optional<NetId> best;
    int best_count = 0;
    for (const auto& [name, count] : counts) {  // map order gives the lexicographic tie-break
      if (count > best_count) {
        best_count = count;
        best = n.net_index_.at(name);
      }
    }
    return best;
  };
  auto lookup = [&](const std::string& name) {
    auto it = n.net_index_.find(name);
    if (it == n.net_index_.end()) throw Error(ErrorCode::UndeclaredNet, "clock/reset net " + name);
    return it->second;
  };
  n.clock_ = clock_ ? std::optional<NetId>(lookup(*clock_)) : pick_dff_pin_net(1);
  n.reset_ = reset_ ? std::optional<NetId>(lookup(*reset_)) : pick_dff_pin_net(2);

  n.topo_ = topo_sort(n);
  return n;
}

// ---------------------------------------------------------------------------

TopoOrder topo_sort(const Netlist& n) {
  TopoOrder t;
  t.level.assign(n.nets().size(), 0);
  std::vector<int> pending(n.cells().size(), 0);
  std::vector<CellId> comb;
  for (CellId c = 0; c < n.cells().size(); ++c) {
    const Cell& cell = n.cell(c);
    if (cell.kind.is_sequential()) continue;
    comb.push_back(c);
    for (NetId in : cell.inputs) {
      const Net& net = n.net(in);
      if (net.driver_kind == DriverKind::Cell && !n.cell(net.driver).kind.is_sequential()) {
        ++pending[c];
      }
    }
  }
  // Kahn's algorithm; the heap key makes the order independent of declaration order.
  using Key = std::pair<int, std::string_view>;
  auto cmp = [](const std::pair<Key, CellId>& a, const std::pair<Key, CellId>& b) {
    return a.first > b.first;
  };
  std::priority_queue<std::pair<Key, CellId>, std::vector<std::pair<Key, CellId>>, decltype(cmp)>
      ready(cmp);
  auto push = [&](CellId c) {
    int lvl = 0;
    for (NetId in : n.cell(c).inputs) lvl = std::max(lvl, t.level[in] + 1);
    t.level[n.cell(c).output] = lvl;
    ready.push({{lvl, n.net(n.cell(c).output).name}, c});
  };
  for (CellId c : comb) {
    if (pending[c] == 0) push(c);
  }
  while (!ready.empty()) {
    const CellId c = ready.top().second;
    ready.pop();
    t.cell_order.push_back(c);
    t.max_level = std::max(t.max_level, t.level[n.cell(c).output]);
    for (const PinRef& s : n.net(n.cell(c).output).sinks) {
      const Cell& sink = n.cell(s.cell);
      if (sink.kind.is_sequential()) continue;
      if (--pending[s.cell] == 0) push(s.cell);
    }
  }
  if (t.cell_order.size() != comb.size()) {
    std::vector<std::string> stuck;
    for (CellId c : comb) {
      if (pending[c] > 0) stuck.push_back(n.cell(c).name);
    }
    std::sort(stuck.begin(), stuck.end());
    std::string msg = "cells on or behind a loop:";
    for (std::size_t i = 0; i < stuck.size() && i < 8; ++i) msg += " " + stuck[i];
    throw Error(ErrorCode::CombinationalCycle, msg);
  }
  return t;
}

bool structurally_equal(const Netlist& a, const Netlist& b) {
  auto names = [](const Netlist& n, std::span<const NetId> ids) {
    std::vector<std::string> out;
    for (NetId id : ids) out.push_back(n.net(id).name);
    std::sort(out.begin(), out.end());
    return out;
  };
  if (names(a, a.primary_inputs()) != names(b, b.primary_inputs())) return false;
  if (names(a, a.primary_outputs()) != names(b, b.primary_outputs())) return false;
  if (a.cells().size() != b.cells().size() || a.nets().size() != b.nets().size()) return false;
  for (const Cell& ca : a.cells()) {
    auto id = b.find_cell(ca.name);
    if (!id) return false;
    const Cell& cb = b.cell(*id);
    if (ca.kind != cb.kind) return false;
    if (a.net(ca.output).name != b.net(cb.output).name) return false;
    for (std::size_t p = 0; p < ca.inputs.size(); ++p) {
      if (a.net(ca.inputs[p]).name != b.net(cb.inputs[p]).name) return false;
    }
  }
  for (const Net& na : a.nets()) {
    if (!b.find_net(na.name)) return false;
  }
  return true;
}

std::string dump_edges(const Netlist& n) {
  std::ostringstream os;
  for (const Net& net : n.nets()) {
    std::string from;
    switch (net.driver_kind) {
      case DriverKind::PrimaryInput: from = "PI:" + net.name; break;
      case DriverKind::Cell: from = n.cell(net.driver).name; break;
      case DriverKind::Const0:
      case DriverKind::Const1: from = "CONST:" + net.name; break;
    }
    for (const PinRef& s : net.sinks) {
      const Cell& c = n.cell(s.cell);
      os << from << " -> " << c.name << "." << c.kind.input_pin(s.pin) << " via " << net.name << "\n";
    }
    if (net.is_output) os << from << " -> PO:" << net.name << " via " << net.name << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------

std::string unique_prefix(const Netlist& n, std::string_view base) {
  for (int k = 0;; ++k) {
    const std::string p = std::string(base) + std::to_string(k) + "_";
    bool clash = false;
    for (const Net& net : n.nets()) {
      if (net.name.starts_with(p)) {
        clash = true;
        break;
      }
    }
    for (const Cell& c : n.cells()) {
      if (clash) break;
      if (c.name.starts_with(p)) clash = true;
    }
    if (!clash) return p;
  }
}

Netlist splice_subcircuit(const Netlist& host, const Netlist& sub, const SpliceSpec& spec) {
  const auto victim_id = host.find_net(spec.victim);
  if (!victim_id) throw Error(ErrorCode::UndeclaredNet, "victim " + spec.victim);
  const Net& victim = host.net(*victim_id);
  if (victim.driver_kind != DriverKind::Cell) {
    throw Error(ErrorCode::InvalidVictim, spec.victim + " is not driven by a cell");
  }
  if (!sub.find_net(spec.payload_in) || !sub.net(sub.net_id(spec.payload_in)).is_input) {
    throw Error(ErrorCode::UnboundPort, "payload_in " + spec.payload_in + " is not a subcircuit input");
  }
  const NetId pout = sub.net_id(spec.payload_out);

  // Map every sub net to its host-side name.
  std::unordered_map<NetId, std::string> rename;
  for (NetId pi : sub.primary_inputs()) {
    const std::string& port = sub.net(pi).name;
    if (port == spec.payload_in) {
      rename[pi] = spec.prefix + port;
      continue;
    }
    auto it = spec.inputs.find(port);
    if (it == spec.inputs.end()) {
      if (sub.clock_net() && *sub.clock_net() == pi) {
        throw Error(ErrorCode::MissingClock, "sequential subcircuit clock port " + port + " is unbound");
      }
      throw Error(ErrorCode::UnboundPort, port);
    }
    if (!host.find_net(it->second)) throw Error(ErrorCode::UndeclaredNet, "binding target " + it->second);
    rename[pi] = it->second;
  }
  for (const auto& [port, target] : spec.inputs) {
    auto id = sub.find_net(port);
    if (!id || !sub.net(*id).is_input) throw Error(ErrorCode::UnboundPort, "no subcircuit input " + port);
  }
  for (NetId id = 0; id < sub.nets().size(); ++id) {
    const Net& net = sub.net(id);
    if (rename.count(id)) continue;
    if (id == pout) {
      rename[id] = spec.victim;
    } else if (net.is_constant()) {
      rename[id] = net.name;
    } else {
      rename[id] = spec.prefix + net.name;
    }
  }

  for (NetId id = 0; id < sub.nets().size(); ++id) {
    const Net& net = sub.net(id);
    if (net.is_constant() || id == pout) continue;
    if (net.is_input && net.name != spec.payload_in) continue;
    if (host.find_net(rename[id])) throw Error(ErrorCode::NameCollision, "net " + rename[id]);
  }
  for (const Cell& c : sub.cells()) {
    if (host.find_cell(spec.prefix + c.name)) {
      throw Error(ErrorCode::NameCollision, "cell " + spec.prefix + c.name);
    }
  }

  NetlistBuilder b = NetlistBuilder::from(host);
  const std::string rewire = spec.prefix + spec.payload_in;
  b.redirect_driver(spec.victim, rewire);
  for (NetId id = 0; id < sub.nets().size(); ++id) {
    const Net& net = sub.net(id);
    if (net.is_constant() || id == pout) continue;
    if (net.is_input && net.name != spec.payload_in) continue;
    b.add_wire(rename[id]);
  }
  for (const Cell& c : sub.cells()) {
    std::vector<std::string> ins;
    for (NetId in : c.inputs) ins.push_back(rename[in]);
    b.add_cell(spec.prefix + c.name, c.kind, rename[c.output], std::move(ins));
  }
  return b.build();
}

}  // namespace tjgen
