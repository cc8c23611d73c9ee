#include <deque>

#include "tjgen/features.hpp"

namespace tjgen {
namespace {

// Only data pins carry logic; DFF clock and reset pins are skipped.
bool is_data_pin(const Cell& c, int pin) { return !c.kind.is_sequential() || pin == 0; }

enum class Direction { Forward, Backward };

std::vector<double> bfs(const Netlist& n, const std::vector<NetId>& seeds, Direction dir) {
  std::vector<double> dist(n.nets().size(), kUnreachable);
  std::deque<NetId> queue;
  for (NetId s : seeds) {
    if (dist[s] == 0) continue;
    dist[s] = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const NetId cur = queue.front();
    queue.pop_front();
    const double next = dist[cur] + 1;
    auto visit = [&](NetId id) {
      if (dist[id] <= next) return;
      dist[id] = next;
      queue.push_back(id);
    };
    const Net& net = n.net(cur);
    if (dir == Direction::Forward) {
      for (const PinRef& s : net.sinks) {
        const Cell& c = n.cell(s.cell);
        if (is_data_pin(c, s.pin)) visit(c.output);
      }
    } else if (net.driver_kind == DriverKind::Cell) {
      const Cell& c = n.cell(net.driver);
      for (int p = 0; p < c.kind.arity; ++p) {
        if (is_data_pin(c, p)) visit(c.inputs[p]);
      }
    }
  }
  return dist;
}

}  // namespace

std::vector<StructuralFeatures> structural_features(const Netlist& n) {
  const std::size_t count = n.nets().size();
  std::vector<StructuralFeatures> out(count);

  std::vector<NetId> ff_d, ff_q;
  for (CellId ff : n.flip_flops()) {
    ff_d.push_back(n.cell(ff).inputs[0]);
    ff_q.push_back(n.cell(ff).output);
  }
  const auto dist_pi = bfs(n, {n.primary_inputs().begin(), n.primary_inputs().end()}, Direction::Forward);
  const auto dist_po = bfs(n, {n.primary_outputs().begin(), n.primary_outputs().end()}, Direction::Backward);
  const auto dist_ff_in = bfs(n, ff_d, Direction::Backward);
  const auto dist_ff_out = bfs(n, ff_q, Direction::Forward);

  for (NetId id = 0; id < count; ++id) {
    const Net& net = n.net(id);
    StructuralFeatures& f = out[id];
    f.dist_pi = dist_pi[id];
    f.dist_po = dist_po[id];
    f.dist_ff_in = dist_ff_in[id];
    f.dist_ff_out = dist_ff_out[id];
    f.fanin_imm = net.driver_kind == DriverKind::Cell ? n.cell(net.driver).kind.arity : 0;
    f.fanout_imm = static_cast<double>(net.sinks.size());
  }
  for (NetId id = 0; id < count; ++id) {
    const Net& net = n.net(id);
    StructuralFeatures& f = out[id];
    if (net.driver_kind == DriverKind::Cell) {
      for (NetId in : n.cell(net.driver).inputs) f.fanin_nbr += out[in].fanin_imm;
    }
    for (const PinRef& s : net.sinks) f.fanout_nbr += out[n.cell(s.cell).output].fanout_imm;
  }
  return out;
}

}  // namespace tjgen
