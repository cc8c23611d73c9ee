#include <algorithm>
#include <ranges>

#include "tjgen/features.hpp"

namespace tjgen {
namespace {

double sat(double x) { return std::min(x, kScoapCap); }

struct Cc {
  double c0, c1;
};

// Minimum cost of driving the inputs to an even (first) or odd (second) parity.
std::pair<double, double> parity_costs(std::span<const Cc> in) {
  double even = 0, odd = kScoapCap;
  for (const Cc& c : in) {
    const double e = std::min(even + c.c0, odd + c.c1);
    const double o = std::min(even + c.c1, odd + c.c0);
    even = sat(e);
    odd = sat(o);
  }
  return {even, odd};
}

Cc controllability(const CellKind& k, std::span<const Cc> in) {
  double sum0 = 0, sum1 = 0, min0 = kScoapCap, min1 = kScoapCap;
  for (const Cc& c : in) {
    sum0 += c.c0;
    sum1 += c.c1;
    min0 = std::min(min0, c.c0);
    min1 = std::min(min1, c.c1);
  }
  switch (k.type) {
    case GateType::Buf: return {sat(in[0].c0 + 1), sat(in[0].c1 + 1)};
    case GateType::Not: return {sat(in[0].c1 + 1), sat(in[0].c0 + 1)};
    case GateType::And: return {sat(min0 + 1), sat(sum1 + 1)};
    case GateType::Nand: return {sat(sum1 + 1), sat(min0 + 1)};
    case GateType::Or: return {sat(sum0 + 1), sat(min1 + 1)};
    case GateType::Nor: return {sat(min1 + 1), sat(sum0 + 1)};
    case GateType::Xor:
    case GateType::Xnor: {
      const auto [even, odd] = parity_costs(in);
      if (k.type == GateType::Xor) return {sat(even + 1), sat(odd + 1)};
      return {sat(odd + 1), sat(even + 1)};
    }
    case GateType::Mux2: {
      const Cc a = in[0], b = in[1], s = in[2];
      return {sat(std::min(s.c0 + a.c0, s.c1 + b.c0) + 1), sat(std::min(s.c0 + a.c1, s.c1 + b.c1) + 1)};
    }
    case GateType::Dff: break;
  }
  return {1, 1};
}

// Cost of propagating input `pin` to the output, excluding the output's own CO.
double pin_sensitization(const CellKind& k, std::span<const Cc> in, int pin) {
  double cost = 0;
  switch (k.type) {
    case GateType::Buf:
    case GateType::Not:
      return 1;
    case GateType::And:
    case GateType::Nand:
      for (int i = 0; i < k.arity; ++i) {
        if (i != pin) cost += in[i].c1;
      }
      return cost + 1;
    case GateType::Or:
    case GateType::Nor:
      for (int i = 0; i < k.arity; ++i) {
        if (i != pin) cost += in[i].c0;
      }
      return cost + 1;
    case GateType::Xor:
    case GateType::Xnor:
      for (int i = 0; i < k.arity; ++i) {
        if (i != pin) cost += std::min(in[i].c0, in[i].c1);
      }
      return cost + 1;
    case GateType::Mux2:
      if (pin == 0) return in[2].c0 + 1;
      if (pin == 1) return in[2].c1 + 1;
      return std::min(in[0].c0 + in[1].c1, in[0].c1 + in[1].c0) + 1;
    case GateType::Dff:
      break;
  }
  return kScoapCap;
}

}  // namespace

std::vector<ScoapValues> scoap(const Netlist& n) {
  std::vector<ScoapValues> v(n.nets().size(), ScoapValues{1, 1, kScoapCap});
  for (NetId id = 0; id < n.nets().size(); ++id) {
    const Net& net = n.net(id);
    if (net.driver_kind == DriverKind::Const0) v[id].cc1 = kScoapCap;
    if (net.driver_kind == DriverKind::Const1) v[id].cc0 = kScoapCap;
  }

  std::vector<Cc> in;
  for (CellId c : n.topo().cell_order) {
    const Cell& cell = n.cell(c);
    in.clear();
    for (NetId i : cell.inputs) in.push_back({v[i].cc0, v[i].cc1});
    const Cc out = controllability(cell.kind, in);
    v[cell.output].cc0 = out.c0;
    v[cell.output].cc1 = out.c1;
  }

  // Observation points: primary outputs and DFF data pins (pseudo-outputs).
  for (NetId po : n.primary_outputs()) v[po].co = 0;
  for (CellId ff : n.flip_flops()) v[n.cell(ff).inputs[0]].co = 0;

  for (CellId c : n.topo().cell_order | std::views::reverse) {
    const Cell& cell = n.cell(c);
    const double co_out = v[cell.output].co;
    if (co_out >= kScoapCap) continue;
    in.clear();
    for (NetId i : cell.inputs) in.push_back({v[i].cc0, v[i].cc1});
    for (int p = 0; p < cell.kind.arity; ++p) {
      const double co_pin = sat(co_out + pin_sensitization(cell.kind, in, p));
      double& co_in = v[cell.inputs[p]].co;
      co_in = std::min(co_in, co_pin);
    }
  }
  return v;
}

}  // namespace tjgen
