#include <algorithm>
#include <array>
#include <span>
#include <vector>

#include "tjgen/error.hpp"
#include "tjgen/generate.hpp"
#include "tjgen/rng.hpp"

namespace tjgen {

Netlist generate_netlist(const GeneratorParams& p) {
  if (p.inputs < 2 || p.gates < 1 || p.max_fanin < 2 || p.max_fanin > CellKind::kMaxArity || p.window < 1 ||
      p.dff_fraction < 0.0 || p.dff_fraction >= 1.0) {
    throw Error(ErrorCode::InvalidArgument, "generator parameters out of range");
  }
  Rng rng(p.seed);
  const int dffs = static_cast<int>(p.gates * p.dff_fraction + 0.5);

  struct GateDecl {
    CellKind kind;
    std::vector<int> ins;  // indices into the source/gate net table
  };
  // Net table: inputs, then flip-flop outputs, then gate outputs.
  std::vector<std::string> names;
  for (int i = 0; i < p.inputs; ++i) names.push_back("in" + std::to_string(i));
  for (int i = 0; i < dffs; ++i) names.push_back("q" + std::to_string(i));
  const int first_gate = static_cast<int>(names.size());

  struct Weighted {
    GateType type;
    int weight;
  };
  const Weighted mix[] = {{GateType::And, 18}, {GateType::Nand, 16}, {GateType::Or, 14}, {GateType::Nor, 14},
                          {GateType::Xor, 6},  {GateType::Xnor, 2},  {GateType::Not, 12}, {GateType::Buf, 4},
                          {GateType::Mux2, 8}};
  int total = 0;
  for (const auto& w : mix) total += w.weight;

  // 4096-pattern signatures; a gate whose output never moves gets new inputs.
  constexpr int kWords = 64;
  std::vector<std::array<std::uint64_t, kWords>> sig(first_gate + p.gates);
  {
    Rng srng(mix_seed(p.seed, 0x5161));
    for (int i = 0; i < first_gate; ++i) {
      for (auto& w : sig[i]) w = srng.next();
    }
  }
  std::vector<GateDecl> gates;
  std::vector<int> sinks(first_gate + p.gates, 0);
  for (int g = 0; g < p.gates; ++g) {
    int pick = static_cast<int>(rng.below(total));
    GateType type = GateType::And;
    for (const auto& w : mix) {
      if (pick < w.weight) {
        type = w.type;
        break;
      }
      pick -= w.weight;
    }
    CellKind kind;
    if (type == GateType::Not || type == GateType::Buf) {
      kind = {type, 1};
    } else if (type == GateType::Mux2) {
      kind = CellKind::mux2();
    } else if (type == GateType::Xor || type == GateType::Xnor) {
      kind = CellKind::nary(type, 2);
    } else {
      // Two-input gates dominate; wider ones taper off.
      int arity = 2;
      while (arity < p.max_fanin && rng.uniform() < 0.45) ++arity;
      kind = CellKind::nary(type, arity);
    }
    const int avail = first_gate + g;
    auto draw = [&] {
      std::vector<int> ins;
      for (int k = 0; k < kind.arity; ++k) {
        int src;
        int tries = 0;
        do {
          if (g > 0 && rng.uniform() < p.locality) {
            const int span = std::min(g, p.window);
            src = avail - 1 - static_cast<int>(rng.below(span));
          } else {
            src = static_cast<int>(rng.below(avail));
          }
        } while (std::find(ins.begin(), ins.end(), src) != ins.end() && ++tries < 8);
        ins.push_back(src);
      }
      return ins;
    };
    auto constant = [&](const std::vector<int>& ins) {
      std::uint64_t in[CellKind::kMaxArity];
      std::uint64_t ones = 0, zeros = 0;
      for (int w = 0; w < kWords; ++w) {
        for (int k = 0; k < kind.arity; ++k) in[k] = sig[ins[k]][w];
        const std::uint64_t o = kind.eval_word(std::span<const std::uint64_t>(in, kind.arity));
        sig[avail][w] = o;
        ones |= o;
        zeros |= ~o;
      }
      return ones == 0 || zeros == 0;
    };
    GateDecl d{kind, draw()};
    for (int attempt = 1; constant(d.ins) && attempt < 8; ++attempt) d.ins = draw();
    for (int s : d.ins) ++sinks[s];
    gates.push_back(std::move(d));
    names.push_back("n" + std::to_string(g));
  }
  // Flip-flop D pins favour the deeper half of the logic.
  std::vector<int> dff_d;
  for (int i = 0; i < dffs; ++i) {
    const int half = p.gates / 2;
    const int g = half + static_cast<int>(rng.below(p.gates - half));
    dff_d.push_back(first_gate + g);
    ++sinks[first_gate + g];
  }

  NetlistBuilder b(p.name);
  for (int i = 0; i < p.inputs; ++i) b.add_input(names[i]);
  if (dffs > 0) {
    b.add_input("clk");
    b.add_input("rstn");
  }
  for (int i = p.inputs; i < first_gate; ++i) b.add_wire(names[i]);
  for (int g = 0; g < p.gates; ++g) {
    const int id = first_gate + g;
    if (sinks[id] == 0) {
      b.add_output(names[id]);
    } else {
      b.add_wire(names[id]);
    }
  }
  for (int g = 0; g < p.gates; ++g) {
    std::vector<std::string> ins;
    for (int s : gates[g].ins) ins.push_back(names[s]);
    b.add_cell("g" + std::to_string(g), gates[g].kind, names[first_gate + g], std::move(ins));
  }
  for (int i = 0; i < dffs; ++i) {
    b.add_cell("ff" + std::to_string(i), CellKind::dff(true), names[p.inputs + i], {names[dff_d[i]], "clk", "rstn"});
  }
  if (dffs > 0) {
    b.set_clock("clk");
    b.set_reset("rstn");
  }
  return b.build();
}

}  // namespace tjgen
