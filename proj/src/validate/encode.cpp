#include "tjgen/features.hpp"
#include "tjgen/sat.hpp"

namespace tjgen {

CnfEncoder::CnfEncoder(const Netlist& n, SatSolver& solver, std::map<std::string, Lit>& sources)
    : n_(n), s_(solver), sources_(sources), lit_(n.nets().size(), 0) {}

Lit CnfEncoder::source_lit(NetId net) {
  const Net& nt = n_.net(net);
  const std::string key = nt.driver_kind == DriverKind::PrimaryInput ? pi_stream_key(nt.name)
                                                                     : dff_stream_key(n_.cell(nt.driver).name);
  auto [it, inserted] = sources_.try_emplace(key, 0);
  if (inserted) it->second = s_.new_var();
  return it->second;
}

Lit CnfEncoder::lit(NetId root) {
  if (lit_[root] != 0) return lit_[root];
  // Iterative post-order walk so deep cones cannot overflow the stack.
  std::vector<std::pair<NetId, bool>> stack{{root, false}};
  while (!stack.empty()) {
    auto [net, expanded] = stack.back();
    stack.pop_back();
    if (lit_[net] != 0) continue;
    const Net& nt = n_.net(net);
    if (nt.driver_kind == DriverKind::Const0 || nt.driver_kind == DriverKind::Const1) {
      if (true_ == 0) {
        true_ = s_.new_var();
        s_.add_clause({true_});
      }
      lit_[net] = nt.driver_kind == DriverKind::Const1 ? true_ : -true_;
      continue;
    }
    if (nt.driver_kind == DriverKind::PrimaryInput || n_.cell(nt.driver).kind.is_sequential()) {
      lit_[net] = source_lit(net);
      continue;
    }
    const Cell& c = n_.cell(nt.driver);
    if (!expanded) {
      stack.push_back({net, true});
      for (NetId in : c.inputs) {
        if (lit_[in] == 0) stack.push_back({in, false});
      }
      continue;
    }
    lit_[net] = encode_cell(c);
  }
  return lit_[root];
}

Lit CnfEncoder::encode_cell(const Cell& c) {
  std::vector<Lit> in;
  for (NetId i : c.inputs) in.push_back(lit_[i]);
  auto conj = [&](const std::vector<Lit>& xs) {
    const Lit y = s_.new_var();
    std::vector<Lit> big{y};
    for (Lit x : xs) {
      s_.add_clause({-y, x});
      big.push_back(-x);
    }
    s_.add_clause(std::move(big));
    return y;
  };
  auto disj = [&](const std::vector<Lit>& xs) {
    const Lit y = s_.new_var();
    std::vector<Lit> big{-y};
    for (Lit x : xs) {
      s_.add_clause({y, -x});
      big.push_back(x);
    }
    s_.add_clause(std::move(big));
    return y;
  };
  auto xor2 = [&](Lit a, Lit b) {
    const Lit y = s_.new_var();
    s_.add_clause({-y, a, b});
    s_.add_clause({-y, -a, -b});
    s_.add_clause({y, -a, b});
    s_.add_clause({y, a, -b});
    return y;
  };
  switch (c.kind.type) {
    case GateType::Buf: return in[0];
    case GateType::Not: return -in[0];
    case GateType::And: return conj(in);
    case GateType::Nand: return -conj(in);
    case GateType::Or: return disj(in);
    case GateType::Nor: return -disj(in);
    case GateType::Xor:
    case GateType::Xnor: {
      Lit acc = in[0];
      for (std::size_t i = 1; i < in.size(); ++i) acc = xor2(acc, in[i]);
      return c.kind.type == GateType::Xor ? acc : -acc;
    }
    case GateType::Mux2: {
      const Lit a = in[0], b = in[1], sel = in[2];
      const Lit y = s_.new_var();
      s_.add_clause({sel, -a, y});
      s_.add_clause({sel, a, -y});
      s_.add_clause({-sel, -b, y});
      s_.add_clause({-sel, b, -y});
      s_.add_clause({-a, -b, y});
      s_.add_clause({a, b, -y});
      return y;
    }
    case GateType::Dff: break;
  }
  return 0;
}

}  // namespace tjgen
