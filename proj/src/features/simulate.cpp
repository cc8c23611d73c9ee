#include <bit>

#include "tjgen/features.hpp"

namespace tjgen {

Simulator::Simulator(const Netlist& n) {
  ops_.reserve(n.topo().cell_order.size());
  for (CellId c : n.topo().cell_order) {
    const Cell& cell = n.cell(c);
    ops_.push_back({cell.kind, cell.output, static_cast<std::uint32_t>(operands_.size())});
    operands_.insert(operands_.end(), cell.inputs.begin(), cell.inputs.end());
  }
  for (NetId id = 0; id < n.nets().size(); ++id) {
    if (n.net(id).driver_kind == DriverKind::Const0) const0_.push_back(id);
    if (n.net(id).driver_kind == DriverKind::Const1) const1_.push_back(id);
  }
}

void Simulator::evaluate(std::span<std::uint64_t> values) const {
  for (NetId id : const0_) values[id] = 0;
  for (NetId id : const1_) values[id] = ~std::uint64_t{0};
  std::uint64_t in[CellKind::kMaxArity];
  for (const Op& op : ops_) {
    for (int i = 0; i < op.kind.arity; ++i) in[i] = values[operands_[op.first + i]];
    values[op.out] = op.kind.eval_word({in, static_cast<std::size_t>(op.kind.arity)});
  }
}

std::string pi_stream_key(std::string_view net) { return "pi:" + std::string(net); }
std::string dff_stream_key(std::string_view instance) { return "dff:" + std::string(instance); }

std::uint64_t source_stream_seed(std::uint64_t seed, std::string_view key) {
  return mix_seed(seed, hash_name(key));
}

StimulusSource::StimulusSource(const Netlist& n, std::uint64_t seed) {
  for (NetId pi : n.primary_inputs()) {
    nets_.push_back(pi);
    streams_.emplace_back(source_stream_seed(seed, pi_stream_key(n.net(pi).name)));
  }
  for (CellId ff : n.flip_flops()) {
    nets_.push_back(n.cell(ff).output);
    streams_.emplace_back(source_stream_seed(seed, dff_stream_key(n.cell(ff).name)));
  }
}

void StimulusSource::fill(std::span<std::uint64_t> values) {
  for (std::size_t i = 0; i < nets_.size(); ++i) values[nets_[i]] = streams_[i].next();
}

std::vector<SignalStats> simulate(const Netlist& n, std::size_t vectors, std::uint64_t seed) {
  const std::size_t nets = n.nets().size();
  std::vector<SignalStats> out(nets);
  if (vectors == 0) return out;
  const Simulator sim(n);
  StimulusSource stim(n, seed);
  std::vector<std::uint64_t> values(nets, 0);
  std::vector<std::uint64_t> ones(nets, 0), toggles(nets, 0);
  std::vector<std::uint8_t> last_bit(nets, 0);

  const std::size_t words = (vectors + 63) / 64;
  for (std::size_t w = 0; w < words; ++w) {
    const unsigned valid = (w + 1 == words && vectors % 64) ? static_cast<unsigned>(vectors % 64) : 64u;
    const std::uint64_t mask = valid == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << valid) - 1);
    const std::uint64_t pair_mask = mask >> 1;  // bit i compares patterns i and i+1
    stim.fill(values);
    sim.evaluate(values);
    for (std::size_t id = 0; id < nets; ++id) {
      const std::uint64_t v = values[id] & mask;
      ones[id] += std::popcount(v);
      toggles[id] += std::popcount((v ^ (v >> 1)) & pair_mask);
      if (w > 0) toggles[id] += (v & 1u) != last_bit[id];
      last_bit[id] = static_cast<std::uint8_t>((v >> (valid - 1)) & 1u);
    }
  }
  for (std::size_t id = 0; id < nets; ++id) {
    out[id].probability = static_cast<double>(ones[id]) / static_cast<double>(vectors);
    out[id].toggle_rate =
        vectors > 1 ? static_cast<double>(toggles[id]) / static_cast<double>(vectors - 1) : 0.0;
  }
  return out;
}

}  // namespace tjgen
