#pragma once

#include <cstdint>
#include <string>

#include "tjgen/netlist.hpp"

namespace tjgen {

/// Random DAG netlists standing in for benchmark hosts.
struct GeneratorParams {
  std::string name = "syn";
  int inputs = 60;
  int gates = 400;
  double dff_fraction = 0.0;  // flip-flops per gate
  int max_fanin = 5;
  /// Probability that a gate input is drawn from the most recent `window`
  /// nets, which builds logic depth.
  double locality = 0.6;
  int window = 24;
  std::uint64_t seed = 1;
};

/// AND/OR families make up most gates so deep cones produce rare values.
/// Inputs are redrawn (a few times) for a gate that is constant on 4096
/// random patterns. Every gate output without a sink becomes a primary
/// output. With flip-flops the design gets a `clk` input and an active-low
/// `rstn`.
Netlist generate_netlist(const GeneratorParams& p);

}  // namespace tjgen
