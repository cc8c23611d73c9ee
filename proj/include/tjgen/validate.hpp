#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tjgen/netlist.hpp"
#include "tjgen/sat.hpp"

namespace tjgen {

struct NetValue {
  std::string net;
  bool value = true;
  bool operator==(const NetValue&) const = default;
};

/// Required values that jointly activate a trigger.
using TriggerCondition = std::vector<NetValue>;

/// The rarer logic level given P(net = 1); a tie picks 1.
inline bool rare_value(double p1) { return p1 <= 0.5; }
/// Probability of the rare level.
inline double rare_side_probability(double p1) { return p1 <= 0.5 ? p1 : 1.0 - p1; }

/// Assignment of scan-cut sources: primary inputs by net name, DFF outputs by
/// instance name. Sources outside the relevant cone are 0.
struct Witness {
  std::map<std::string, bool> inputs;
  std::map<std::string, bool> state;
};

struct Justification {
  SatResult status = SatResult::Unknown;
  bool satisfiable() const { return status == SatResult::Sat; }
  Witness witness;
};

struct JustifyOptions {
  double timeout_seconds = 10.0;
  std::ostream* dimacs = nullptr;  // receives the clause set when set
};

/// Decides whether every condition net can hold its value at once. A returned
/// witness has already been replayed through the simulator; a replay mismatch
/// is a library bug and throws std::logic_error. Throws UndeclaredNet and
/// InvalidArgument (repeated net).
Justification justify(const Netlist& n, const TriggerCondition& cond, const JustifyOptions& options = {});

/// Evaluates every net for one witness (missing sources read as 0).
std::vector<bool> evaluate_witness(const Netlist& n, const Witness& w);

/// True iff `net` lies in the transitive fanin of `of` in the scan-cut view.
bool in_fanin_cone(const Netlist& n, NetId net, NetId of);

/// Legal payload for the trigger set: strictly above every trigger level and
/// outside every trigger's fanin cone, so the spliced graph stays acyclic.
bool check_no_comb_loop(const Netlist& n, const std::vector<NetId>& triggers, NetId payload, const TopoOrder& order);

struct VerifyOptions {
  std::size_t vectors = 10000;
  std::uint64_t seed = 1;
  double timeout_seconds = 10.0;
  int activation_cycles = 16;
  /// Final trigger wire in the modified netlist. When set, the activation
  /// search requires it to be 1.
  std::optional<std::string> trigger_net;
};

struct VerifyReport {
  std::size_t compared = 0;    // lane-cycles checked for dormant equivalence
  std::size_t mismatches = 0;  // of those, how many differed
  std::size_t excluded = 0;    // lane-cycles at or after a condition hit
  bool acyclic = true;
  bool activation_found = false;   // miter satisfiable
  bool activation_replayed = false;  // difference reproduced in simulation
  int activation_cycle = -1;
  std::vector<std::string> differing_outputs;
  Witness witness;
  std::string detail;

  double dormant_pass_rate() const {
    return compared == 0 ? 1.0 : 1.0 - static_cast<double>(mismatches) / static_cast<double>(compared);
  }
  bool passed() const { return acyclic && mismatches == 0 && activation_found && activation_replayed; }
};

/// Dormant equivalence on random stimulus plus a witnessed activation.
/// Flip-flops present only in `modified` keep their state across cycles
/// (starting at 0); all other sources are scan-cut. Throws InterfaceMismatch.
VerifyReport verify_inserted(const Netlist& original, const Netlist& modified, const TriggerCondition& cond,
                             const VerifyOptions& options = {});

}  // namespace tjgen
