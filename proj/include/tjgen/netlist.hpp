#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tjgen/cell.hpp"

namespace tjgen {

using NetId = std::uint32_t;
using CellId = std::uint32_t;

inline constexpr std::string_view kConst0 = "1'b0";
inline constexpr std::string_view kConst1 = "1'b1";

enum class DriverKind : std::uint8_t { PrimaryInput, Cell, Const0, Const1 };

struct PinRef {
  CellId cell = 0;
  int pin = 0;
  friend auto operator<=>(const PinRef&, const PinRef&) = default;
};

struct Net {
  std::string name;
  DriverKind driver_kind = DriverKind::PrimaryInput;
  CellId driver = 0;  // valid when driver_kind == Cell
  std::vector<PinRef> sinks;
  bool is_input = false;
  bool is_output = false;

  bool is_constant() const {
    return driver_kind == DriverKind::Const0 || driver_kind == DriverKind::Const1;
  }
};

struct Cell {
  std::string name;
  CellKind kind;
  std::vector<NetId> inputs;
  NetId output = 0;
};

/// Level of every net in the scan-cut DAG (DFF Q is a pseudo-primary input,
/// DFF D a pseudo-primary output) plus combinational cells in evaluation order.
struct TopoOrder {
  std::vector<int> level;           // indexed by NetId
  std::vector<CellId> cell_order;   // combinational cells by (level, output name)
  int max_level = 0;
};

class NetlistBuilder;

/// Immutable gate-level netlist. Construct through `NetlistBuilder` or
/// `parse_netlist`; every instance satisfies the single-driver, no-dangling-input
/// and acyclic-scan-cut invariants.
class Netlist {
 public:
  const std::string& module_name() const { return module_name_; }
  std::span<const Net> nets() const { return nets_; }
  std::span<const Cell> cells() const { return cells_; }
  const Net& net(NetId id) const { return nets_[id]; }
  const Cell& cell(CellId id) const { return cells_[id]; }
  std::span<const NetId> primary_inputs() const { return inputs_; }
  std::span<const NetId> primary_outputs() const { return outputs_; }
  std::optional<NetId> clock_net() const { return clock_; }
  std::optional<NetId> reset_net() const { return reset_; }
  const TopoOrder& topo() const { return topo_; }

  std::optional<NetId> find_net(std::string_view name) const;
  std::optional<CellId> find_cell(std::string_view name) const;
  NetId net_id(std::string_view name) const;  // throws UndeclaredNet

  /// DFF cells in declaration order.
  std::vector<CellId> flip_flops() const;
  /// Free variables of the scan-cut view: primary inputs then DFF outputs.
  std::vector<NetId> sources() const;
  bool is_source(NetId id) const;
  bool is_sequential() const;

 private:
  friend class NetlistBuilder;
  std::string module_name_;
  std::vector<Net> nets_;
  std::vector<Cell> cells_;
  std::vector<NetId> inputs_;
  std::vector<NetId> outputs_;
  std::optional<NetId> clock_;
  std::optional<NetId> reset_;
  TopoOrder topo_;
  std::unordered_map<std::string, NetId> net_index_;
  std::unordered_map<std::string, CellId> cell_index_;
};

/// Accumulates declarations in order and validates them in `build()`.
class NetlistBuilder {
 public:
  explicit NetlistBuilder(std::string module_name = "top");
  static NetlistBuilder from(const Netlist& n);

  NetlistBuilder& add_input(std::string name);
  NetlistBuilder& add_output(std::string name);
  NetlistBuilder& add_wire(std::string name);
  /// Inputs follow the pin order of `kind`.
  NetlistBuilder& add_cell(std::string name, CellKind kind, std::string output,
                           std::vector<std::string> inputs);
  NetlistBuilder& set_clock(std::string name);
  NetlistBuilder& set_reset(std::string name);

  bool has_net(std::string_view name) const;
  bool has_cell(std::string_view name) const;
  /// Changes the kind of an existing cell; arity must match.
  void replace_cell_kind(std::string_view cell, CellKind kind);
  /// Points the output of the cell currently driving `net` at `new_net`.
  void redirect_driver(std::string_view net, const std::string& new_net);

  Netlist build() const;

 private:
  enum class Role : std::uint8_t { Wire, Input, Output };
  struct Decl {
    std::string name;
    Role role;
  };
  struct CellDecl {
    std::string name;
    CellKind kind;
    std::string output;
    std::vector<std::string> inputs;
  };
  std::string module_name_;
  std::vector<Decl> decls_;
  std::unordered_map<std::string, std::size_t> decl_index_;
  std::vector<CellDecl> cells_;
  std::unordered_map<std::string, std::size_t> cell_index_;
  std::optional<std::string> clock_;
  std::optional<std::string> reset_;

  void declare(std::string name, Role role);
};

/// Recomputes the scan-cut topological order. Throws CombinationalCycle.
TopoOrder topo_sort(const Netlist& n);

struct ParseOptions {
  std::optional<std::string> clock;
  std::optional<std::string> reset;
};

/// Structural Verilog subset: one flattened module, `input`/`output`/`wire`
/// declarations (scalar or `[msb:lsb]` buses), gate primitives with positional
/// ports, and library cells with named or positional ports.
Netlist parse_netlist(std::string_view text, const ParseOptions& options = {});
Netlist read_netlist_file(const std::string& path, const ParseOptions& options = {});

std::string emit_netlist(const Netlist& n);

/// Name-preserving structural equality; with verbatim names this is graph isomorphism.
bool structurally_equal(const Netlist& a, const Netlist& b);

/// Text edge list (`driver_cell -> sink_cell via net`) for graph debugging.
std::string dump_edges(const Netlist& n);

struct SpliceSpec {
  std::map<std::string, std::string> inputs;  // sub input port -> host net
  std::string payload_in;                     // sub input receiving the original signal
  std::string payload_out;                    // sub net that takes over the victim name
  std::string victim;                         // host net being modified
  std::string prefix;                         // prepended to sub cell and internal net names
};

/// Splices `sub` into `host`. The victim's original driver moves to the fresh net
/// `prefix + payload_in`; `payload_out` is renamed to the victim so every
/// downstream sink observes the modified signal.
Netlist splice_subcircuit(const Netlist& host, const Netlist& sub, const SpliceSpec& spec);

/// Smallest "<base><k>_" (k = 0, 1, ...) that prefixes no net or cell name in `n`.
std::string unique_prefix(const Netlist& n, std::string_view base = "tj");

}  // namespace tjgen
