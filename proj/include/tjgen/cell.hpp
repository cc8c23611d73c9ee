#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tjgen {

enum class GateType : std::uint8_t { Buf, Not, And, Nand, Or, Nor, Xor, Xnor, Mux2, Dff };

/// A library cell: gate family plus input-pin count. Every kind has a single
/// output pin (`Y` for combinational kinds, `Q` for DFF).
///
/// Pin order is fixed: n-ary gates use A..H, MUX2 is (A, B, S) with
/// Y = S ? B : A, and DFF is (D, CLK[, RSTN]) with an active-low reset.
struct CellKind {
  GateType type = GateType::Buf;
  int arity = 1;

  static constexpr int kMaxArity = 8;

  static CellKind buf() { return {GateType::Buf, 1}; }
  static CellKind inv() { return {GateType::Not, 1}; }
  static CellKind mux2() { return {GateType::Mux2, 3}; }
  static CellKind dff(bool with_reset = false) { return {GateType::Dff, with_reset ? 3 : 2}; }
  static CellKind nary(GateType type, int arity);

  bool is_sequential() const { return type == GateType::Dff; }
  bool has_reset() const { return type == GateType::Dff && arity == 3; }

  /// Canonical library name, e.g. "AND3", "NOT", "MUX2", "DFF", "DFFR".
  std::string name() const;
  std::string_view input_pin(int index) const;
  std::string_view output_pin() const { return is_sequential() ? "Q" : "Y"; }

  /// Output column over all 2^arity input assignments; bit i of the row index
  /// is the value of input pin i. Throws SequentialCell for DFF.
  std::vector<std::uint8_t> truth_table() const;

  bool eval(std::uint32_t assignment) const;
  /// Bit-parallel evaluation over 64 patterns; `inputs` has `arity` words.
  std::uint64_t eval_word(std::span<const std::uint64_t> inputs) const;

  friend bool operator==(const CellKind&, const CellKind&) = default;
};

/// Resolves a canonical library name ("NAND2", "INV", "DFFR", ...), case-insensitive.
std::optional<CellKind> cell_kind_from_name(std::string_view name);

/// Resolves a Verilog gate primitive ("and", "nor", ...) for a given arity.
std::optional<GateType> primitive_gate(std::string_view keyword);

}  // namespace tjgen
