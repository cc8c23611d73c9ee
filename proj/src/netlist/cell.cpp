#include "tjgen/cell.hpp"

#include <algorithm>
#include <cctype>

#include "tjgen/error.hpp"

namespace tjgen {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::UnsupportedCell: return "UnsupportedCell";
    case ErrorCode::MultipleDrivers: return "MultipleDrivers";
    case ErrorCode::UndeclaredNet: return "UndeclaredNet";
    case ErrorCode::UndrivenNet: return "UndrivenNet";
    case ErrorCode::DanglingInput: return "DanglingInput";
    case ErrorCode::CombinationalCycle: return "CombinationalCycle";
    case ErrorCode::NameCollision: return "NameCollision";
    case ErrorCode::MissingClock: return "MissingClock";
    case ErrorCode::UnboundPort: return "UnboundPort";
    case ErrorCode::InvalidVictim: return "InvalidVictim";
    case ErrorCode::SequentialCell: return "SequentialCell";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::InterfaceMismatch: return "InterfaceMismatch";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::InsufficientCandidates: return "InsufficientCandidates";
    case ErrorCode::NoLegalPayload: return "NoLegalPayload";
    case ErrorCode::PoolEmpty: return "PoolEmpty";
    case ErrorCode::InsufficientRareNets: return "InsufficientRareNets";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Schema: return "SchemaError";
    case ErrorCode::Io: return "IoError";
  }
  return "Error";
}

namespace {

constexpr std::string_view kNaryPins[] = {"A", "B", "C", "D", "E", "F", "G", "H"};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_nary(GateType t) {
  switch (t) {
    case GateType::And:
    case GateType::Nand:
    case GateType::Or:
    case GateType::Nor:
    case GateType::Xor:
    case GateType::Xnor:
      return true;
    default:
      return false;
  }
}

std::string_view family(GateType t) {
  switch (t) {
    case GateType::Buf: return "BUF";
    case GateType::Not: return "NOT";
    case GateType::And: return "AND";
    case GateType::Nand: return "NAND";
    case GateType::Or: return "OR";
    case GateType::Nor: return "NOR";
    case GateType::Xor: return "XOR";
    case GateType::Xnor: return "XNOR";
    case GateType::Mux2: return "MUX2";
    case GateType::Dff: return "DFF";
  }
  return "?";
}

}  // namespace

CellKind CellKind::nary(GateType type, int arity) {
  if (!is_nary(type) || arity < 2 || arity > kMaxArity) {
    throw Error(ErrorCode::UnsupportedCell,
                std::string(family(type)) + " with arity " + std::to_string(arity));
  }
  return {type, arity};
}

std::string CellKind::name() const {
  if (is_nary(type)) return std::string(family(type)) + std::to_string(arity);
  if (type == GateType::Dff) return has_reset() ? "DFFR" : "DFF";
  return std::string(family(type));
}

std::string_view CellKind::input_pin(int index) const {
  switch (type) {
    case GateType::Mux2: {
      constexpr std::string_view pins[] = {"A", "B", "S"};
      return pins[index];
    }
    case GateType::Dff: {
      constexpr std::string_view pins[] = {"D", "CLK", "RSTN"};
      return pins[index];
    }
    default:
      return kNaryPins[index];
  }
}

bool CellKind::eval(std::uint32_t a) const {
  const std::uint32_t mask = (arity >= 32) ? ~0u : ((1u << arity) - 1);
  const std::uint32_t bits = a & mask;
  const int ones = __builtin_popcount(bits);
  switch (type) {
    case GateType::Buf: return bits & 1u;
    case GateType::Not: return !(bits & 1u);
    case GateType::And: return bits == mask;
    case GateType::Nand: return bits != mask;
    case GateType::Or: return bits != 0;
    case GateType::Nor: return bits == 0;
    case GateType::Xor: return ones & 1;
    case GateType::Xnor: return !(ones & 1);
    case GateType::Mux2: return (bits & 4u) ? (bits & 2u) : (bits & 1u);
    case GateType::Dff: break;
  }
  throw Error(ErrorCode::SequentialCell, "DFF has no combinational function");
}

std::vector<std::uint8_t> CellKind::truth_table() const {
  if (is_sequential()) throw Error(ErrorCode::SequentialCell, "DFF has no truth table");
  std::vector<std::uint8_t> table(std::size_t{1} << arity);
  for (std::uint32_t row = 0; row < table.size(); ++row) table[row] = eval(row) ? 1 : 0;
  return table;
}

std::uint64_t CellKind::eval_word(std::span<const std::uint64_t> in) const {
  std::uint64_t acc = 0;
  switch (type) {
    case GateType::Buf: return in[0];
    case GateType::Not: return ~in[0];
    case GateType::And:
    case GateType::Nand:
      acc = ~std::uint64_t{0};
      for (int i = 0; i < arity; ++i) acc &= in[i];
      return type == GateType::And ? acc : ~acc;
    case GateType::Or:
    case GateType::Nor:
      for (int i = 0; i < arity; ++i) acc |= in[i];
      return type == GateType::Or ? acc : ~acc;
    case GateType::Xor:
    case GateType::Xnor:
      for (int i = 0; i < arity; ++i) acc ^= in[i];
      return type == GateType::Xor ? acc : ~acc;
    case GateType::Mux2:
      return (in[2] & in[1]) | (~in[2] & in[0]);
    case GateType::Dff:
      break;
  }
  throw Error(ErrorCode::SequentialCell, "DFF has no combinational function");
}

std::optional<CellKind> cell_kind_from_name(std::string_view raw) {
  const std::string name = upper(raw);
  if (name == "BUF" || name == "BUFF") return CellKind::buf();
  if (name == "NOT" || name == "INV") return CellKind::inv();
  if (name == "MUX2" || name == "MUX") return CellKind::mux2();
  if (name == "DFF") return CellKind::dff(false);
  if (name == "DFFR") return CellKind::dff(true);
  // Longest family prefix first so NAND/NOR/XNOR are not read as AND/OR/XOR.
  const std::pair<std::string_view, GateType> families[] = {
      {"NAND", GateType::Nand}, {"XNOR", GateType::Xnor}, {"AND", GateType::And},
      {"NOR", GateType::Nor},   {"XOR", GateType::Xor},   {"OR", GateType::Or},
  };
  for (const auto& [prefix, type] : families) {
    if (!name.starts_with(prefix)) continue;
    const std::string_view digits = std::string_view(name).substr(prefix.size());
    if (digits.size() != 1 || !std::isdigit(static_cast<unsigned char>(digits[0]))) return std::nullopt;
    const int arity = digits[0] - '0';
    if (arity < 2 || arity > CellKind::kMaxArity) return std::nullopt;
    return CellKind{type, arity};
  }
  return std::nullopt;
}

std::optional<GateType> primitive_gate(std::string_view kw) {
  if (kw == "and") return GateType::And;
  if (kw == "nand") return GateType::Nand;
  if (kw == "or") return GateType::Or;
  if (kw == "nor") return GateType::Nor;
  if (kw == "xor") return GateType::Xor;
  if (kw == "xnor") return GateType::Xnor;
  if (kw == "not") return GateType::Not;
  if (kw == "buf") return GateType::Buf;
  return std::nullopt;
}

}  // namespace tjgen
