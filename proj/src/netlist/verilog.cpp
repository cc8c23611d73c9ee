// Structural Verilog reader and writer for flattened gate-level modules.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "tjgen/error.hpp"
#include "tjgen/netlist.hpp"

namespace tjgen {
namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      if (pos_ >= src_.size()) break;
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                      src_[pos_] == '_' || src_[pos_] == '$')) {
          ++pos_;
        }
        out.push_back({Tok::Ident, std::string(src_.substr(start, pos_ - start)), line_});
      } else if (c == '\\') {
        const std::size_t start = ++pos_;
        while (pos_ < src_.size() && !std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ == start) fail("empty escaped identifier");
        out.push_back({Tok::Ident, std::string(src_.substr(start, pos_ - start)), line_});
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '\'') {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '\'') {
          ++pos_;
          while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        out.push_back({Tok::Number, std::string(src_.substr(start, pos_ - start)), line_});
      } else if (std::string_view("(),;.[]:#=").find(c) != std::string_view::npos) {
        out.push_back({Tok::Punct, std::string(1, c), line_});
        ++pos_;
      } else {
        fail(std::string("unexpected character '") + c + "'");
      }
    }
    out.push_back({Tok::End, "", line_});
    return out;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::Parse, "line " + std::to_string(line_) + ": " + msg);
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (src_.substr(pos_, 2) == "//") {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (src_.substr(pos_, 2) == "/*" || src_.substr(pos_, 2) == "(*") {
        const std::string_view close = src_[pos_] == '/' ? "*/" : "*)";
        const std::size_t end = src_.find(close, pos_ + 2);
        if (end == std::string_view::npos) fail("unterminated comment");
        line_ += static_cast<int>(std::count(src_.begin() + pos_, src_.begin() + end, '\n'));
        pos_ = end + 2;
      } else {
        break;
      }
    }
  }
};

// Parses `1'b0`, `1'b1`, `'b1`, `0`, `1` into a constant net name.
std::optional<std::string> constant_name(const std::string& text) {
  std::string digits = text;
  const auto q = text.find('\'');
  if (q != std::string::npos) {
    if (q + 1 >= text.size()) return std::nullopt;
    const char base = static_cast<char>(std::tolower(static_cast<unsigned char>(text[q + 1])));
    if (base != 'b' && base != 'h' && base != 'd' && base != 'o') return std::nullopt;
    digits = text.substr(q + 2);
  }
  digits.erase(std::remove(digits.begin(), digits.end(), '_'), digits.end());
  if (digits.empty()) return std::nullopt;
  const bool all_zero = std::all_of(digits.begin(), digits.end(), [](char c) { return c == '0'; });
  if (all_zero) return std::string(kConst0);
  if (digits.find_first_not_of('0') == digits.size() - 1 && digits.back() == '1') {
    return std::string(kConst1);
  }
  return std::nullopt;
}

struct Connection {
  std::string pin;  // empty for positional
  std::string net;  // empty when left unconnected
};

class Parser {
 public:
  Parser(std::vector<Token> toks, const ParseOptions& opts) : toks_(std::move(toks)), opts_(opts) {}

  Netlist run() {
    expect_ident("module");
    NetlistBuilder b(ident("module name"));
    builder_ = &b;
    if (accept("(")) parse_header_ports();
    expect(";");
    while (!accept_ident("endmodule")) {
      if (peek().kind == Tok::End) fail("missing endmodule");
      parse_item();
    }
    if (opts_.clock) b.set_clock(*opts_.clock);
    if (opts_.reset) b.set_reset(*opts_.reset);
    return b.build();
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const ParseOptions& opts_;
  NetlistBuilder* builder_ = nullptr;
  std::set<std::string> buses_;
  int anon_ = 0;

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::Parse, "line " + std::to_string(peek().line) + ": " + msg);
  }
  bool accept(std::string_view p) {
    if (peek().kind == Tok::Punct && peek().text == p) {
      next();
      return true;
    }
    return false;
  }
  bool accept_ident(std::string_view w) {
    if (peek().kind == Tok::Ident && peek().text == w) {
      next();
      return true;
    }
    return false;
  }
  void expect(std::string_view p) {
    if (!accept(p)) fail("expected '" + std::string(p) + "', got '" + peek().text + "'");
  }
  void expect_ident(std::string_view w) {
    if (!accept_ident(w)) fail("expected '" + std::string(w) + "'");
  }
  std::string ident(std::string_view what) {
    if (peek().kind != Tok::Ident) fail("expected " + std::string(what));
    return next().text;
  }
  int number() {
    if (peek().kind != Tok::Number) fail("expected number");
    return std::stoi(next().text);
  }

  std::optional<std::pair<int, int>> range() {
    if (!accept("[")) return std::nullopt;
    const int msb = number();
    expect(":");
    const int lsb = number();
    expect("]");
    return std::make_pair(msb, lsb);
  }

  void declare(std::string_view dir, const std::string& name, const std::optional<std::pair<int, int>>& r) {
    std::vector<std::string> names;
    if (r) {
      buses_.insert(name);
      const int step = r->first >= r->second ? -1 : 1;
      for (int i = r->first;; i += step) {
        names.push_back(name + "[" + std::to_string(i) + "]");
        if (i == r->second) break;
      }
    } else {
      names.push_back(name);
    }
    for (auto& n : names) {
      if (dir == "input") {
        builder_->add_input(n);
      } else if (dir == "output") {
        builder_->add_output(n);
      } else {
        builder_->add_wire(n);
      }
    }
  }

  void parse_header_ports() {
    if (accept(")")) return;
    const bool ansi = peek().kind == Tok::Ident && (peek().text == "input" || peek().text == "output");
    if (!ansi) {
      do {
        ident("port name");
      } while (accept(","));
      expect(")");
      return;
    }
    std::string dir;
    std::optional<std::pair<int, int>> r;
    do {
      if (peek().text == "input" || peek().text == "output") {
        dir = next().text;
        accept_ident("wire");
        r = range();
      }
      declare(dir, ident("port name"), r);
    } while (accept(","));
    expect(")");
  }

  void parse_item() {
    const Token& t = peek();
    if (t.kind != Tok::Ident) fail("unexpected '" + t.text + "'");
    if (t.text == "input" || t.text == "output" || t.text == "wire") {
      const std::string dir = next().text;
      if (dir != "wire") {
        accept_ident("wire");
      }
      auto r = range();
      do {
        declare(dir, ident("net name"), r);
      } while (accept(","));
      expect(";");
      return;
    }
    if (t.text == "assign" || t.text == "always" || t.text == "reg" || t.text == "parameter" ||
        t.text == "initial") {
      fail("unsupported construct '" + t.text + "'");
    }
    parse_instances(next().text);
  }

  std::string net_ref() {
    if (peek().kind == Tok::Number) {
      const std::string text = next().text;
      auto k = constant_name(text);
      if (!k) fail("unsupported constant " + text);
      return *k;
    }
    std::string name = ident("net");
    if (accept("[")) {
      const int bit = number();
      expect("]");
      return name + "[" + std::to_string(bit) + "]";
    }
    if (buses_.count(name)) fail("whole-bus connection of " + name + " is not supported");
    return name;
  }

  std::vector<Connection> connections() {
    expect("(");
    std::vector<Connection> conns;
    if (accept(")")) return conns;
    do {
      Connection c;
      if (accept(".")) {
        c.pin = ident("pin name");
        expect("(");
        if (!accept(")")) {
          c.net = net_ref();
          expect(")");
        }
      } else {
        c.net = net_ref();
      }
      conns.push_back(std::move(c));
    } while (accept(","));
    expect(")");
    return conns;
  }

  void parse_instances(const std::string& type) {
    if (peek().kind == Tok::Punct && peek().text == "#") fail("parameterized instance " + type);
    do {
      std::string inst;
      if (peek().kind == Tok::Ident) {
        inst = next().text;
      } else {
        inst = "_g" + std::to_string(anon_++);
      }
      auto conns = connections();
      add_instance(type, inst, conns);
    } while (accept(","));
    expect(";");
  }

  static std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
  }

  // Index of a named pin for `kind`, or -1 for the output, or -2 when unknown.
  static int pin_index(const CellKind& kind, const std::string& raw) {
    const std::string pin = upper(raw);
    if (kind.is_sequential()) {
      if (pin == "Q") return -1;
      if (pin == "D") return 0;
      if (pin == "CLK" || pin == "CK" || pin == "C" || pin == "CLOCK") return 1;
      if (pin == "RSTN" || pin == "RN" || pin == "RST_N" || pin == "RESETN") return 2;
      return -2;
    }
    if (pin == "Y" || pin == "Z" || pin == "ZN" || pin == "O" || pin == "OUT") return -1;
    if (kind.type == GateType::Mux2) {
      if (pin == "A" || pin == "I0") return 0;
      if (pin == "B" || pin == "I1") return 1;
      if (pin == "S" || pin == "S0" || pin == "SEL") return 2;
      return -2;
    }
    if (pin.size() == 1 && pin[0] >= 'A' && pin[0] <= 'H') return pin[0] - 'A';
    if (pin.size() == 2 && pin[0] == 'A' && pin[1] >= '1' && pin[1] <= '8') return pin[1] - '1';
    return -2;
  }

  void add_instance(const std::string& type, const std::string& inst, const std::vector<Connection>& conns) {
    const bool named = !conns.empty() && !conns.front().pin.empty();
    for (const auto& c : conns) {
      if (c.pin.empty() == named) fail(inst + ": mixed named and positional connections");
    }

    std::optional<CellKind> kind;
    std::vector<std::string> order;  // positional: output first
    if (auto prim = primitive_gate(type)) {
      if (named) fail(inst + ": primitive " + type + " requires positional ports");
      if (conns.size() < 2) fail(inst + ": too few ports");
      const int arity = static_cast<int>(conns.size()) - 1;
      if (*prim == GateType::Buf || *prim == GateType::Not) {
        if (arity != 1) fail(inst + ": multi-output " + type + " is not supported");
        kind = CellKind{*prim, 1};
      } else {
        kind = CellKind::nary(*prim, arity);
      }
    } else if (type == "dff") {
      // ISCAS89 convention: dff NAME (CK, Q, D)
      if (named || conns.size() != 3) fail(inst + ": dff expects (CK, Q, D)");
      builder_->add_cell(inst, CellKind::dff(false), conns[1].net, {conns[2].net, conns[0].net});
      return;
    } else {
      kind = cell_kind_from_name(type);
      if (!kind) {
        const std::string fam = upper(type);
        const std::pair<std::string_view, GateType> fams[] = {
            {"AND", GateType::And}, {"NAND", GateType::Nand}, {"OR", GateType::Or},
            {"NOR", GateType::Nor}, {"XOR", GateType::Xor},   {"XNOR", GateType::Xnor}};
        for (const auto& [f, g] : fams) {
          if (fam == f) kind = CellKind::nary(g, static_cast<int>(conns.size()) - 1);
        }
      }
      if (!kind) throw Error(ErrorCode::UnsupportedCell, type + " (instance " + inst + ")");
    }

    std::string output;
    std::vector<std::string> inputs;
    if (named) {
      if (kind->is_sequential()) {
        const bool has_rst = std::any_of(conns.begin(), conns.end(), [&](const Connection& c) {
          return pin_index(CellKind::dff(true), c.pin) == 2 && !c.net.empty();
        });
        kind = CellKind::dff(has_rst);
      }
      inputs.assign(kind->arity, "");
      for (const auto& c : conns) {
        const int idx = pin_index(*kind, c.pin);
        if (idx == -2 || idx >= kind->arity) {
          if (kind->is_sequential() && idx == 2 && c.net.empty()) continue;
          fail(inst + ": unknown pin " + c.pin + " on " + kind->name());
        }
        if (idx == -1) {
          output = c.net;
        } else {
          inputs[idx] = c.net;
        }
      }
      if (output.empty()) fail(inst + ": output pin unconnected");
    } else {
      if (static_cast<int>(conns.size()) != kind->arity + 1) {
        fail(inst + ": " + kind->name() + " expects " + std::to_string(kind->arity + 1) + " ports");
      }
      output = conns[0].net;
      for (std::size_t i = 1; i < conns.size(); ++i) inputs.push_back(conns[i].net);
    }
    builder_->add_cell(inst, *kind, output, std::move(inputs));
  }
};

const std::set<std::string, std::less<>>& keywords() {
  static const std::set<std::string, std::less<>> k = {
      "module", "endmodule", "input", "output", "wire", "assign", "reg", "and", "nand", "or",
      "nor",    "xor",       "xnor",  "not",    "buf",  "always", "begin", "end", "dff"};
  return k;
}

std::string verilog_name(const std::string& name) {
  if (name == kConst0 || name == kConst1) return name;
  bool simple = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '$') simple = false;
  }
  if (simple && !keywords().count(name)) return name;
  return "\\" + name + " ";
}

}  // namespace

Netlist parse_netlist(std::string_view text, const ParseOptions& options) {
  Parser p(Lexer(text).run(), options);
  return p.run();
}

Netlist read_netlist_file(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_netlist(ss.str(), options);
}

std::string emit_netlist(const Netlist& n) {
  std::ostringstream os;
  std::vector<std::string> ports;
  for (const Net& net : n.nets()) {
    if (net.is_input || net.is_output) ports.push_back(verilog_name(net.name));
  }
  os << "module " << verilog_name(n.module_name()) << " (";
  for (std::size_t i = 0; i < ports.size(); ++i) os << (i ? ", " : "") << ports[i];
  os << ");\n";
  for (const Net& net : n.nets()) {
    if (net.is_input) os << "  input " << verilog_name(net.name) << ";\n";
  }
  for (const Net& net : n.nets()) {
    if (net.is_output) os << "  output " << verilog_name(net.name) << ";\n";
  }
  for (const Net& net : n.nets()) {
    if (!net.is_input && !net.is_output && !net.is_constant()) {
      os << "  wire " << verilog_name(net.name) << ";\n";
    }
  }
  for (const Cell& c : n.cells()) {
    os << "  " << c.kind.name() << " " << verilog_name(c.name) << " (";
    for (std::size_t p = 0; p < c.inputs.size(); ++p) {
      os << "." << c.kind.input_pin(static_cast<int>(p)) << "(" << verilog_name(n.net(c.inputs[p]).name)
         << "), ";
    }
    os << "." << c.kind.output_pin() << "(" << verilog_name(n.net(c.output).name) << "));\n";
  }
  os << "endmodule\n";
  return os.str();
}

}  // namespace tjgen
