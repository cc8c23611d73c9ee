#include <fstream>
#include <sstream>

#include "builtin_templates.hpp"
#include "json.hpp"
#include "tjgen/error.hpp"
#include "tjgen/insert.hpp"

namespace tjgen {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void schema(const std::string& what) { throw Error(ErrorCode::Schema, "template: " + what); }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_input(const Netlist& n, const std::string& name) {
  const auto id = n.find_net(name);
  return id && n.net(*id).is_input;
}

// Copy of `n` with input port `port` removed and its sinks tied to `constant`.
Netlist tie_input(const Netlist& n, const std::string& port, std::string_view constant) {
  NetlistBuilder b(n.module_name());
  for (const Net& net : n.nets()) {
    if (net.is_constant() || net.name == port) continue;
    if (net.is_input) {
      b.add_input(net.name);
    } else if (net.is_output) {
      b.add_output(net.name);
    } else {
      b.add_wire(net.name);
    }
  }
  for (const Cell& c : n.cells()) {
    std::vector<std::string> ins;
    for (NetId i : c.inputs) ins.push_back(n.net(i).name == port ? std::string(constant) : n.net(i).name);
    b.add_cell(c.name, c.kind, n.net(c.output).name, std::move(ins));
  }
  if (n.clock_net()) b.set_clock(n.net(*n.clock_net()).name);
  return b.build();
}

}  // namespace

TrojanTemplate parse_template(std::string_view verilog, std::string_view sidecar) {
  json j;
  try {
    j = json::parse(sidecar);
  } catch (const json::exception& e) {
    schema(std::string("sidecar is not JSON: ") + e.what());
  }
  TrojanTemplate t;
  try {
    t.template_id = j.at("template_id").get<std::string>();
    t.trigger_ports = j.at("trigger_ports").get<std::vector<std::string>>();
    if (j.contains("active_values")) {
      for (int v : j.at("active_values").get<std::vector<int>>()) t.active_values.push_back(v != 0);
    } else {
      t.active_values.assign(t.trigger_ports.size(), true);
    }
    if (j.contains("polarity_cells")) t.polarity_cells = j.at("polarity_cells").get<std::vector<std::string>>();
    t.polarity_cells.resize(t.trigger_ports.size());
    t.final_trigger_net = j.at("final_trigger_net").get<std::string>();
    t.payload_in = j.at("payload_in").get<std::string>();
    t.payload_out = j.at("payload_out").get<std::string>();
    if (j.contains("clock_port")) t.clock_port = j.at("clock_port").get<std::string>();
    if (j.contains("reset_port")) t.reset_port = j.at("reset_port").get<std::string>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "combinational") {
      t.kind = TemplateKind::Combinational;
    } else if (kind == "sequential") {
      t.kind = TemplateKind::Sequential;
    } else {
      schema("unknown kind " + kind);
    }
  } catch (const json::exception& e) {
    schema(e.what());
  }

  t.body = parse_netlist(verilog, ParseOptions{t.clock_port, t.reset_port});
  const Netlist& b = t.body;
  if (t.trigger_ports.empty()) schema("no trigger ports");
  if (t.active_values.size() != t.trigger_ports.size()) schema("active_values length differs from trigger_ports");
  if (t.polarity_cells.size() != t.trigger_ports.size()) schema("polarity_cells length differs from trigger_ports");
  for (std::size_t i = 0; i < t.r(); ++i) {
    if (!is_input(b, t.trigger_ports[i])) schema("trigger port " + t.trigger_ports[i] + " is not an input");
    const std::string& pc = t.polarity_cells[i];
    if (pc.empty()) continue;
    const auto cell = b.find_cell(pc);
    if (!cell) schema("no polarity cell " + pc);
    const Cell& c = b.cell(*cell);
    if ((c.kind.type != GateType::Buf && c.kind.type != GateType::Not) ||
        b.net(c.inputs[0]).name != t.trigger_ports[i]) {
      schema("polarity cell " + pc + " must be a BUF/NOT on " + t.trigger_ports[i]);
    }
  }
  if (!b.find_net(t.final_trigger_net)) schema("no final trigger net " + t.final_trigger_net);
  if (!is_input(b, t.payload_in)) schema("payload_in " + t.payload_in + " is not an input");
  const auto pout = b.find_net(t.payload_out);
  if (!pout || !b.net(*pout).is_output) schema("payload_out " + t.payload_out + " is not an output");
  if (t.clock_port && !is_input(b, *t.clock_port)) schema("clock port is not an input");
  if (t.reset_port && !is_input(b, *t.reset_port)) schema("reset port is not an input");
  if ((t.kind == TemplateKind::Sequential) != b.is_sequential()) {
    schema("kind does not match the body (flip-flops present: " + std::string(b.is_sequential() ? "yes" : "no") + ")");
  }
  if (b.is_sequential() && !t.clock_port) schema("sequential template without clock_port");
  return t;
}

TrojanTemplate load_template(const std::filesystem::path& path) {
  std::filesystem::path stem = path;
  stem.replace_extension();
  std::filesystem::path v = stem, s = stem;
  v += ".v";
  s += ".json";
  return parse_template(read_file(v), read_file(s));
}

std::string template_sidecar_json(const TrojanTemplate& t) {
  json j;
  j["template_id"] = t.template_id;
  j["kind"] = t.kind == TemplateKind::Sequential ? "sequential" : "combinational";
  j["trigger_ports"] = t.trigger_ports;
  std::vector<int> av;
  for (bool v : t.active_values) av.push_back(v ? 1 : 0);
  j["active_values"] = av;
  j["polarity_cells"] = t.polarity_cells;
  j["final_trigger_net"] = t.final_trigger_net;
  j["payload_in"] = t.payload_in;
  j["payload_out"] = t.payload_out;
  if (t.clock_port) j["clock_port"] = *t.clock_port;
  if (t.reset_port) j["reset_port"] = *t.reset_port;
  return j.dump(2) + "\n";
}

std::span<const std::string_view> builtin_template_ids() {
  static const std::array<std::string_view, 4> ids = {"c1", "c2", "s1", "s2"};
  return ids;
}

TrojanTemplate builtin_template(std::string_view id) {
  for (const auto& b : detail::kBuiltinTemplates) {
    if (b.id == id) return parse_template(b.verilog, b.sidecar);
  }
  throw Error(ErrorCode::InvalidArgument, "no builtin template " + std::string(id));
}

TrojanTemplate resolve_template(const std::string& id_or_path) {
  for (std::string_view id : builtin_template_ids()) {
    if (id == id_or_path) return builtin_template(id);
  }
  return load_template(id_or_path);
}

TriggerCondition Binding::condition() const {
  TriggerCondition c;
  for (std::size_t i = 0; i < trigger_nets.size(); ++i) c.push_back({trigger_nets[i], values[i]});
  return c;
}

std::vector<bool> required_values(const TrojanTemplate& t, std::span<const NetId> triggers,
                                  std::span<const double> probability) {
  if (triggers.size() != t.r()) {
    throw Error(ErrorCode::InvalidArgument, "template needs " + std::to_string(t.r()) + " trigger nets");
  }
  std::vector<bool> v;
  for (std::size_t i = 0; i < t.r(); ++i) {
    v.push_back(t.polarity_cells[i].empty() ? t.active_values[i] : rare_value(probability[triggers[i]]));
  }
  return v;
}

BoundTrojan bind_template(const Netlist& host, const TrojanTemplate& t, const Binding& b, const BindOptions& options) {
  if (b.trigger_nets.size() != t.r() || b.values.size() != t.r()) {
    throw Error(ErrorCode::InvalidArgument, "binding does not match template arity");
  }
  Netlist body = t.body;
  bool flipped = false;
  NetlistBuilder nb = NetlistBuilder::from(body);
  for (std::size_t i = 0; i < t.r(); ++i) {
    const std::string& pc = t.polarity_cells[i];
    if (pc.empty()) {
      if (b.values[i] != t.active_values[i]) {
        throw Error(ErrorCode::InvalidArgument, "port " + t.trigger_ports[i] + " has no polarity stage");
      }
      continue;
    }
    if (b.values[i] == t.active_values[i]) continue;
    const Cell& c = body.cell(*body.find_cell(pc));
    nb.replace_cell_kind(pc, c.kind.type == GateType::Buf ? CellKind::inv() : CellKind::buf());
    flipped = true;
  }
  if (flipped) body = nb.build();

  SpliceSpec spec;
  for (std::size_t i = 0; i < t.r(); ++i) spec.inputs[t.trigger_ports[i]] = b.trigger_nets[i];
  if (t.clock_port) {
    std::optional<std::string> clk = options.clock;
    if (!clk && host.clock_net()) clk = host.net(*host.clock_net()).name;
    if (!clk) throw Error(ErrorCode::MissingClock, "host has no clock for sequential template " + t.template_id);
    spec.inputs[*t.clock_port] = *clk;
  }
  if (t.reset_port) {
    std::optional<std::string> rst = options.reset;
    if (!rst && host.reset_net()) rst = host.net(*host.reset_net()).name;
    if (rst) {
      spec.inputs[*t.reset_port] = *rst;
    } else {
      body = tie_input(body, *t.reset_port, kConst1);
    }
  }
  spec.payload_in = t.payload_in;
  spec.payload_out = t.payload_out;
  spec.victim = b.payload_net;
  spec.prefix = options.prefix.empty() ? unique_prefix(host) : options.prefix;

  BoundTrojan out{splice_subcircuit(host, body, spec), spec.prefix, spec.prefix + t.final_trigger_net};
  return out;
}

}  // namespace tjgen
