#include <algorithm>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "tjgen/error.hpp"
#include "tjgen/netlist.hpp"

using namespace tjgen;

namespace {

constexpr const char* kAndNot = R"(
module small (a, b, y);
  input a, b;
  output y;
  wire nb;
  not U1 (nb, b);
  and U2 (y, a, nb);
endmodule
)";

Netlist c17() { return read_netlist_file(TJGEN_TEST_DATA "/c17.v"); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("cell kinds and truth tables") {
  CHECK(CellKind::nary(GateType::And, 2).truth_table() == std::vector<std::uint8_t>{0, 0, 0, 1});
  CHECK(CellKind::mux2().truth_table() == std::vector<std::uint8_t>{0, 1, 0, 1, 0, 0, 1, 1});
  CHECK(CellKind::nary(GateType::Xor, 8).truth_table().size() == 256);
  CHECK(cell_kind_from_name("nand3") == CellKind::nary(GateType::Nand, 3));
  CHECK(cell_kind_from_name("XNOR2") == CellKind::nary(GateType::Xnor, 2));
  CHECK(cell_kind_from_name("OR9") == std::nullopt);
  CHECK(cell_kind_from_name("DFFR") == CellKind::dff(true));
  CHECK(code_of([] { (void)CellKind::dff().truth_table(); }) == ErrorCode::SequentialCell);
  CHECK(code_of([] { (void)CellKind::nary(GateType::And, 9); }) == ErrorCode::UnsupportedCell);

  // Word evaluation agrees with the row-wise table for every kind.
  for (auto kind : {CellKind::buf(), CellKind::inv(), CellKind::mux2(), CellKind::nary(GateType::Nor, 3),
                    CellKind::nary(GateType::Xnor, 4), CellKind::nary(GateType::Nand, 5)}) {
    const auto table = kind.truth_table();
    for (std::uint32_t row = 0; row < table.size(); ++row) {
      std::vector<std::uint64_t> in(kind.arity);
      for (int i = 0; i < kind.arity; ++i) in[i] = ((row >> i) & 1u) ? ~0ull : 0ull;
      CHECK((kind.eval_word(in) & 1u) == table[row]);
    }
  }
}

TEST_CASE("parse minimal module") {
  const Netlist n = parse_netlist(kAndNot);
  CHECK(n.cells().size() == 2);
  CHECK(n.nets().size() == 4);
  REQUIRE(n.primary_inputs().size() == 2);
  CHECK(n.net(n.primary_inputs()[0]).name == "a");
  CHECK(n.net(n.primary_inputs()[1]).name == "b");
  REQUIRE(n.primary_outputs().size() == 1);
  CHECK(n.net(n.primary_outputs()[0]).name == "y");
  CHECK(n.cell(*n.find_cell("U2")).kind == CellKind::nary(GateType::And, 2));
}

TEST_CASE("parse errors") {
  CHECK(code_of([] {
          parse_netlist("module m(a,b,y); input a,b; output y; and g1(y,a,b); or g2(y,a,b); endmodule");
        }) == ErrorCode::MultipleDrivers);
  CHECK(code_of([] { parse_netlist("module m(a,y); input a; output y; FOO3 g(y,a); endmodule"); }) ==
        ErrorCode::UnsupportedCell);
  CHECK(code_of([] { parse_netlist("module m(a,y); input a; output y; and g(y,a,zz); endmodule"); }) ==
        ErrorCode::UndeclaredNet);
  CHECK(code_of([] {
          parse_netlist("module m(a,y); input a; output y; wire w; and g1(w,a,y); buf g2(y,w); endmodule");
        }) == ErrorCode::CombinationalCycle);
  CHECK(code_of([] { parse_netlist("module m(a,y); input a; output y; assign y = a; endmodule"); }) ==
        ErrorCode::Parse);
  CHECK(code_of([] {
          parse_netlist("module m(a,y); input a; output y; AND2 g(.A(a), .B(), .Y(y)); endmodule");
        }) == ErrorCode::DanglingInput);
  CHECK(code_of([] { parse_netlist("module m(a,y); input a; output y; wire w; buf g(w,a); endmodule"); }) ==
        ErrorCode::UndrivenNet);
}

TEST_CASE("c17 topology") {
  const Netlist n = c17();
  CHECK(n.cells().size() == 6);
  CHECK(n.nets().size() == 11);
  CHECK(n.primary_inputs().size() == 5);
  CHECK(n.primary_outputs().size() == 2);
  CHECK(n.topo().max_level == 3);
  CHECK(n.topo().level[n.net_id("N11")] == 1);
  CHECK(n.topo().level[n.net_id("N16")] == 2);
  CHECK(n.topo().level[n.net_id("N23")] == 3);
}

TEST_CASE("topological levels") {
  SUBCASE("chain") {
    const Netlist n = parse_netlist(
        "module m(a,n2); input a; output n2; wire n1; not g1(n1,a); not g2(n2,n1); endmodule");
    CHECK(n.topo().level[n.net_id("a")] == 0);
    CHECK(n.topo().level[n.net_id("n1")] == 1);
    CHECK(n.topo().level[n.net_id("n2")] == 2);
  }
  SUBCASE("flip-flop loop is cut") {
    const Netlist n = read_netlist_file(TJGEN_TEST_DATA "/s27.v");
    CHECK(n.topo().level[n.net_id("G5")] == 0);
    CHECK(n.topo().level[n.net_id("G6")] == 0);
    CHECK(n.topo().level[n.net_id("G11")] > n.topo().level[n.net_id("G9")]);
    REQUIRE(n.clock_net());
    CHECK(n.net(*n.clock_net()).name == "CK");
    CHECK(n.flip_flops().size() == 3);
  }
  SUBCASE("invariant on random netlists") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Netlist n = testing::random_netlist({.inputs = 5, .gates = 40, .dffs = 3, .seed = seed});
      for (const Cell& c : n.cells()) {
        if (c.kind.is_sequential()) {
          CHECK(n.topo().level[c.output] == 0);
          continue;
        }
        for (NetId in : c.inputs) CHECK(n.topo().level[c.output] > n.topo().level[in]);
      }
    }
  }
}

TEST_CASE("topological order is independent of declaration order") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Netlist n = testing::random_netlist({.gates = 30, .dffs = 2, .seed = seed});
    std::vector<CellId> perm(n.cells().size());
    for (CellId i = 0; i < perm.size(); ++i) perm[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    NetlistBuilder b(n.module_name());
    for (const Net& net : n.nets()) {
      if (net.is_input) b.add_input(net.name);
      else if (net.is_output) b.add_output(net.name);
      else b.add_wire(net.name);
    }
    for (CellId c : perm) {
      std::vector<std::string> ins;
      for (NetId i : n.cell(c).inputs) ins.push_back(n.net(i).name);
      b.add_cell(n.cell(c).name, n.cell(c).kind, n.net(n.cell(c).output).name, ins);
    }
    const Netlist shuffled = b.build();
    CHECK(testing::levels_by_name(shuffled) == testing::levels_by_name(n));
    std::vector<std::string> order_a, order_b;
    for (CellId c : n.topo().cell_order) order_a.push_back(n.cell(c).name);
    for (CellId c : shuffled.topo().cell_order) order_b.push_back(shuffled.cell(c).name);
    CHECK(order_a == order_b);
  }
}

TEST_CASE("emit round-trips") {
  SUBCASE("small") {
    const Netlist n = parse_netlist(kAndNot);
    CHECK(structurally_equal(parse_netlist(emit_netlist(n)), n));
  }
  SUBCASE("buffer-only module") {
    const Netlist n = parse_netlist(
        "module w(a, b, x, y); input a, b; output x, y; BUF u0 (.A(a), .Y(x)); buf u1 (y, b); endmodule");
    CHECK(structurally_equal(parse_netlist(emit_netlist(n)), n));
  }
  SUBCASE("buses, escaped names, constants, DFF with reset") {
    const char* src = R"(
module \top$1 (input [1:0] d, input clk, input rn, output q0, output \odd.name );
  wire \n[3] ;
  DFFR r0 (.D(d[0]), .CK(clk), .RN(rn), .Q(q0));
  AND3 g (.A(d[1]), .B(1'b1), .C(q0), .Y(\n[3] ));
  OR2 h (.A(\n[3] ), .B(1'b0), .Y(\odd.name ));
endmodule)";
    const Netlist n = parse_netlist(src);
    CHECK(n.find_net("d[0]"));
    CHECK(n.find_net("n[3]"));
    CHECK(n.cell(*n.find_cell("r0")).kind == CellKind::dff(true));
    REQUIRE(n.reset_net());
    CHECK(n.net(*n.reset_net()).name == "rn");
    const Netlist again = parse_netlist(emit_netlist(n));
    CHECK(structurally_equal(again, n));
    CHECK(emit_netlist(again) == emit_netlist(n));
  }
  SUBCASE("random corpus") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      const Netlist n = testing::random_netlist({.gates = 60, .dffs = 4, .seed = seed});
      const Netlist once = parse_netlist(emit_netlist(n));
      CHECK(structurally_equal(once, n));
      CHECK(structurally_equal(parse_netlist(emit_netlist(once)), once));
    }
  }
}

TEST_CASE("splice payload rewiring") {
  const Netlist host = parse_netlist(kAndNot);
  const Netlist sub = parse_netlist(R"(
module trj (t0, t1, pin, pout);
  input t0, t1, pin;
  output pout;
  wire trig;
  AND2 T (.A(t0), .B(t1), .Y(trig));
  XOR2 P (.A(pin), .B(trig), .Y(pout));
endmodule)");
  SpliceSpec spec{.inputs = {{"t0", "a"}, {"t1", "nb"}}, .payload_in = "pin", .payload_out = "pout",
                  .victim = "y", .prefix = "tj0_"};
  const Netlist out = splice_subcircuit(host, sub, spec);
  const Net& y = out.net(out.net_id("y"));
  CHECK(y.is_output);
  CHECK(out.cell(y.driver).name == "tj0_P");
  CHECK(out.net(out.cell(*out.find_cell("U2")).output).name == "tj0_pin");
  // host nets + template internal nets (trig) + rewire net
  CHECK(out.nets().size() == host.nets().size() + 1 + 1);
  CHECK(out.primary_inputs().size() == host.primary_inputs().size());
  CHECK(out.primary_outputs().size() == host.primary_outputs().size());
  CHECK(structurally_equal(parse_netlist(emit_netlist(out)), out));

  SUBCASE("victim in a trigger's fan-in is a loop") {
    const Netlist c = c17();
    SpliceSpec bad{.inputs = {{"t0", "N16"}, {"t1", "N1"}}, .payload_in = "pin", .payload_out = "pout",
                   .victim = "N11", .prefix = "tj0_"};
    CHECK(code_of([&] { splice_subcircuit(c, sub, bad); }) == ErrorCode::CombinationalCycle);
  }
  SUBCASE("collisions and missing ports") {
    const Netlist clash = parse_netlist(
        "module m(a,b,y); input a,b; output y; wire tj0_trig; and g(tj0_trig,a,b); buf h(y,tj0_trig); "
        "endmodule");
    SpliceSpec s{.inputs = {{"t0", "a"}, {"t1", "b"}}, .payload_in = "pin", .payload_out = "pout",
                 .victim = "y", .prefix = "tj0_"};
    CHECK(code_of([&] { splice_subcircuit(clash, sub, s); }) == ErrorCode::NameCollision);
    CHECK(unique_prefix(clash) == "tj1_");
    s.inputs.erase("t1");
    CHECK(code_of([&] { splice_subcircuit(host, sub, s); }) == ErrorCode::UnboundPort);
    SpliceSpec pi_victim = spec;
    pi_victim.victim = "a";
    CHECK(code_of([&] { splice_subcircuit(host, sub, pi_victim); }) == ErrorCode::InvalidVictim);
  }
  SUBCASE("sequential subcircuit needs a clock") {
    const Netlist seq = parse_netlist(R"(
module trs (t0, clk, pin, pout);
  input t0, clk, pin;
  output pout;
  wire s;
  DFF r (.D(t0), .CLK(clk), .Q(s));
  XOR2 P (.A(pin), .B(s), .Y(pout));
endmodule)");
    SpliceSpec s{.inputs = {{"t0", "a"}}, .payload_in = "pin", .payload_out = "pout", .victim = "y",
                 .prefix = "tj0_"};
    CHECK(code_of([&] { splice_subcircuit(host, seq, s); }) == ErrorCode::MissingClock);
  }
}

TEST_CASE("edge list dump") {
  const std::string edges = dump_edges(parse_netlist(kAndNot));
  CHECK(edges.find("PI:b -> U1.A via b") != std::string::npos);
  CHECK(edges.find("U2 -> PO:y via y") != std::string::npos);
}
