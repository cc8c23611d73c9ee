#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "test_support.hpp"
#include "tjgen/error.hpp"
#include "tjgen/features.hpp"

using namespace tjgen;

namespace {

Netlist and2() {
  return parse_netlist(R"(
module m (a, b, y);
  input a, b;
  output y;
  and U1 (y, a, b);
endmodule
)");
}

// Ten cells including one DFF; distances below were traced by hand.
constexpr const char* kTen = R"(
module ten (a, b, c, clk, y, z);
  input a, b, c, clk;
  output y, z;
  wire n1, n2, n3, n4, q1, n5, n7, n8;
  and g1 (n1, a, b);
  not g2 (n2, n1);
  or g3 (n3, n2, c);
  buf g4 (n4, n3);
  DFF f1 (.D(n4), .CLK(clk), .Q(q1));
  xor g5 (n5, q1, a);
  nand g6 (y, n5, n3);
  nor g7 (n7, c, q1);
  buf g8 (n8, n7);
  and g9 (z, n8, b);
endmodule
)";

double row(const Netlist& n, const FeatureTable& t, const char* net, NetFeature f) {
  return t.rows[n.net_id(net)][f];
}

// Independent distance oracle: Bellman-Ford style relaxation over data pins.
std::vector<double> relax_dist_pi(const Netlist& n) {
  std::vector<double> d(n.nets().size(), kUnreachable);
  for (NetId pi : n.primary_inputs()) d[pi] = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (const Cell& c : n.cells()) {
      const int pins = c.kind.is_sequential() ? 1 : c.kind.arity;
      for (int p = 0; p < pins; ++p) {
        if (d[c.inputs[p]] + 1 < d[c.output]) {
          d[c.output] = d[c.inputs[p]] + 1;
          changed = true;
        }
      }
    }
  }
  return d;
}

}  // namespace

TEST_CASE("signal probability of AND2 at default budget") {
  const Netlist n = and2();
  const auto s = simulate(n, 100000, 7);
  CHECK(std::abs(s[n.net_id("y")].probability - 0.25) <= 0.01);
  CHECK(std::abs(s[n.net_id("a")].toggle_rate - 0.5) <= 0.01);
}

TEST_CASE("buffer copies its input's probability exactly") {
  const Netlist n = parse_netlist(R"(
module m (a, y);
  input a;
  output y;
  buf U1 (y, a);
endmodule
)");
  for (std::size_t vectors : {1, 63, 64, 65, 1000}) {
    const auto s = simulate(n, vectors, 3);
    CHECK(s[n.net_id("y")].probability == s[n.net_id("a")].probability);
    CHECK(s[n.net_id("y")].toggle_rate == s[n.net_id("a")].toggle_rate);
  }
}

TEST_CASE("AND8 tree against exhaustive enumeration") {
  NetlistBuilder b("tree");
  for (int i = 0; i < 8; ++i) b.add_input("a" + std::to_string(i));
  b.add_output("y");
  for (const char* w : {"m0", "m1", "m2", "m3", "k0", "k1"}) b.add_wire(w);
  for (int i = 0; i < 4; ++i) {
    b.add_cell("l1_" + std::to_string(i), CellKind::nary(GateType::And, 2), "m" + std::to_string(i),
               {"a" + std::to_string(2 * i), "a" + std::to_string(2 * i + 1)});
  }
  b.add_cell("l2_0", CellKind::nary(GateType::And, 2), "k0", {"m0", "m1"});
  b.add_cell("l2_1", CellKind::nary(GateType::And, 2), "k1", {"m2", "m3"});
  b.add_cell("l3", CellKind::nary(GateType::And, 2), "y", {"k0", "k1"});
  const Netlist n = b.build();
  const auto exact = testing::exact_probabilities(n);
  CHECK(exact[n.net_id("y")] == doctest::Approx(1.0 / 256));
  const auto s = simulate(n, 100000, 11);
  CHECK(std::abs(s[n.net_id("y")].probability - exact[n.net_id("y")]) <= 0.005);
}

TEST_CASE("simulated probability tracks exact enumeration on random circuits") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    testing::RandomNetlistParams p;
    p.inputs = 6 + static_cast<int>(seed % 5);
    p.dffs = static_cast<int>(seed % 4);
    p.gates = 30;
    p.seed = seed;
    const Netlist n = testing::random_netlist(p);
    REQUIRE(n.sources().size() <= 16);
    const auto exact = testing::exact_probabilities(n);
    const auto s = simulate(n, 100000, seed * 31);
    for (NetId id = 0; id < n.nets().size(); ++id) {
      CHECK(std::abs(s[id].probability - exact[id]) <= 0.01);
      CHECK(s[id].toggle_rate >= 0.0);
      CHECK(s[id].toggle_rate <= 1.0);
    }
  }
}

TEST_CASE("simulation is deterministic per seed") {
  testing::RandomNetlistParams p;
  p.dffs = 2;
  const Netlist n = testing::random_netlist(p);
  const auto a = simulate(n, 5000, 9), b = simulate(n, 5000, 9), c = simulate(n, 5000, 10);
  bool differs = false;
  for (NetId id = 0; id < n.nets().size(); ++id) {
    CHECK(a[id].probability == b[id].probability);
    CHECK(a[id].toggle_rate == b[id].toggle_rate);
    differs |= a[id].probability != c[id].probability;
  }
  CHECK(differs);
}

TEST_CASE("SCOAP hand values") {
  const Netlist n = and2();
  const auto s = scoap(n);
  CHECK(s[n.net_id("y")].cc1 == 3);
  CHECK(s[n.net_id("y")].cc0 == 2);
  CHECK(s[n.net_id("a")].cc0 == 1);
  CHECK(s[n.net_id("a")].cc1 == 1);
  CHECK(s[n.net_id("y")].co == 0);
  CHECK(s[n.net_id("a")].co == 2);

  const Netlist m = parse_netlist(R"(
module m (a, b, s, x, y, w);
  input a, b, s;
  output x, y, w;
  xor U1 (x, a, b);
  MUX2 U2 (.A(a), .B(b), .S(s), .Y(y));
  or U3 (w, a, 1'b0);
endmodule
)");
  const auto t = scoap(m);
  CHECK(t[m.net_id("x")].cc0 == 3);
  CHECK(t[m.net_id("x")].cc1 == 3);
  CHECK(t[m.net_id("y")].cc1 == 3);
  CHECK(t[m.net_id("s")].co == 3);  // min(cc0A + cc1B, cc1A + cc0B) + 1
  CHECK(t[m.net_id("1'b0")].cc1 == kScoapCap);
  CHECK(t[m.net_id("w")].cc1 == 2);
  CHECK(t[m.net_id("w")].cc0 == 3);
  CHECK(t[m.net_id("a")].co == 0 + 1 + 1);  // cheapest branch: XOR or OR with const
}

TEST_CASE("SCOAP full-scan boundaries") {
  const Netlist n = parse_netlist(kTen);
  const auto s = scoap(n);
  CHECK(s[n.net_id("q1")].cc0 == 1);
  CHECK(s[n.net_id("q1")].cc1 == 1);
  CHECK(s[n.net_id("n4")].co == 0);
  CHECK(s[n.net_id("clk")].co == kScoapCap);
}

TEST_CASE("SCOAP increases by one per buffer stage") {
  NetlistBuilder b("chain");
  b.add_input("a");
  std::string prev = "a";
  for (int i = 0; i < 12; ++i) {
    const std::string out = i == 11 ? "y" : "c" + std::to_string(i);
    if (i == 11) {
      b.add_output(out);
    } else {
      b.add_wire(out);
    }
    b.add_cell("u" + std::to_string(i), CellKind::buf(), out, {prev});
    prev = out;
  }
  const Netlist n = b.build();
  const auto s = scoap(n);
  std::string cur = "a";
  for (int i = 0; i < 12; ++i) {
    const std::string next = i == 11 ? "y" : "c" + std::to_string(i);
    CHECK(s[n.net_id(next)].cc0 == s[n.net_id(cur)].cc0 + 1);
    CHECK(s[n.net_id(next)].cc1 == s[n.net_id(cur)].cc1 + 1);
    CHECK(s[n.net_id(cur)].co == s[n.net_id(next)].co + 1);
    cur = next;
  }
}

TEST_CASE("SCOAP saturates on deep logic") {
  NetlistBuilder b("deep");
  b.add_input("a");
  b.add_input("b");
  std::string prev = "a";
  for (int i = 0; i < 40; ++i) {
    const std::string out = "d" + std::to_string(i);
    b.add_wire(out);
    b.add_cell("u" + std::to_string(i), CellKind::nary(GateType::And, 2), out, {prev, prev});
    prev = out;
  }
  b.add_output("y");
  b.add_cell("uo", CellKind::buf(), "y", {prev});
  const Netlist n = b.build();
  const auto s = scoap(n);
  CHECK(s[n.net_id("y")].cc1 == kScoapCap);
  for (const auto& v : s) {
    CHECK(v.cc0 <= kScoapCap);
    CHECK(v.cc1 <= kScoapCap);
    CHECK(v.co <= kScoapCap);
  }
}

TEST_CASE("entropy of cell kinds") {
  CHECK(entropy(CellKind::inv()) == doctest::Approx(1.0));
  CHECK(entropy(CellKind::buf()) == doctest::Approx(1.0));
  CHECK(std::abs(entropy(CellKind::nary(GateType::And, 2)) - 0.8113) <= 1e-4);
  CHECK(entropy(CellKind::nary(GateType::Xor, 2)) == doctest::Approx(1.0));
  CHECK(entropy(CellKind::mux2()) == doctest::Approx(1.0));
  CHECK_THROWS_AS(entropy(CellKind::dff()), Error);

  const GateType fams[] = {GateType::And, GateType::Nand, GateType::Or,
                           GateType::Nor, GateType::Xor,  GateType::Xnor};
  for (GateType t : fams) {
    for (int k = 2; k <= CellKind::kMaxArity; ++k) {
      const CellKind kind = CellKind::nary(t, k);
      const double e = entropy(kind);
      CHECK(e >= 0.0);
      CHECK(e <= 1.0);
      const auto table = kind.truth_table();
      std::size_t ones = 0;
      for (auto v : table) ones += v;
      CHECK((e == doctest::Approx(1.0)) == (2 * ones == table.size()));
    }
  }
}

TEST_CASE("structural features of the ten-cell circuit") {
  const Netlist n = parse_netlist(kTen);
  const auto t = extract_features(n, {.vectors = 256, .seed = 1});
  const double inf = kUnreachable;
  struct Expect {
    const char* net;
    double pi, po, ff_in, ff_out, fin, fout, fin_nbr, fout_nbr;
  };
  const Expect table[] = {
      {"a", 0, 2, 4, inf, 0, 2, 0, 2},   {"b", 0, 1, 4, inf, 0, 2, 0, 1},
      {"c", 0, 2, 2, inf, 0, 2, 0, 3},   {"clk", 0, inf, inf, inf, 0, 1, 0, 2},
      {"n1", 1, 3, 3, inf, 2, 1, 0, 1},  {"n2", 2, 2, 2, inf, 1, 1, 2, 2},
      {"n3", 1, 1, 1, inf, 2, 2, 1, 1},  {"n4", 2, 3, 0, inf, 1, 1, 2, 2},
      {"q1", 3, 2, inf, 0, 2, 2, 1, 2},  {"n5", 1, 1, inf, 1, 2, 1, 2, 0},
      {"y", 2, 0, inf, 2, 2, 0, 4, 0},   {"n7", 1, 2, inf, 1, 2, 1, 2, 1},
      {"n8", 2, 1, inf, 2, 1, 1, 2, 0},  {"z", 1, 0, inf, 3, 2, 0, 1, 0},
  };
  for (const Expect& e : table) {
    INFO(e.net);
    CHECK(row(n, t, e.net, kDistPi) == e.pi);
    CHECK(row(n, t, e.net, kDistPo) == e.po);
    CHECK(row(n, t, e.net, kDistFfIn) == e.ff_in);
    CHECK(row(n, t, e.net, kDistFfOut) == e.ff_out);
    CHECK(row(n, t, e.net, kFaninImm) == e.fin);
    CHECK(row(n, t, e.net, kFanoutImm) == e.fout);
    CHECK(row(n, t, e.net, kFaninNbr) == e.fin_nbr);
    CHECK(row(n, t, e.net, kFanoutNbr) == e.fout_nbr);
  }
  CHECK(row(n, t, "q1", kEntropy) == 1.0);
  CHECK(row(n, t, "a", kEntropy) == 1.0);
}

TEST_CASE("structural distances agree with a relaxation oracle") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    testing::RandomNetlistParams p;
    p.seed = seed;
    p.dffs = static_cast<int>(seed % 3);
    p.gates = 40;
    const Netlist n = testing::random_netlist(p);
    const auto st = structural_features(n);
    const auto oracle = relax_dist_pi(n);
    for (NetId id = 0; id < n.nets().size(); ++id) {
      CHECK(st[id].dist_pi == oracle[id]);
      CHECK((st[id].dist_pi == 0) == n.net(id).is_input);
      const Net& net = n.net(id);
      if (net.driver_kind != DriverKind::Cell) continue;
      const Cell& c = n.cell(net.driver);
      double best = kUnreachable;
      const int pins = c.kind.is_sequential() ? 1 : c.kind.arity;
      for (int i = 0; i < pins; ++i) best = std::min(best, st[c.inputs[i]].dist_pi);
      CHECK(st[id].dist_pi <= 1 + best);
    }
  }
}

TEST_CASE("min-max scaler") {
  SUBCASE("single vector scales to zeros") {
    const std::vector<NetFeatureRow> rows = {NetFeatureRow{0.3, 0.1, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}};
    const auto s = MinMaxScaler::fit<NetFeatureRow>(rows);
    for (double x : s.apply(rows[0])) CHECK(x == 0.0);
  }
  SUBCASE("one differing feature maps to 0 and 1") {
    NetFeatureRow a{}, b{};
    b[kCo] = 17;
    const std::vector<NetFeatureRow> rows = {a, b};
    const auto s = MinMaxScaler::fit<NetFeatureRow>(rows);
    CHECK(s.apply(a)[kCo] == 0.0);
    CHECK(s.apply(b)[kCo] == 1.0);
    for (std::size_t i = 0; i < kNetFeatureCount; ++i) {
      if (i != kCo) CHECK(s.apply(b)[i] == 0.0);
    }
  }
  SUBCASE("unreachable clamps to the finite max") {
    NetFeatureRow a{}, b{}, c{};
    a[kDistPo] = 1;
    b[kDistPo] = 5;
    c[kDistPo] = kUnreachable;
    const std::vector<NetFeatureRow> rows = {a, b, c};
    const auto s = MinMaxScaler::fit<NetFeatureRow>(rows);
    CHECK(s.hi()[kDistPo] == 5);
    CHECK(s.apply(c)[kDistPo] == 1.0);
    CHECK(s.apply(a)[kDistPo] == 0.0);
  }
  SUBCASE("min vector maps to zeros and values stay in range") {
    const Netlist n = parse_netlist(kTen);
    const auto t = extract_features(n, {.vectors = 1000, .seed = 2});
    const auto s = MinMaxScaler::fit<NetFeatureRow>(t.rows);
    NetFeatureRow lo{};
    for (std::size_t i = 0; i < kNetFeatureCount; ++i) lo[i] = s.lo()[i];
    for (double x : s.apply(lo)) CHECK(x == 0.0);
    const auto scaled = scale_rows(s, t.rows);
    for (std::size_t r = 0; r < scaled.size(); ++r) {
      CHECK(scaled[r] == s.apply(t.rows[r]));
      for (double x : scaled[r]) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
      }
    }
  }
}

TEST_CASE("trojan columns are a subset of the net row") {
  NetFeatureRow r{};
  for (std::size_t i = 0; i < kNetFeatureCount; ++i) r[i] = static_cast<double>(i);
  const auto t = trojan_columns(r);
  CHECK(t[0] == static_cast<double>(kSignalProbability));
  CHECK(t[1] == static_cast<double>(kToggleRate));
  CHECK(t[2] == static_cast<double>(kCc1));
  CHECK(t[3] == static_cast<double>(kCc0));
  CHECK(t[4] == static_cast<double>(kCo));
}

TEST_CASE("feature dumps") {
  const Netlist n = parse_netlist(kTen);
  const auto t = extract_features(n, {.vectors = 1000, .seed = 2});
  std::ostringstream csv, json;
  write_features_csv(csv, n, t);
  write_features_json(json, n, t);
  std::istringstream lines(csv.str());
  std::string header, line;
  std::getline(lines, header);
  CHECK(header.rfind("net,signal_probability,toggle_rate,entropy,cc0,cc1,co", 0) == 0);
  int count = 0;
  bool saw_inf = false;
  while (std::getline(lines, line)) {
    ++count;
    CHECK(std::count(line.begin(), line.end(), ',') == 14);
    saw_inf |= line.find(",inf") != std::string::npos;
  }
  CHECK(count == static_cast<int>(n.nets().size()));
  CHECK(saw_inf);
  CHECK(json.str().find("\"dist_ff_out\": null") != std::string::npos);
}
