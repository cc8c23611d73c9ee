#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "tjgen/netlist.hpp"

namespace tjgen {

/// DIMACS-style literal: +v or -v for variable v >= 1.
using Lit = int;

enum class SatResult { Sat, Unsat, Unknown };

std::string_view to_string(SatResult r);

/// Conflict-driven clause-learning solver: two watched literals, first-UIP
/// learning, activity-ordered decisions with phase saving, Luby restarts.
class SatSolver {
 public:
  int new_var();
  int num_vars() const { return static_cast<int>(assign_.size()) - 1; }
  std::size_t num_clauses() const { return original_.size(); }

  void add_clause(std::vector<Lit> lits);

  /// Decides the clause set; Unknown when the wall-clock budget runs out.
  SatResult solve(double timeout_seconds = 10.0);

  /// Model value after Sat.
  bool value(int var) const { return assign_[var] == 1; }
  bool lit_value(Lit l) const { return l > 0 ? value(l) : !value(-l); }

  std::uint64_t conflicts() const { return conflicts_; }
  std::uint64_t decisions() const { return decisions_; }

  void write_dimacs(std::ostream& os) const;

 private:
  using ILit = std::uint32_t;  // 2*var + negated
  static ILit encode(Lit l) { return l > 0 ? 2u * l : 2u * (-l) + 1u; }
  static int var_of(ILit l) { return static_cast<int>(l >> 1); }
  static ILit neg(ILit l) { return l ^ 1u; }

  std::int8_t lit_state(ILit l) const;  // 1 true, 0 false, -1 unassigned
  void enqueue(ILit l, int reason);
  int propagate();  // returns conflicting clause index or -1
  void analyze(int conflict, std::vector<ILit>& learnt, int& back_level);
  void backtrack(int level);
  int pick_branch();
  void bump(int var);
  int attach(std::vector<ILit> lits, bool learnt);

  struct Clause {
    std::vector<ILit> lits;
    bool learnt = false;
  };
  std::vector<Clause> clauses_;
  std::vector<std::vector<Lit>> original_;
  std::vector<std::vector<int>> watches_{2};  // by ILit
  std::vector<std::int8_t> assign_{-1};       // by var
  std::vector<std::uint8_t> phase_{0};
  std::vector<int> level_{0}, reason_{-1};
  std::vector<double> activity_{0.0};
  std::vector<std::uint8_t> seen_{0};
  std::vector<ILit> trail_;
  std::vector<std::size_t> trail_lim_;
  std::size_t qhead_ = 0;
  double var_inc_ = 1.0;
  bool inconsistent_ = false;
  std::uint64_t conflicts_ = 0, decisions_ = 0;
};

/// Gate-consistency (Tseitin) encoding of a netlist's scan-cut view. Cones are
/// encoded on demand. Source variables are looked up by stream key
/// (`pi:<name>`, `dff:<instance>`) in a table that several encoders may
/// share, which is how two netlists are tied together in a miter.
class CnfEncoder {
 public:
  CnfEncoder(const Netlist& n, SatSolver& solver, std::map<std::string, Lit>& sources);

  /// Literal equal to the value of `net`, encoding its fanin cone if needed.
  Lit lit(NetId net);

  /// Variable of a source net (primary input or DFF output) if encoded.
  const std::map<std::string, Lit>& sources() const { return sources_; }

 private:
  Lit encode_cell(const Cell& c);
  Lit source_lit(NetId net);

  const Netlist& n_;
  SatSolver& s_;
  std::map<std::string, Lit>& sources_;
  std::vector<Lit> lit_;  // 0 = not yet encoded
  Lit true_ = 0;
};

}  // namespace tjgen
