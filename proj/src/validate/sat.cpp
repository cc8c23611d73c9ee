#include <algorithm>
#include <chrono>
#include <cstdlib>

#include "tjgen/sat.hpp"

namespace tjgen {
namespace {

// Luby sequence 1 1 2 1 1 2 4 ...
double luby(double y, int x) {
  int size = 1, seq = 0;
  while (size < x + 1) {
    ++seq;
    size = 2 * size + 1;
  }
  while (size - 1 != x) {
    size = (size - 1) >> 1;
    --seq;
    x = x % size;
  }
  double r = 1;
  for (int i = 0; i < seq; ++i) r *= y;
  return r;
}

}  // namespace

std::string_view to_string(SatResult r) {
  switch (r) {
    case SatResult::Sat: return "SAT";
    case SatResult::Unsat: return "UNSAT";
    case SatResult::Unknown: return "UNKNOWN";
  }
  return "?";
}

int SatSolver::new_var() {
  assign_.push_back(-1);
  phase_.push_back(0);
  level_.push_back(0);
  reason_.push_back(-1);
  activity_.push_back(0.0);
  seen_.push_back(0);
  watches_.emplace_back();
  watches_.emplace_back();
  return num_vars();
}

std::int8_t SatSolver::lit_state(ILit l) const {
  const std::int8_t a = assign_[var_of(l)];
  if (a < 0) return -1;
  return (l & 1u) ? static_cast<std::int8_t>(1 - a) : a;
}

void SatSolver::enqueue(ILit l, int reason) {
  const int v = var_of(l);
  assign_[v] = (l & 1u) ? 0 : 1;
  level_[v] = static_cast<int>(trail_lim_.size());
  reason_[v] = reason;
  trail_.push_back(l);
}

int SatSolver::attach(std::vector<ILit> lits, bool learnt) {
  const int idx = static_cast<int>(clauses_.size());
  watches_[neg(lits[0])].push_back(idx);
  watches_[neg(lits[1])].push_back(idx);
  clauses_.push_back({std::move(lits), learnt});
  return idx;
}

void SatSolver::add_clause(std::vector<Lit> lits) {
  original_.push_back(lits);
  if (inconsistent_) return;
  backtrack(0);
  for (Lit l : lits) {
    while (std::abs(l) > num_vars()) new_var();
  }
  std::vector<ILit> c;
  for (Lit l : lits) c.push_back(encode(l));
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    if (c[i + 1] == neg(c[i]) && (c[i] & 1u) == 0) return;  // tautology
  }
  // Clauses arrive before search, so level-0 facts can simplify them.
  std::vector<ILit> kept;
  for (ILit l : c) {
    const auto st = lit_state(l);
    if (st == 1) return;
    if (st == -1) kept.push_back(l);
  }
  if (kept.empty()) {
    inconsistent_ = true;
  } else if (kept.size() == 1) {
    enqueue(kept[0], -1);
    if (propagate() >= 0) inconsistent_ = true;
  } else {
    attach(std::move(kept), false);
  }
}

int SatSolver::propagate() {
  while (qhead_ < trail_.size()) {
    const ILit p = trail_[qhead_++];  // p became true; visit clauses watching ~p
    auto& ws = watches_[p];
    std::size_t keep = 0;
    for (std::size_t w = 0; w < ws.size(); ++w) {
      const int ci = ws[w];
      auto& lits = clauses_[ci].lits;
      const ILit false_lit = neg(p);
      if (lits[0] == false_lit) std::swap(lits[0], lits[1]);
      if (lit_state(lits[0]) == 1) {
        ws[keep++] = ci;
        continue;
      }
      bool moved = false;
      for (std::size_t k = 2; k < lits.size(); ++k) {
        if (lit_state(lits[k]) != 0) {
          std::swap(lits[1], lits[k]);
          watches_[neg(lits[1])].push_back(ci);
          moved = true;
          break;
        }
      }
      if (moved) continue;
      ws[keep++] = ci;
      if (lit_state(lits[0]) == 0) {
        for (std::size_t r = w + 1; r < ws.size(); ++r) ws[keep++] = ws[r];
        ws.resize(keep);
        qhead_ = trail_.size();
        return ci;
      }
      enqueue(lits[0], ci);
    }
    ws.resize(keep);
  }
  return -1;
}

void SatSolver::bump(int var) {
  if ((activity_[var] += var_inc_) > 1e100) {
    for (double& a : activity_) a *= 1e-100;
    var_inc_ *= 1e-100;
  }
}

void SatSolver::analyze(int conflict, std::vector<ILit>& learnt, int& back_level) {
  learnt.assign(1, 0);
  int pending = 0;
  ILit p = 0;
  bool first = true;
  std::size_t idx = trail_.size();
  const int current = static_cast<int>(trail_lim_.size());
  do {
    const auto& lits = clauses_[conflict].lits;
    for (std::size_t i = first ? 0 : 1; i < lits.size(); ++i) {
      const ILit q = lits[i];
      const int v = var_of(q);
      if (seen_[v] || level_[v] == 0) continue;
      seen_[v] = 1;
      bump(v);
      if (level_[v] >= current) {
        ++pending;
      } else {
        learnt.push_back(q);
      }
    }
    first = false;
    while (!seen_[var_of(trail_[--idx])]) {
    }
    p = trail_[idx];
    conflict = reason_[var_of(p)];
    seen_[var_of(p)] = 0;
    --pending;
    // The reason clause keeps its implied literal at position 0.
    if (conflict >= 0) {
      auto& rl = clauses_[conflict].lits;
      for (std::size_t i = 0; i < rl.size(); ++i) {
        if (rl[i] == p) {
          std::swap(rl[0], rl[i]);
          break;
        }
      }
    }
  } while (pending > 0);
  learnt[0] = neg(p);

  back_level = 0;
  std::size_t max_i = 1;
  for (std::size_t i = 1; i < learnt.size(); ++i) {
    if (level_[var_of(learnt[i])] > back_level) {
      back_level = level_[var_of(learnt[i])];
      max_i = i;
    }
  }
  if (learnt.size() > 1) std::swap(learnt[1], learnt[max_i]);
  for (ILit l : learnt) seen_[var_of(l)] = 0;
  var_inc_ /= 0.95;
}

void SatSolver::backtrack(int level) {
  if (static_cast<int>(trail_lim_.size()) <= level) return;
  for (std::size_t i = trail_.size(); i > trail_lim_[level]; --i) {
    const int v = var_of(trail_[i - 1]);
    phase_[v] = static_cast<std::uint8_t>(assign_[v]);
    assign_[v] = -1;
    reason_[v] = -1;
  }
  trail_.resize(trail_lim_[level]);
  trail_lim_.resize(level);
  qhead_ = trail_.size();
}

int SatSolver::pick_branch() {
  int best = 0;
  double best_act = -1;
  for (int v = 1; v <= num_vars(); ++v) {
    if (assign_[v] < 0 && activity_[v] > best_act) {
      best_act = activity_[v];
      best = v;
    }
  }
  return best;
}

SatResult SatSolver::solve(double timeout_seconds) {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration_cast<clock::duration>(
                                           std::chrono::duration<double>(timeout_seconds));
  if (inconsistent_) return SatResult::Unsat;
  backtrack(0);
  if (propagate() >= 0) {
    inconsistent_ = true;
    return SatResult::Unsat;
  }
  std::vector<ILit> learnt;
  int restart = 0;
  std::uint64_t budget = static_cast<std::uint64_t>(100 * luby(2, restart));
  std::uint64_t since_restart = 0;
  std::uint64_t ticks = 0;
  for (;;) {
    if ((++ticks & 255u) == 0 && clock::now() > deadline) {
      backtrack(0);
      return SatResult::Unknown;
    }
    const int conflict = propagate();
    if (conflict >= 0) {
      ++conflicts_;
      ++since_restart;
      if (trail_lim_.empty()) {
        inconsistent_ = true;
        return SatResult::Unsat;
      }
      int back_level = 0;
      analyze(conflict, learnt, back_level);
      backtrack(back_level);
      if (learnt.size() == 1) {
        enqueue(learnt[0], -1);
      } else {
        const int ci = attach(learnt, true);
        enqueue(learnt[0], ci);
      }
      continue;
    }
    if (since_restart >= budget) {
      backtrack(0);
      since_restart = 0;
      budget = static_cast<std::uint64_t>(100 * luby(2, ++restart));
    }
    const int v = pick_branch();
    if (v == 0) return SatResult::Sat;
    ++decisions_;
    trail_lim_.push_back(trail_.size());
    enqueue(phase_[v] ? 2u * v : 2u * v + 1u, -1);
  }
}

void SatSolver::write_dimacs(std::ostream& os) const {
  os << "p cnf " << num_vars() << ' ' << original_.size() << '\n';
  for (const auto& c : original_) {
    for (Lit l : c) os << l << ' ';
    os << "0\n";
  }
}

}  // namespace tjgen
