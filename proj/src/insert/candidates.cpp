#include <algorithm>
#include <set>

#include "tjgen/error.hpp"
#include "tjgen/insert.hpp"

namespace tjgen {
namespace {

std::set<NetId> control_nets(const Netlist& n, const BindOptions& o) {
  std::set<NetId> s;
  if (n.clock_net()) s.insert(*n.clock_net());
  if (n.reset_net()) s.insert(*n.reset_net());
  if (o.clock) {
    if (auto id = n.find_net(*o.clock)) s.insert(*id);
  }
  if (o.reset) {
    if (auto id = n.find_net(*o.reset)) s.insert(*id);
  }
  return s;
}

std::vector<NetId> sorted_by_score(const Netlist& n, std::span<const NetId> eligible, std::span<const double> scores) {
  std::vector<NetId> out(eligible.begin(), eligible.end());
  std::sort(out.begin(), out.end(), [&](NetId a, NetId b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return n.net(a).name < n.net(b).name;
  });
  return out;
}

}  // namespace

std::vector<NetId> trigger_eligible(const Netlist& n, const BindOptions& options) {
  const auto ctl = control_nets(n, options);
  std::vector<NetId> out;
  for (NetId id = 0; id < n.nets().size(); ++id) {
    const Net& net = n.net(id);
    if (net.is_input || net.is_output || net.is_constant() || ctl.contains(id)) continue;
    out.push_back(id);
  }
  return out;
}

std::vector<NetId> payload_eligible(const Netlist& n, const BindOptions& options) {
  const auto ctl = control_nets(n, options);
  std::vector<NetId> out;
  for (NetId id = 0; id < n.nets().size(); ++id) {
    if (n.net(id).driver_kind != DriverKind::Cell || ctl.contains(id)) continue;
    out.push_back(id);
  }
  return out;
}

std::vector<NetId> select_trigger_candidates(const Netlist& n, std::span<const NetId> eligible,
                                             std::span<const double> scores, std::size_t cap) {
  if (eligible.empty()) throw Error(ErrorCode::NoCandidates, "no eligible trigger nets in " + n.module_name());
  std::vector<NetId> out = sorted_by_score(n, eligible, scores);
  if (out.size() > cap) out.resize(cap);
  return out;
}

TriggerSetEnumerator::TriggerSetEnumerator(std::vector<NetId> candidates, std::vector<double> scores, std::size_t r,
                                           bool diversity, std::size_t limit)
    : cand_(std::move(candidates)), score_(std::move(scores)), idx_(r), r_(r), diversity_(diversity), limit_(limit) {
  if (score_.size() != cand_.size()) throw Error(ErrorCode::DimensionMismatch, "one score per candidate");
  if (r_ == 0 || cand_.size() < r_) {
    throw Error(ErrorCode::InsufficientCandidates,
                std::to_string(cand_.size()) + " candidates for " + std::to_string(r_) + " trigger nets");
  }
  next_diff_.assign(cand_.size(), cand_.size());
  for (std::size_t i = cand_.size(); i-- > 0;) {
    if (i + 1 < cand_.size()) next_diff_[i] = score_[i + 1] != score_[i] ? i + 1 : next_diff_[i + 1];
  }
}

bool TriggerSetEnumerator::allowed(std::size_t depth, std::size_t j) const {
  if (!diversity_ || depth == 0) return true;
  const std::size_t prev = idx_[depth - 1];
  if (score_[j] != score_[prev]) return true;
  return next_diff_[prev] == cand_.size();
}

// Places picks depth..r-1 at the smallest admissible indices >= from.
bool TriggerSetEnumerator::fill(std::size_t depth, std::size_t from) {
  for (std::size_t j = from; j + (r_ - depth) <= cand_.size(); ++j) {
    if (!allowed(depth, j)) continue;
    idx_[depth] = j;
    if (depth + 1 == r_ || fill(depth + 1, j + 1)) return true;
  }
  return false;
}

// Next set in lexicographic order that changes one of the first depth+1 picks.
bool TriggerSetEnumerator::advance(std::size_t depth) {
  for (std::size_t d = depth + 1; d-- > 0;) {
    if (fill(d, idx_[d] + 1)) return true;
  }
  return false;
}

std::optional<std::vector<NetId>> TriggerSetEnumerator::next() {
  if (done_ || yielded_ >= limit_) return std::nullopt;
  bool found;
  if (!started_) {
    started_ = true;
    found = fill(0, 0);
  } else {
    found = advance(r_ - 1);
  }
  if (!found) {
    done_ = true;
    return std::nullopt;
  }
  ++yielded_;
  std::vector<NetId> set;
  for (std::size_t i : idx_) set.push_back(cand_[i]);
  return set;
}

void TriggerSetEnumerator::skip_prefix(std::size_t len) {
  if (!started_ || done_) return;
  if (len == 0) {
    done_ = true;
    return;
  }
  // Jump to the last completion of the prefix so the next advance leaves it.
  for (std::size_t d = len; d < r_; ++d) idx_[d] = cand_.size() - (r_ - d);
}

std::vector<NetId> payload_ranking(const Netlist& n, std::span<const NetId> eligible, std::span<const double> scores) {
  return sorted_by_score(n, eligible, scores);
}

NetId pair_payload(const Netlist& n, std::span<const NetId> triggers, std::span<const NetId> ranking,
                   const TopoOrder& order) {
  std::vector<NetId> trig(triggers.begin(), triggers.end());
  int max_level = 0;
  for (NetId t : trig) max_level = std::max(max_level, order.level[t]);
  for (NetId p : ranking) {
    if (order.level[p] <= max_level) continue;
    if (std::find(trig.begin(), trig.end(), p) != trig.end()) continue;
    if (check_no_comb_loop(n, trig, p, order)) return p;
  }
  throw Error(ErrorCode::NoLegalPayload, "no legal payload above level " + std::to_string(max_level));
}

}  // namespace tjgen
