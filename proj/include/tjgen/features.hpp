#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tjgen/netlist.hpp"
#include "tjgen/rng.hpp"

namespace tjgen {

inline constexpr std::size_t kNetFeatureCount = 14;
inline constexpr std::size_t kTrojanFeatureCount = 5;
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();
inline constexpr double kScoapCap = 1e6;

/// Column order of a net feature row.
enum NetFeature : std::size_t {
  kSignalProbability,
  kToggleRate,
  kEntropy,
  kCc0,
  kCc1,
  kCo,
  kDistPi,
  kDistPo,
  kFaninImm,
  kFanoutImm,
  kFaninNbr,
  kFanoutNbr,
  kDistFfIn,
  kDistFfOut,
};

/// The five functional columns that characterize a final trigger wire, in
/// order: probability, activity, control-to-1, control-to-0, observability.
inline constexpr std::array<NetFeature, kTrojanFeatureCount> kTrojanColumns = {
    kSignalProbability, kToggleRate, kCc1, kCc0, kCo};

using NetFeatureRow = std::array<double, kNetFeatureCount>;
using TrojanFeatureRow = std::array<double, kTrojanFeatureCount>;

std::span<const std::string_view> net_feature_names();
std::span<const std::string_view> trojan_feature_names();

TrojanFeatureRow trojan_columns(const NetFeatureRow& row);

// --- simulation -------------------------------------------------------------

/// Bit-parallel evaluator over the scan-cut view: one 64-bit word per net,
/// each bit an independent pattern.
class Simulator {
 public:
  explicit Simulator(const Netlist& n);

  /// Sets constant nets and evaluates combinational cells in topological order.
  /// Source nets (primary inputs, DFF outputs) must already hold their words.
  void evaluate(std::span<std::uint64_t> values) const;

 private:
  struct Op {
    CellKind kind;
    NetId out;
    std::uint32_t first;
  };
  std::vector<Op> ops_;
  std::vector<NetId> operands_;
  std::vector<NetId> const0_, const1_;
};

/// Independent uniform random words per source. Streams are keyed by the
/// primary-input name or DFF instance name, so a netlist with extra logic
/// spliced in sees identical stimulus on the nets it shares with its host.
class StimulusSource {
 public:
  StimulusSource(const Netlist& n, std::uint64_t seed);
  /// Writes the next word of every source stream into `values`.
  void fill(std::span<std::uint64_t> values);
  std::span<const NetId> nets() const { return nets_; }

 private:
  std::vector<NetId> nets_;
  std::vector<Rng> streams_;
};

std::uint64_t source_stream_seed(std::uint64_t seed, std::string_view key);
std::string pi_stream_key(std::string_view net);
std::string dff_stream_key(std::string_view instance);

struct SignalStats {
  double probability = 0.0;  // fraction of patterns at logic 1
  double toggle_rate = 0.0;  // transitions / (patterns - 1)
};

/// Random-pattern simulation of the scan-cut view; consecutive patterns form
/// the time series for toggle rate.
std::vector<SignalStats> simulate(const Netlist& n, std::size_t vectors, std::uint64_t seed);

// --- SCOAP ------------------------------------------------------------------

struct ScoapValues {
  double cc0 = 1;
  double cc1 = 1;
  double co = 0;
};

/// Combinational SCOAP under full scan, saturating at kScoapCap.
std::vector<ScoapValues> scoap(const Netlist& n);

// --- entropy ----------------------------------------------------------------

/// Truth-table entropy in bits. Throws SequentialCell for DFF.
double entropy(const CellKind& kind);
/// Entropy of the net's driver; primary inputs and DFF outputs count as an
/// identity function (1 bit), constants as 0.
double net_entropy(const Netlist& n, NetId net);

// --- structure --------------------------------------------------------------

struct StructuralFeatures {
  double dist_pi = kUnreachable;
  double dist_po = kUnreachable;
  double dist_ff_in = kUnreachable;
  double dist_ff_out = kUnreachable;
  double fanin_imm = 0;
  double fanout_imm = 0;
  double fanin_nbr = 0;
  double fanout_nbr = 0;
};

/// Cell-hop distances by breadth-first search over data pins (DFF clock and
/// reset pins are not traversed), and depth-1/depth-2 pin counts.
std::vector<StructuralFeatures> structural_features(const Netlist& n);

// --- extraction -------------------------------------------------------------

struct FeatureOptions {
  std::size_t vectors = 100000;
  std::uint64_t seed = 1;
  bool structural = true;  // false leaves structural columns at zero
};

struct FeatureTable {
  std::vector<NetFeatureRow> rows;  // indexed by NetId
};

FeatureTable extract_features(const Netlist& n, const FeatureOptions& options = {});

/// Per-feature min-max scaling to [0, 1]. Unreachable (infinite) entries are
/// clamped to the largest finite value seen for that feature.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(std::vector<double> lo, std::vector<double> hi);

  template <class Row>
  static MinMaxScaler fit(std::span<const Row> rows);

  std::size_t dims() const { return lo_.size(); }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }

  double apply(std::size_t feature, double x) const;
  template <class Row>
  Row apply(const Row& row) const {
    Row out = row;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply(i, row[i]);
    return out;
  }

 private:
  std::vector<double> lo_, hi_;
};

template <class Row>
MinMaxScaler MinMaxScaler::fit(std::span<const Row> rows) {
  if (rows.empty()) return {};
  const std::size_t d = rows.front().size();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const Row& r : rows) {
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(r[i])) continue;
      lo[i] = std::min(lo[i], r[i]);
      hi[i] = std::max(hi[i], r[i]);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (!std::isfinite(lo[i])) lo[i] = hi[i] = 0.0;  // column was all unreachable
  }
  return MinMaxScaler(std::move(lo), std::move(hi));
}

std::vector<NetFeatureRow> scale_rows(const MinMaxScaler& s, std::span<const NetFeatureRow> rows);

/// One row per net, net name first, 6 significant digits; unreachable as `inf`.
void write_features_csv(std::ostream& os, const Netlist& n, const FeatureTable& t);
/// Same content as JSON; unreachable distances are `null`.
void write_features_json(std::ostream& os, const Netlist& n, const FeatureTable& t);

}  // namespace tjgen
