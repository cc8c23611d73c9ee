#include <cstdio>

#include "json.hpp"

#include "tjgen/error.hpp"
#include "tjgen/features.hpp"

namespace tjgen {
namespace {

constexpr std::array<std::string_view, kNetFeatureCount> kNetNames = {
    "signal_probability", "toggle_rate", "entropy",   "cc0",        "cc1",
    "co",                 "dist_pi",     "dist_po",   "fanin_imm",  "fanout_imm",
    "fanin_nbr",          "fanout_nbr",  "dist_ff_in", "dist_ff_out"};

constexpr std::array<std::string_view, kTrojanFeatureCount> kTrojanNames = {
    "probability", "activity", "cc1", "cc0", "co"};

std::string format_value(double x) {
  if (std::isinf(x)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

std::span<const std::string_view> net_feature_names() { return kNetNames; }
std::span<const std::string_view> trojan_feature_names() { return kTrojanNames; }

TrojanFeatureRow trojan_columns(const NetFeatureRow& row) {
  TrojanFeatureRow out{};
  for (std::size_t i = 0; i < kTrojanFeatureCount; ++i) out[i] = row[kTrojanColumns[i]];
  return out;
}

double entropy(const CellKind& kind) {
  const auto table = kind.truth_table();
  std::size_t ones = 0;
  for (bool b : table) ones += b;
  const double p1 = static_cast<double>(ones) / static_cast<double>(table.size());
  const double p0 = 1.0 - p1;
  double e = 0.0;
  if (p1 > 0) e -= p1 * std::log2(p1);
  if (p0 > 0) e -= p0 * std::log2(p0);
  return e;
}

double net_entropy(const Netlist& n, NetId id) {
  const Net& net = n.net(id);
  switch (net.driver_kind) {
    case DriverKind::Const0:
    case DriverKind::Const1:
      return 0.0;
    case DriverKind::PrimaryInput:
      return 1.0;
    case DriverKind::Cell:
      break;
  }
  const CellKind& k = n.cell(net.driver).kind;
  return k.is_sequential() ? 1.0 : entropy(k);
}

FeatureTable extract_features(const Netlist& n, const FeatureOptions& options) {
  const std::size_t count = n.nets().size();
  FeatureTable t;
  t.rows.assign(count, NetFeatureRow{});
  const auto stats = simulate(n, options.vectors, options.seed);
  const auto sc = scoap(n);
  for (NetId id = 0; id < count; ++id) {
    NetFeatureRow& r = t.rows[id];
    r[kSignalProbability] = stats[id].probability;
    r[kToggleRate] = stats[id].toggle_rate;
    r[kEntropy] = net_entropy(n, id);
    r[kCc0] = sc[id].cc0;
    r[kCc1] = sc[id].cc1;
    r[kCo] = sc[id].co;
  }
  if (options.structural) {
    const auto st = structural_features(n);
    for (NetId id = 0; id < count; ++id) {
      NetFeatureRow& r = t.rows[id];
      r[kDistPi] = st[id].dist_pi;
      r[kDistPo] = st[id].dist_po;
      r[kFaninImm] = st[id].fanin_imm;
      r[kFanoutImm] = st[id].fanout_imm;
      r[kFaninNbr] = st[id].fanin_nbr;
      r[kFanoutNbr] = st[id].fanout_nbr;
      r[kDistFfIn] = st[id].dist_ff_in;
      r[kDistFfOut] = st[id].dist_ff_out;
    }
  }
  return t;
}

MinMaxScaler::MinMaxScaler(std::vector<double> lo, std::vector<double> hi)
    : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size()) throw Error(ErrorCode::DimensionMismatch, "scaler bounds differ in length");
}

double MinMaxScaler::apply(std::size_t feature, double x) const {
  if (feature >= lo_.size()) throw Error(ErrorCode::DimensionMismatch, "feature index out of range");
  const double lo = lo_[feature], hi = hi_[feature];
  if (hi <= lo) return 0.0;
  if (std::isnan(x)) return 0.0;
  x = std::clamp(x, lo, hi);  // also maps +inf to the finite max
  return (x - lo) / (hi - lo);
}

std::vector<NetFeatureRow> scale_rows(const MinMaxScaler& s, std::span<const NetFeatureRow> rows) {
  std::vector<NetFeatureRow> out;
  out.reserve(rows.size());
  for (const NetFeatureRow& r : rows) out.push_back(s.apply(r));
  return out;
}

void write_features_csv(std::ostream& os, const Netlist& n, const FeatureTable& t) {
  os << "net";
  for (auto name : kNetNames) os << ',' << name;
  os << '\n';
  for (NetId id = 0; id < t.rows.size(); ++id) {
    os << n.net(id).name;
    for (double x : t.rows[id]) os << ',' << format_value(x);
    os << '\n';
  }
}

void write_features_json(std::ostream& os, const Netlist& n, const FeatureTable& t) {
  nlohmann::ordered_json doc;
  doc["columns"] = std::vector<std::string>(kNetNames.begin(), kNetNames.end());
  auto& rows = doc["nets"] = nlohmann::ordered_json::array();
  for (NetId id = 0; id < t.rows.size(); ++id) {
    nlohmann::ordered_json row;
    row["net"] = n.net(id).name;
    for (std::size_t i = 0; i < kNetFeatureCount; ++i) {
      const double x = t.rows[id][i];
      if (std::isinf(x)) {
        row[std::string(kNetNames[i])] = nullptr;
      } else {
        row[std::string(kNetNames[i])] = std::stod(format_value(x));
      }
    }
    rows.push_back(std::move(row));
  }
  os << doc.dump(2) << '\n';
}

}  // namespace tjgen
