#include <algorithm>
#include <cmath>
#include <numeric>

#include "tjgen/error.hpp"
#include "tjgen/insert.hpp"

namespace tjgen {

TrojanFeatureRow trojan_feature_vector(const Netlist& n, NetId net, std::size_t vectors, std::uint64_t seed) {
  const FeatureTable ft = extract_features(n, {.vectors = vectors, .seed = seed, .structural = false});
  std::vector<TrojanFeatureRow> cols;
  cols.reserve(ft.rows.size());
  for (const auto& row : ft.rows) cols.push_back(trojan_columns(row));
  return MinMaxScaler::fit<TrojanFeatureRow>(cols).apply(cols[net]);
}

VirtualTrojan build_virtual(const Netlist& host, const TrojanTemplate& t, const Binding& b,
                            const VirtualOptions& options) {
  const BoundTrojan bound = bind_template(host, t, b, options.bind);
  VirtualTrojan v;
  v.binding = b;
  v.features = trojan_feature_vector(bound.netlist, bound.netlist.net_id(bound.final_trigger_net), options.vectors,
                                     options.seed);
  v.valid = true;
  return v;
}

double weighted_distance(const TrojanFeatureRow& a, std::span<const double> reference,
                         const std::array<double, kTrojanFeatureCount>& weights) {
  if (reference.size() != kTrojanFeatureCount) {
    throw Error(ErrorCode::DimensionMismatch, "reference has " + std::to_string(reference.size()) + " features");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < kTrojanFeatureCount; ++i) {
    const double d = a[i] - reference[i];
    s += weights[i] * d * d;
  }
  return std::sqrt(s);
}

std::vector<std::size_t> rank_pool(std::vector<VirtualTrojan>& pool, std::span<const double> reference,
                                   const std::array<double, kTrojanFeatureCount>& weights) {
  if (pool.empty()) throw Error(ErrorCode::PoolEmpty, "no valid virtual Trojans to rank");
  bool any = false;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "feature weights must be >= 0");
    any |= w > 0.0;
  }
  if (!any) throw Error(ErrorCode::InvalidArgument, "feature weights are all zero");
  for (auto& v : pool) v.distance = weighted_distance(v.features, reference, weights);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pool[a].distance != pool[b].distance) return pool[a].distance < pool[b].distance;
    if (pool[a].binding.trigger_nets != pool[b].binding.trigger_nets) {
      return pool[a].binding.trigger_nets < pool[b].binding.trigger_nets;
    }
    return pool[a].binding.payload_net < pool[b].binding.payload_net;
  });
  return order;
}

}  // namespace tjgen
