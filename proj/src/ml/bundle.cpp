#include <fstream>
#include <sstream>

#include "json.hpp"

#include "tjgen/bundle.hpp"
#include "tjgen/error.hpp"

namespace tjgen {
namespace {

using json = nlohmann::ordered_json;

json forest_json(const Forest& f) {
  json trees = json::array();
  for (const DecisionTree& t : f.trees()) {
    // Columnar node arrays keep the file compact.
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         p = json::array();
    for (const TreeNode& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      p.push_back(n.p_pos);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"p_pos", p}});
  }
  return {{"n_features", f.n_features()},
          {"class_weights", {f.class_weights()[0], f.class_weights()[1]}},
          {"trees", std::move(trees)}};
}

Forest forest_from(const json& j) {
  std::vector<DecisionTree> trees;
  const std::size_t d = j.at("n_features").get<std::size_t>();
  for (const json& t : j.at("trees")) {
    DecisionTree tree;
    const auto& feature = t.at("feature");
    const std::size_t count = feature.size();
    for (const char* key : {"threshold", "left", "right", "p_pos"}) {
      if (t.at(key).size() != count) throw Error(ErrorCode::Schema, "tree arrays differ in length");
    }
    for (std::size_t i = 0; i < count; ++i) {
      TreeNode n;
      n.feature = feature[i].get<int>();
      n.threshold = t["threshold"][i].get<double>();
      n.left = t["left"][i].get<int>();
      n.right = t["right"][i].get<int>();
      n.p_pos = t["p_pos"][i].get<double>();
      const bool leaf = n.feature < 0;
      const auto in_range = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(count); };
      if (!leaf && (n.feature >= static_cast<int>(d) || !in_range(n.left) || !in_range(n.right))) {
        throw Error(ErrorCode::Schema, "malformed tree node");
      }
      tree.nodes.push_back(n);
    }
    if (tree.nodes.empty()) throw Error(ErrorCode::Schema, "empty tree");
    trees.push_back(std::move(tree));
  }
  const auto cw = j.at("class_weights").get<std::vector<double>>();
  if (cw.size() != 2) throw Error(ErrorCode::Schema, "class_weights must have two entries");
  return Forest(d, {cw[0], cw[1]}, std::move(trees));
}

json mixture_json(const Mixture& m) {
  json comps = json::array();
  for (const MixtureComponent& c : m.components) {
    comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"var", c.var}});
  }
  return {{"bic", m.bic}, {"components", std::move(comps)}};
}

Mixture mixture_from(const json& j) {
  Mixture m;
  m.bic = j.at("bic").get<double>();
  for (const json& c : j.at("components")) {
    MixtureComponent mc;
    mc.weight = c.at("weight").get<double>();
    mc.mean = c.at("mean").get<std::vector<double>>();
    mc.var = c.at("var").get<std::vector<double>>();
    if (mc.mean.size() != mc.var.size()) throw Error(ErrorCode::Schema, "mixture mean/var length differ");
    m.components.push_back(std::move(mc));
  }
  return m;
}

}  // namespace

Sample mask_row(const NetFeatureRow& row, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != kNetFeatureCount) throw Error(ErrorCode::DimensionMismatch, "feature mask length");
  Sample out;
  for (std::size_t i = 0; i < kNetFeatureCount; ++i) {
    if (mask[i]) out.push_back(row[i]);
  }
  return out;
}

std::vector<std::uint8_t> functional_mask() {
  std::vector<std::uint8_t> m(kNetFeatureCount, 0);
  for (NetFeature f : {kSignalProbability, kToggleRate, kEntropy, kCc0, kCc1, kCo}) m[f] = 1;
  return m;
}

std::string bundle_to_json(const ModelBundle& b) {
  json j;
  j["schema"] = ModelBundle::kSchema;
  j["version"] = ModelBundle::kVersion;
  j["template_id"] = b.template_id;
  j["cluster_id"] = b.cluster_id;
  j["net_features"] = std::vector<std::string>(net_feature_names().begin(), net_feature_names().end());
  j["trojan_features"] = std::vector<std::string>(trojan_feature_names().begin(), trojan_feature_names().end());
  j["feature_mask"] = b.feature_mask;
  j["scaling"] = "per-design-minmax";
  j["training_trojans"] = b.training_trojans;
  j["exemplar"] = b.exemplar;
  j["trigger_model"] = forest_json(b.trigger_model);
  j["payload_model"] = forest_json(b.payload_model);
  j["trojan_model"] = mixture_json(b.trojan_model);
  return j.dump() + "\n";
}

ModelBundle bundle_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("bundle is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("schema").get<std::string>() != ModelBundle::kSchema) throw Error(ErrorCode::Schema, "not a model bundle");
    if (j.at("version").get<int>() != ModelBundle::kVersion) {
      throw Error(ErrorCode::Schema, "unsupported bundle version " + j["version"].dump());
    }
    const auto names = j.at("net_features").get<std::vector<std::string>>();
    const auto tnames = j.at("trojan_features").get<std::vector<std::string>>();
    if (!std::equal(names.begin(), names.end(), net_feature_names().begin(), net_feature_names().end()) ||
        !std::equal(tnames.begin(), tnames.end(), trojan_feature_names().begin(), trojan_feature_names().end())) {
      throw Error(ErrorCode::Schema, "feature layout differs from this build");
    }
    ModelBundle b;
    b.template_id = j.at("template_id").get<std::string>();
    b.cluster_id = j.at("cluster_id").get<int>();
    b.feature_mask = j.at("feature_mask").get<std::vector<std::uint8_t>>();
    if (b.feature_mask.size() != kNetFeatureCount) throw Error(ErrorCode::Schema, "feature_mask length");
    b.training_trojans = j.at("training_trojans").get<std::size_t>();
    b.exemplar = j.at("exemplar").get<std::vector<double>>();
    b.trigger_model = forest_from(j.at("trigger_model"));
    b.payload_model = forest_from(j.at("payload_model"));
    b.trojan_model = mixture_from(j.at("trojan_model"));
    std::size_t used = 0;
    for (auto m : b.feature_mask) used += m != 0;
    if (b.trigger_model.n_features() != used || b.payload_model.n_features() != used) {
      throw Error(ErrorCode::Schema, "classifier width does not match feature_mask");
    }
    if (b.trojan_model.dims() != kTrojanFeatureCount) throw Error(ErrorCode::Schema, "trojan model must be 5-D");
    return b;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("malformed bundle: ") + e.what());
  }
}

void save_bundle(const ModelBundle& b, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
  os << bundle_to_json(b);
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return bundle_from_json(ss.str());
}

}  // namespace tjgen
