#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tjgen/features.hpp"
#include "tjgen/ml.hpp"

namespace tjgen {

/// Everything needed to insert Trojans of one learned class: the trigger and
/// payload classifiers, the generative model of final-trigger features, and
/// the feature schema they were trained on.
struct ModelBundle {
  static constexpr std::string_view kSchema = "tjgen.bundle";
  static constexpr int kVersion = 1;

  std::string template_id;
  int cluster_id = 0;
  std::vector<std::uint8_t> feature_mask = std::vector<std::uint8_t>(kNetFeatureCount, 1);
  Forest trigger_model;
  Forest payload_model;
  Mixture trojan_model;
  std::vector<double> exemplar;  // scaled Trojan features of the cluster exemplar
  std::size_t training_trojans = 0;
};

/// Keeps the columns selected by `mask` (one flag per net feature).
Sample mask_row(const NetFeatureRow& row, const std::vector<std::uint8_t>& mask);
/// Mask keeping only the six functional features.
std::vector<std::uint8_t> functional_mask();

std::string bundle_to_json(const ModelBundle& b);
/// Throws Schema on a wrong schema tag, version or feature layout.
ModelBundle bundle_from_json(std::string_view text);

void save_bundle(const ModelBundle& b, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace tjgen
