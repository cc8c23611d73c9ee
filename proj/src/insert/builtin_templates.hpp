#pragma once

#include <array>
#include <string_view>

namespace tjgen::detail {

struct BuiltinTemplateText {
  std::string_view id;
  std::string_view verilog;
  std::string_view sidecar;
};

extern const std::array<BuiltinTemplateText, 4> kBuiltinTemplates;

}  // namespace tjgen::detail
