#pragma once

#include <string_view>
#include <vector>

namespace mvsim::cli {

struct Preset {
  std::string_view id;
  std::string_view description;
  std::string_view text;  // config file contents
};

/// Built-in presets in listing order.
const std::vector<Preset>& presets();
const Preset* find_preset(std::string_view id);

}  // namespace mvsim::cli
