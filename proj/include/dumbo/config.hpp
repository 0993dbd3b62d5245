#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dumbo/bo.hpp"
#include "dumbo/objective.hpp"

namespace dumbo {

struct RunConfig {
  std::string benchmark;
  std::string variant_name = "dumbo";
  Variant variant;
  BoConfig bo;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t jobs = 1;
  std::string out_dir = "out";
};

/// Every key accepted in a config file or as an override.
const std::vector<std::string>& config_keys();

/// Reads nested YAML (empty path: no file), flattens it to dotted keys and
/// applies `overrides` on top. Unknown keys raise UnknownKey; malformed text
/// raises ParseError.
RunConfig parse_config(const std::string& path, const std::vector<std::pair<std::string, std::string>>& overrides = {});
RunConfig parse_config_text(const std::string& yaml,
                            const std::vector<std::pair<std::string, std::string>>& overrides = {});

/// Checks the benchmark exists and supports the variant.
void validate_config(const RunConfig& config, const ObjectiveRegistry& registry);

}  // namespace dumbo
