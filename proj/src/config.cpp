#include "dumbo/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "dumbo/error.hpp"

namespace dumbo {

namespace {

struct Value {
  std::vector<std::string> items;
  bool is_list = false;
  std::string key;

  const std::string& scalar() const {
    if (is_list || items.size() != 1)
      throw Error(ErrorCode::ParseError, fmt::format("'{}' expects a single value", key));
    return items.front();
  }
};

double to_double(const Value& v) {
  const auto& s = v.scalar();
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ParseError, fmt::format("'{}' expects a number, got '{}'", v.key, s));
}

std::uint64_t to_uint(const std::string& s, const std::string& key) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::ParseError, fmt::format("'{}' expects a non-negative integer, got '{}'", key, s));
  return out;
}

std::size_t to_size(const Value& v) { return static_cast<std::size_t>(to_uint(v.scalar(), v.key)); }

bool to_bool(const Value& v) {
  const auto& s = v.scalar();
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw Error(ErrorCode::ParseError, fmt::format("'{}' expects true or false, got '{}'", v.key, s));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const Value&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"benchmark", [](RunConfig& c, const Value& v) { c.benchmark = v.scalar(); }},
      {"variant", [](RunConfig& c, const Value& v) { c.variant_name = v.scalar(); }},
      {"budget", [](RunConfig& c, const Value& v) { c.bo.budget = to_size(v); }},
      {"seeds",
       [](RunConfig& c, const Value& v) {
         c.seeds.clear();
         for (const auto& s : v.items) c.seeds.push_back(to_uint(s, v.key));
       }},
      {"jobs", [](RunConfig& c, const Value& v) { c.jobs = to_size(v); }},
      {"out", [](RunConfig& c, const Value& v) { c.out_dir = v.scalar(); }},
      {"init_points", [](RunConfig& c, const Value& v) { c.bo.init_points = to_size(v); }},
      {"objective.noise_std", [](RunConfig& c, const Value& v) { c.bo.noise_std = to_double(v); }},
      {"acquisition.delta", [](RunConfig& c, const Value& v) { c.bo.acquisition.delta = to_double(v); }},
      {"acquisition.effective_cardinality",
       [](RunConfig& c, const Value& v) { c.bo.acquisition.effective_cardinality = to_double(v); }},
      {"acquisition.v_minus",
       [](RunConfig& c, const Value& v) {
         c.bo.acquisition.v_minus.clear();
         for (const auto& s : v.items) c.bo.acquisition.v_minus.push_back(to_double(Value{{s}, false, v.key}));
       }},
      {"acquisition.probe_points", [](RunConfig& c, const Value& v) { c.bo.acquisition.probe_points = to_size(v); }},
      {"admm.eta", [](RunConfig& c, const Value& v) { c.bo.admm.eta = to_double(v); }},
      {"admm.max_iterations", [](RunConfig& c, const Value& v) { c.bo.admm.max_iterations = to_size(v); }},
      {"admm.primal_tolerance", [](RunConfig& c, const Value& v) { c.bo.admm.primal_tolerance = to_double(v); }},
      {"admm.dual_tolerance", [](RunConfig& c, const Value& v) { c.bo.admm.dual_tolerance = to_double(v); }},
      {"admm.inner_steps", [](RunConfig& c, const Value& v) { c.bo.admm.inner_steps = to_size(v); }},
      {"admm.inner_step_size", [](RunConfig& c, const Value& v) { c.bo.admm.inner_step_size = to_double(v); }},
      {"admm.restarts", [](RunConfig& c, const Value& v) { c.bo.admm.restarts = to_size(v); }},
      {"admm.mode", [](RunConfig& c, const Value& v) { c.bo.admm.mode = parse_admm_mode(v.scalar()); }},
      {"admm.update_order",
       [](RunConfig& c, const Value& v) { c.bo.admm.update_order = parse_update_order(v.scalar()); }},
      {"mcmc.k", [](RunConfig& c, const Value& v) { c.bo.mcmc.k = to_size(v); }},
      {"mcmc.steps_per_candidate",
       [](RunConfig& c, const Value& v) { c.bo.mcmc.steps_per_candidate = to_size(v); }},
      {"mcmc.seed", [](RunConfig& c, const Value& v) { c.bo.mcmc.seed = to_uint(v.scalar(), v.key); }},
      {"mcmc.weighted", [](RunConfig& c, const Value& v) { c.bo.mcmc.weighted = to_bool(v); }},
      {"kernel.family", [](RunConfig& c, const Value& v) { c.bo.kernel.family = parse_kernel_family(v.scalar()); }},
      {"kernel.fit_every", [](RunConfig& c, const Value& v) { c.bo.kernel.fit_every = to_size(v); }},
      {"kernel.lengthscale",
       [](RunConfig& c, const Value& v) {
         c.bo.kernel.lengthscale.clear();
         for (const auto& s : v.items) c.bo.kernel.lengthscale.push_back(to_double(Value{{s}, false, v.key}));
       }},
      {"kernel.signal_variance", [](RunConfig& c, const Value& v) { c.bo.kernel.signal_variance = to_double(v); }},
      {"kernel.fit_restarts", [](RunConfig& c, const Value& v) { c.bo.kernel.fit_restarts = to_size(v); }},
  };
  return table;
}

void flatten(const YAML::Node& node, const std::string& prefix, std::vector<Value>& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      flatten(kv.second, prefix.empty() ? key : prefix + "." + key, out);
    }
  } else if (node.IsSequence()) {
    Value v{{}, true, prefix};
    for (const auto& item : node) {
      if (!item.IsScalar()) throw Error(ErrorCode::ParseError, fmt::format("'{}' must be a flat list", prefix));
      v.items.push_back(item.as<std::string>());
    }
    out.push_back(std::move(v));
  } else if (node.IsScalar()) {
    out.push_back(Value{{node.as<std::string>()}, false, prefix});
  } else if (node.IsNull()) {
    throw Error(ErrorCode::ParseError, fmt::format("'{}' has no value", prefix));
  }
}

// List-valued keys accept "a,b,c" in overrides.
bool list_key(const std::string& key) {
  return key == "seeds" || key == "acquisition.v_minus" || key == "kernel.lengthscale";
}

RunConfig build(const YAML::Node& root, const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::vector<Value> values;
  if (root && !root.IsNull()) {
    if (!root.IsMap()) throw Error(ErrorCode::ParseError, "config must be a key-value mapping");
    flatten(root, "", values);
  }
  for (const auto& [key, text] : overrides) {
    if (list_key(key)) values.push_back(Value{split_list(text), true, key});
    else values.push_back(Value{{text}, false, key});
  }
  RunConfig cfg;
  bool mode_set = false;
  for (const auto& v : values) {
    auto it = setters().find(v.key);
    if (it == setters().end()) throw Error(ErrorCode::UnknownKey, fmt::format("unknown config key '{}'", v.key));
    if (!list_key(v.key) && v.is_list)
      throw Error(ErrorCode::ParseError, fmt::format("'{}' expects a single value", v.key));
    it->second(cfg, v);
    mode_set = mode_set || v.key == "admm.mode";
  }
  cfg.variant = Variant::parse(cfg.variant_name);
  if (mode_set && cfg.bo.admm.mode != cfg.variant.admm_mode)
    throw Error(ErrorCode::IncompatibleVariant,
                fmt::format("admm.mode disagrees with variant '{}'", cfg.variant_name));
  cfg.bo.admm.mode = cfg.variant.admm_mode;
  if (cfg.bo.budget < 1) throw Error(ErrorCode::InvalidArgument, "budget must be at least 1");
  if (cfg.seeds.empty()) throw Error(ErrorCode::InvalidArgument, "seed list is empty");
  if (cfg.jobs < 1) cfg.jobs = 1;
  cfg.bo.admm.validate();
  return cfg;
}

YAML::Node load(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::ParseError, fmt::format("line {}: {}", e.mark.line + 1, e.msg));
  }
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

RunConfig parse_config_text(const std::string& yaml,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
  return build(load(yaml), overrides);
}

RunConfig parse_config(const std::string& path, const std::vector<std::pair<std::string, std::string>>& overrides) {
  if (path.empty()) return build(YAML::Node(), overrides);
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot read config '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return build(load(ss.str()), overrides);
}

void validate_config(const RunConfig& config, const ObjectiveRegistry& registry) {
  if (config.benchmark.empty()) throw Error(ErrorCode::InvalidArgument, "no benchmark given");
  const ObjectiveSpec& spec = registry.get(config.benchmark);
  config.variant.validate();
  if (config.variant.source == DecompositionSource::Known && !spec.decomposition)
    throw Error(ErrorCode::IncompatibleVariant,
                fmt::format("{} needs a known decomposition but {} has none", config.variant_name, spec.name));
  if (config.variant.output == OutputMode::Decomposed && !spec.has_factor_outputs())
    throw Error(ErrorCode::IncompatibleVariant,
                fmt::format("{} needs factor outputs but {} is scalar-only", config.variant_name, spec.name));
}

}  // namespace dumbo
