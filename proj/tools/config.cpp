#include "config.hpp"

#include <fstream>
#include <sstream>
#include <toml.hpp>

#include "ccppm/error.hpp"

namespace ccppm::cli {
namespace fs = std::filesystem;

namespace {

json node_to_json(const toml::node& node) {
  if (auto t = node.as_table()) {
    json out = json::object();
    for (const auto& [k, v] : *t) out[std::string(k.str())] = node_to_json(v);
    return out;
  }
  if (auto a = node.as_array()) {
    json out = json::array();
    for (const auto& v : *a) out.push_back(node_to_json(v));
    return out;
  }
  if (auto v = node.as_string()) return v->get();
  if (auto v = node.as_integer()) return v->get();
  if (auto v = node.as_floating_point()) return v->get();
  if (auto v = node.as_boolean()) return v->get();
  throw ConfigError("unsupported TOML value type (dates and times are not config values)");
}

void check_known(const json& defaults, const json& cfg) {
  static const char* optional_sections[] = {"marglik", "tprior", "beta_prior"};
  for (const auto& [key, value] : cfg.items()) {
    bool known = defaults.contains(key);
    for (const char* s : optional_sections) known = known || key == s;
    if (!known) throw ConfigError("unknown config section '" + key + "'");
    if (defaults.contains(key) && defaults[key].is_object()) {
      if (!value.is_object()) throw ConfigError("config section '" + key + "' must be a table");
      for (const auto& [sub, unused] : value.items()) {
        if (!defaults[key].contains(sub)) throw ConfigError("unknown config key '" + key + "." + sub + "'");
      }
    }
  }
}

}  // namespace

json default_config() {
  return json{
      {"input",
       {{"paths", json::array()},
        {"layout", "wide"},
        {"date_format", "iso"},
        {"date_column", "date"},
        {"series_column", "series"},
        {"value_column", "value"},
        {"series", json::array()},
        {"mode", "returns"}}},
      {"tuning", {{"max_lag", 50}, {"r0", 0.5}, {"nu0", 3.0}, {"mean_clusters", nullptr}, {"var_clusters", nullptr}}},
      {"mcmc", {{"n_burn", 10000}, {"n_thin", 10}, {"n_save", 2000}, {"rw_sd", 0.005}, {"seed", 1}}},
      {"output", {{"dir", ""}, {"draw_format", "binary"}}},
      {"loss", {{"a", 25.0}, {"b", 1.0}}},
      {"summarize", {{"threshold", 0.5}, {"truth", ""}}},
      {"simulate",
       {{"scenario", "type2"},
        {"replicates", 20},
        {"seed", 1},
        {"methods", json::array({"ccp_ppm", "indep_ppm"})},
        {"sigma_is_sd", true},
        {"generate_only", false},
        {"threads", 0}}},
  };
}

json toml_to_json(std::string_view text, const std::string& source) {
  try {
    return node_to_json(toml::parse(text, source));
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(msg.str());
  }
}

json load_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto ext = path.extension().string();
  json cfg;
  if (ext == ".toml") {
    cfg = toml_to_json(text, path.string());
  } else if (ext == ".json") {
    try {
      cfg = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    if (cfg.contains("run_config")) cfg = cfg["run_config"];
  } else {
    throw ConfigError("config must be .toml or .json: " + path.string());
  }
  if (!cfg.is_object()) throw ConfigError(path.string() + ": top level must be a table");
  return cfg;
}

void set_path(json& root, std::string_view dotted, json value) {
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted.find('.', start);
    const std::string key(dotted.substr(start, dot == std::string_view::npos ? dotted.npos : dot - start));
    if (key.empty()) throw ConfigError("bad config key '" + std::string(dotted) + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string_view::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

const json* find_path(const json& root, std::string_view dotted) {
  const json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted.find('.', start);
    const std::string key(dotted.substr(start, dot == std::string_view::npos ? dotted.npos : dot - start));
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string_view::npos) return node;
    start = dot + 1;
  }
}

void apply_assignment(json& root, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  }
  const std::string value(assignment.substr(eq + 1));
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;
  set_path(root, assignment.substr(0, eq), std::move(parsed));
}

json resolve_config(const json& file_config, const json& overrides) {
  json cfg = default_config();
  check_known(cfg, file_config);
  check_known(cfg, overrides);
  cfg.merge_patch(file_config);
  // merge_patch treats null as deletion; overrides never carry nulls.
  cfg.merge_patch(overrides);
  for (const auto& [key, value] : default_config().items()) {
    if (!cfg.contains(key)) cfg[key] = value;
    for (const auto& [sub, dv] : value.items()) {
      if (!cfg[key].contains(sub)) cfg[key][sub] = dv;
    }
  }
  return cfg;
}

}  // namespace ccppm::cli
