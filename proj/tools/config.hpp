#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

namespace ccppm::cli {

using nlohmann::json;

// Every key the CLI understands, with its default value.
json default_config();

// TOML or JSON by extension. A chains meta.json is accepted too: its
// "run_config" echo is returned.
json load_config_file(const std::filesystem::path& path);

json toml_to_json(std::string_view toml_text, const std::string& source);

// Dotted-path access; `set_path` creates intermediate objects.
void set_path(json& root, std::string_view dotted, json value);
const json* find_path(const json& root, std::string_view dotted);

// "key.path=value"; value parsed as JSON when possible, else a string.
void apply_assignment(json& root, std::string_view assignment);

// Defaults, then the file (if any), then overrides; unknown top-level
// sections are rejected.
json resolve_config(const json& file_config, const json& overrides);

template <class T>
T get(const json& root, std::string_view dotted) {
  const json* node = find_path(root, dotted);
  if (!node || node->is_null()) throw std::out_of_range(std::string(dotted));
  return node->get<T>();
}

}  // namespace ccppm::cli
