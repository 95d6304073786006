#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string_view>

#include "ccppm/sampler.hpp"

namespace ccppm {

// Draw matrices on disk.
//  Binary: 8-byte magic "CCPPPM01", then little-endian uint64 n_save, L, T,
//          then the row-major n_save x L x T payload (uint8 for c, float64
//          for p).
//  Csv:    long format with header draw,series,time,value; draw and series
//          are 0-based, time is the 1-based indicator index t (c_t = 1 means
//          time t + 1 starts a block).
enum class DrawFormat { Binary, Csv };

DrawFormat parse_draw_format(std::string_view name);
std::string_view to_string(DrawFormat f);

inline constexpr char kChainsMagic[8] = {'C', 'C', 'P', 'P', 'P', 'M', '0', '1'};

// Writes meta.json, data.csv, c_draws.*, p_draws.*, loglik.csv and
// acceptance.csv into `dir` (created if needed). `run_config` is stored
// verbatim under "run_config" in meta.json.
void write_chains(const std::filesystem::path& dir, const Chains& chains, DrawFormat format,
                  const nlohmann::json& run_config = nlohmann::json::object());

// Inverse of write_chains; every numeric value round-trips exactly.
Chains read_chains(const std::filesystem::path& dir);
nlohmann::json read_meta(const std::filesystem::path& dir);

nlohmann::json to_json(const MargLikParams& p);
MargLikParams marglik_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TPriorParams& p);
TPriorParams tprior_from_json(const nlohmann::json& j);
nlohmann::json to_json(const McmcConfig& c);

}  // namespace ccppm
