#pragma once

#include "homog/cell/corrector.hpp"
#include "homog/field/multiscale_model.hpp"
#include "homog/sde/exit_time.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace homog {

/// A validated experiment description.
///
/// Config files are JSON objects with the keys
///   command  diffusivity | two-scale | scan | pressure | exit | tail | verify
///   model    inline model {"d", "alpha", "scales"}, a bundled reference
///            {"bundled": name, ...}, or a path to a model file
///   seed     unsigned integer (required unless given on the command line)
///   solver   cell-solver settings
///   sde      exit-time settings (exit, tail)
///   params   command parameters
/// Unknown keys anywhere are rejected. A run manifest is accepted as well;
/// its resolved config is used.
struct ExperimentConfig {
  std::string command;
  nlohmann::json model;   // inline model JSON after resolution (null for verify)
  std::uint64_t seed = 0;
  nlohmann::json solver;  // every key present
  nlohmann::json sde;     // every key present
  nlohmann::json params;  // every key present

  /// Canonical JSON: the config with every default filled in.
  nlohmann::json resolved() const;
  std::string hash() const;
};

/// Validates and resolves a config. Relative model paths are taken from
/// base_dir. Throws InvalidInput on any schema violation.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {},
                              std::optional<std::uint64_t> seed_override = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

/// Bundled models:
///   figure-one        2-d self-similar model of the figure-one potential
///   exceptional-ratio 1-d a (sin 2 pi x - sin 2 pi 81 x), default a = 0.5
///   battery-1d        1-d a sin 2 pi x, default a = 0.5, rho = 4, three scales
/// Keys: "bundled", "rho", "n" (top scale index) and, for the 1-d models,
/// "amplitude".
MultiscaleModel bundled_model(const nlohmann::json& ref);

SolverConfig solver_config(const nlohmann::json& j);
SdeConfig sde_config(const nlohmann::json& j, std::uint64_t seed);

}  // namespace homog
