#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "mvpt/dataio/synthetic.hpp"
#include "mvpt/evalkit/retrieval.hpp"
#include "mvpt/model/config.hpp"
#include "mvpt/trainer/trainer.hpp"

namespace mvpt::cli {

// Everything a run can be configured with. Precedence: command-line flag,
// then config file, then these defaults.
struct RunConfig {
  model::ModelConfig model;
  trainer::TrainConfig train;
  evalkit::EvalConfig eval;
  dataio::SyntheticSpec synthetic;
  std::size_t n_train = 0;  // gen-data: tracks in the train split (0: all)
  std::uint64_t seed = 0;

  struct Paths {
    std::string data;        // dataset manifest
    std::string checkpoint;  // MVPW file
    std::string history;     // training history (JSON lines)
    std::string out;         // primary output of a subcommand
  } paths;

  RunConfig();
  // Applies `seed` to every component.
  void propagate_seed();
  void validate() const;
};

// Throws ConfigError for unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

}  // namespace mvpt::cli
